//! Region-verification engines behind a common trait, selected by name.
//!
//! `lifting` runs parameter lifting; the `smt-*` engines drive an external
//! solver over the incremental protocol, each with its own encoding: the
//! pMC equation system (`smt-es`), the solution-function form (`smt-sf`),
//! and the demonic/angelic pMDP systems. Every `sat` answer is re-validated
//! by exact model checking before it is reported as a counterexample.

use thiserror::Error;

use crate::elimination::{self, EliminationError};
use crate::lifting::{self, LiftingError, SchedulerQuantifier};
use crate::models::{
    ModelError, ModelKind, OptDir, ParametricModel, SpecKind, Specification,
};
use crate::regions::{Region, RegionVerdict, VerdictStatus};
use crate::smt::{
    encode_equation_system, encode_pmdp, encode_solution_function, CheckOutcome, PmdpForm, Query,
    SchedulerRelation, SmtError, SmtProblem, SolverConfig, SolverSession,
};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("unknown engine `{0}`")]
    UnknownEngine(String),
    #[error(transparent)]
    Lifting(#[from] LiftingError),
    #[error(transparent)]
    Smt(#[from] SmtError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Elimination(#[from] EliminationError),
    #[error("engine `{engine}` does not support this input: {reason}")]
    Unsupported { engine: &'static str, reason: String },
}

/// Hypothesis-directed query order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    Accepting,
    Rejecting,
}

/// A region-verification strategy bound to one model and specification.
pub trait RegionEngine {
    fn name(&self) -> &'static str;

    /// Full classification of a region: accepting, rejecting, or unknown.
    fn check_region(&mut self, region: &Region) -> Result<RegionVerdict, EngineError>;

    /// Directed check; engines may skip work for the opposite side.
    fn check_hypothesis(
        &mut self,
        region: &Region,
        hyp: Hypothesis,
    ) -> Result<RegionVerdict, EngineError> {
        let _ = hyp;
        self.check_region(region)
    }
}

/// Names accepted by [`make_engine`], in presentation order.
pub fn engine_names() -> &'static [&'static str] {
    &["lifting", "smt-es", "smt-sf", "smt-demonic", "smt-angelic"]
}

/// Construction options shared by all engines.
#[derive(Debug, Clone)]
pub struct EngineOptions {
    pub solver: SolverConfig,
    /// Strategy quantifier for pMDP checks (lifting engine).
    pub quantifier: SchedulerQuantifier,
    /// Cap for solution-function strategy enumeration.
    pub strategy_cap: usize,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            solver: SolverConfig::from_env(),
            quantifier: SchedulerQuantifier::Demonic,
            strategy_cap: 64,
        }
    }
}

/// Instantiates an engine by registry name.
pub fn make_engine<'m>(
    name: &str,
    model: &'m ParametricModel,
    spec: &Specification,
    options: &EngineOptions,
) -> Result<Box<dyn RegionEngine + 'm>, EngineError> {
    match name {
        "lifting" => Ok(Box::new(LiftingEngine {
            model,
            spec: spec.clone(),
            quantifier: options.quantifier,
        })),
        "smt-es" => {
            let problem = match model.kind {
                ModelKind::Pmc => encode_equation_system(model, spec, "x")?,
                ModelKind::Pmdp => {
                    return Err(EngineError::Unsupported {
                        engine: "smt-es",
                        reason: "pMDPs use smt-demonic or smt-angelic".into(),
                    })
                }
            };
            Ok(Box::new(SmtEngine::new(
                "smt-es",
                model,
                spec.clone(),
                problem,
                options,
                SchedulerQuantifier::Demonic,
            )))
        }
        "smt-sf" => {
            let problem = solution_function_problem(model, spec)?;
            Ok(Box::new(SmtEngine::new(
                "smt-sf",
                model,
                spec.clone(),
                problem,
                options,
                SchedulerQuantifier::Demonic,
            )))
        }
        "smt-demonic" | "smt-angelic" => {
            let relation = if name == "smt-demonic" {
                SchedulerRelation::Demonic
            } else {
                SchedulerRelation::Angelic
            };
            let problem = encode_pmdp(
                model,
                spec,
                relation,
                PmdpForm::EquationSystem,
                options.strategy_cap,
            )?;
            let quantifier = if name == "smt-demonic" {
                SchedulerQuantifier::Demonic
            } else {
                SchedulerQuantifier::Angelic
            };
            Ok(Box::new(SmtEngine::new(
                if name == "smt-demonic" {
                    "smt-demonic"
                } else {
                    "smt-angelic"
                },
                model,
                spec.clone(),
                problem,
                options,
                quantifier,
            )))
        }
        other => Err(EngineError::UnknownEngine(other.to_string())),
    }
}

fn solution_function_problem(
    model: &ParametricModel,
    spec: &Specification,
) -> Result<SmtProblem, EngineError> {
    if model.kind != ModelKind::Pmc {
        return Err(EngineError::Unsupported {
            engine: "smt-sf",
            reason: "pMDPs use smt-demonic or smt-angelic".into(),
        });
    }
    let order = elimination::order_by_name("forward").expect("builtin order");
    let f = match spec.kind {
        SpecKind::ReachProb => elimination::solution_function(
            model,
            &spec.target,
            order.as_ref(),
            elimination::Engine::StateElim,
        )?,
        SpecKind::ExpReward => {
            elimination::expected_reward_function(model, &spec.target, order.as_ref())?
        }
        SpecKind::BoundedReachProb(n) => {
            elimination::bounded_reach_function(model, &spec.target, n)?
        }
    };
    Ok(encode_solution_function(&f, spec, &model.params))
}

struct LiftingEngine<'m> {
    model: &'m ParametricModel,
    spec: Specification,
    quantifier: SchedulerQuantifier,
}

impl RegionEngine for LiftingEngine<'_> {
    fn name(&self) -> &'static str {
        "lifting"
    }

    fn check_region(&mut self, region: &Region) -> Result<RegionVerdict, EngineError> {
        let verdict = match self.model.kind {
            ModelKind::Pmc => lifting::check_region_pmc(self.model, region, &self.spec)?,
            ModelKind::Pmdp => {
                lifting::check_region_pmdp(self.model, region, &self.spec, self.quantifier)?
            }
        };
        Ok(verdict)
    }
}

struct SmtEngine<'m> {
    name: &'static str,
    model: &'m ParametricModel,
    spec: Specification,
    problem: SmtProblem,
    config: SolverConfig,
    quantifier: SchedulerQuantifier,
    session: Option<SolverSession>,
    session_failed: bool,
}

impl<'m> SmtEngine<'m> {
    fn new(
        name: &'static str,
        model: &'m ParametricModel,
        spec: Specification,
        problem: SmtProblem,
        options: &EngineOptions,
        quantifier: SchedulerQuantifier,
    ) -> Self {
        SmtEngine {
            name,
            model,
            spec,
            problem,
            config: options.solver.clone(),
            quantifier,
            session: None,
            session_failed: false,
        }
    }

    fn session(&mut self) -> Result<&mut SolverSession, EngineError> {
        if self.session.as_ref().map(|s| s.is_dead()).unwrap_or(false) {
            self.session = None;
        }
        if self.session.is_none() {
            if self.session_failed {
                return Err(EngineError::Smt(SmtError::SessionDead));
            }
            match SolverSession::start(&self.config, &self.problem) {
                Ok(s) => self.session = Some(s),
                Err(e) => {
                    self.session_failed = true;
                    return Err(EngineError::Smt(e));
                }
            }
        }
        Ok(self.session.as_mut().unwrap())
    }

    /// Exact satisfaction of the specification at one point, respecting the
    /// strategy quantifier for pMDPs.
    fn point_satisfies(&self, u: &crate::models::Instantiation) -> Option<bool> {
        let concrete = self.model.instantiate(u);
        if !concrete.is_well_defined() {
            return None;
        }
        let dir = match (self.model.kind, self.quantifier) {
            (ModelKind::Pmc, _) => OptDir::Max,
            (ModelKind::Pmdp, SchedulerQuantifier::Demonic) => {
                // all strategies must satisfy: check the hardest one
                if self.spec.relation.is_upper_bound() {
                    OptDir::Max
                } else {
                    OptDir::Min
                }
            }
            (ModelKind::Pmdp, SchedulerQuantifier::Angelic) => {
                if self.spec.relation.is_upper_bound() {
                    OptDir::Min
                } else {
                    OptDir::Max
                }
            }
        };
        let value = concrete.check(&self.spec, dir).ok()?;
        Some(value.satisfies(self.spec.relation, &self.spec.threshold))
    }

    fn run_query(
        &mut self,
        region: &Region,
        query: Query,
    ) -> Result<CheckOutcome, EngineError> {
        let outcome = {
            let session = self.session()?;
            session.check_region(query, region)?
        };
        Ok(outcome)
    }
}

impl RegionEngine for SmtEngine<'_> {
    fn name(&self) -> &'static str {
        self.name
    }

    fn check_region(&mut self, region: &Region) -> Result<RegionVerdict, EngineError> {
        self.check_hypothesis(region, Hypothesis::Accepting)
    }

    fn check_hypothesis(
        &mut self,
        region: &Region,
        hyp: Hypothesis,
    ) -> Result<RegionVerdict, EngineError> {
        let (first, second) = match hyp {
            Hypothesis::Accepting => (Query::Accepting, Query::Rejecting),
            Hypothesis::Rejecting => (Query::Rejecting, Query::Accepting),
        };
        let mut counterexample = None;
        for query in [first, second] {
            match self.run_query(region, query)? {
                CheckOutcome::Unsat => {
                    let status = match query {
                        Query::Accepting => VerdictStatus::AllSat,
                        Query::Rejecting => VerdictStatus::AllViolate,
                    };
                    let mut verdict = RegionVerdict::new(status);
                    verdict.counterexample = counterexample;
                    return Ok(verdict);
                }
                CheckOutcome::Sat(model) => {
                    // a witness of the accepting query violates the spec; a
                    // witness of the rejecting query satisfies it
                    if let Some(u) = model {
                        if region.contains(&u) {
                            match (query, self.point_satisfies(&u)) {
                                (Query::Accepting, Some(false)) => {
                                    counterexample.get_or_insert(u);
                                }
                                (Query::Rejecting, Some(true)) => {
                                    // region provably not rejecting; keep going
                                }
                                _ => {}
                            }
                        }
                    }
                }
                CheckOutcome::UnknownTimeout => {
                    let mut verdict = RegionVerdict::new(VerdictStatus::Unknown);
                    verdict.counterexample = counterexample;
                    return Ok(verdict);
                }
            }
        }
        let mut verdict = RegionVerdict::new(VerdictStatus::Unknown);
        verdict.counterexample = counterexample;
        Ok(verdict)
    }
}
