//! Complete region verification through an external SMT solver.
//!
//! Reachability and reward equation systems, solution-function thresholds,
//! demonic/angelic pMDP systems, and graph-preservation conditions are
//! encoded as quantifier-free nonlinear real arithmetic. Every
//! rational-function comparison is transformed into polynomial constraints
//! before storage, so emitted formulas only ever mention polynomials.
//!
//! Verdicts trust `unsat` answers only: a `sat` answer yields a candidate
//! counterexample that callers re-validate by exact model checking.

mod script;
mod session;

use std::collections::BTreeSet;

use thiserror::Error;

use crate::models::{ModelKind, ParametricModel, Relation, SpecKind, Specification};
use crate::ratfunc::{Polynomial, RationalFunction, Var};
use crate::regions::Region;

pub use script::{script_for_formula, script_for_query, Query};
pub use session::{session_check, CheckOutcome, SolverConfig, SolverSession};

/// Environment variable naming the solver command line.
pub const SMT_CMD_ENV: &str = "PARAMSYNTH_SMT_CMD";

#[derive(Debug, Error)]
pub enum SmtError {
    #[error("failed to spawn SMT solver `{cmd}`: {reason}")]
    SolverSpawnFailure { cmd: String, reason: String },
    #[error("SMT protocol error: {0}")]
    ProtocolParseError(String),
    #[error("solver session is no longer usable")]
    SessionDead,
    #[error("demonic/angelic solution-function form needs {0} strategies, cap is {1}")]
    StrategyCapExceeded(usize, usize),
    #[error("{0}")]
    Encoding(String),
}

/// Comparison of a polynomial against zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rel {
    Lt,
    Leq,
    Eq,
    Geq,
    Gt,
    Neq,
}

impl Rel {
    fn smt_op(&self) -> &'static str {
        match self {
            Rel::Lt => "<",
            Rel::Leq => "<=",
            Rel::Eq => "=",
            Rel::Geq => ">=",
            Rel::Gt => ">",
            Rel::Neq => "distinct",
        }
    }

    /// Direction flip under multiplication by a negative quantity;
    /// strictness is preserved.
    fn flipped(&self) -> Rel {
        match self {
            Rel::Lt => Rel::Gt,
            Rel::Leq => Rel::Geq,
            Rel::Gt => Rel::Lt,
            Rel::Geq => Rel::Leq,
            Rel::Eq => Rel::Eq,
            Rel::Neq => Rel::Neq,
        }
    }
}

impl From<Relation> for Rel {
    fn from(r: Relation) -> Rel {
        match r {
            Relation::Less => Rel::Lt,
            Relation::Leq => Rel::Leq,
            Relation::Greater => Rel::Gt,
            Relation::Geq => Rel::Geq,
        }
    }
}

/// Tree of polynomial constraints combined by boolean connectives. Every
/// constraint compares a polynomial with zero.
#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    True,
    False,
    /// `polynomial REL 0`
    Constraint(Polynomial, Rel),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Not(Box<Formula>),
}

impl Formula {
    pub fn and(parts: Vec<Formula>) -> Formula {
        let mut flat = Vec::new();
        for p in parts {
            match p {
                Formula::True => {}
                Formula::And(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => Formula::True,
            1 => flat.into_iter().next().unwrap(),
            _ => Formula::And(flat),
        }
    }

    pub fn or(parts: Vec<Formula>) -> Formula {
        let mut flat = Vec::new();
        for p in parts {
            match p {
                Formula::False => {}
                Formula::Or(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => Formula::False,
            1 => flat.into_iter().next().unwrap(),
            _ => Formula::Or(flat),
        }
    }

    /// All variables mentioned by constraints, ascending by id.
    pub fn variables(&self) -> Vec<Var> {
        let mut acc = BTreeSet::new();
        self.collect_vars(&mut acc);
        acc.into_iter().collect()
    }

    fn collect_vars(&self, acc: &mut BTreeSet<Var>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Constraint(p, _) => acc.extend(p.variables()),
            Formula::And(parts) | Formula::Or(parts) => {
                for p in parts {
                    p.collect_vars(acc);
                }
            }
            Formula::Not(inner) => inner.collect_vars(acc),
        }
    }
}

/// Transforms `f REL rhs` (with `f` a rational function and `rhs` a
/// polynomial) into a formula over polynomial constraints. For non-constant
/// denominators the sign of the denominator is case-split; equality adds the
/// nonzero-denominator side condition.
pub fn transform_rf_constraint(f: &RationalFunction, rel: Rel, rhs: &Polynomial) -> Formula {
    let g1 = f.numerator();
    let g2 = f.denominator();
    let diff = &(g1 - &(rhs * g2));
    if g2.is_one() {
        return Formula::Constraint(diff.clone(), rel);
    }
    let den_nonzero = Formula::Constraint(g2.clone(), Rel::Neq);
    match rel {
        Rel::Eq => Formula::and(vec![
            den_nonzero,
            Formula::Constraint(diff.clone(), Rel::Eq),
        ]),
        Rel::Neq => Formula::and(vec![
            den_nonzero,
            Formula::Constraint(diff.clone(), Rel::Neq),
        ]),
        _ => Formula::and(vec![
            den_nonzero,
            Formula::or(vec![
                Formula::and(vec![
                    Formula::Constraint(g2.clone(), Rel::Gt),
                    Formula::Constraint(diff.clone(), rel),
                ]),
                Formula::and(vec![
                    Formula::Constraint(g2.clone(), Rel::Lt),
                    Formula::Constraint(diff.clone(), rel.flipped()),
                ]),
            ]),
        ]),
    }
}

/// The box constraints of a rectangular region.
pub fn region_formula(r: &Region) -> Formula {
    let mut parts = Vec::new();
    for (v, lo, hi) in r.intervals() {
        let p = Polynomial::var(*v);
        parts.push(Formula::Constraint(
            &p - &Polynomial::constant(lo.clone()),
            Rel::Geq,
        ));
        parts.push(Formula::Constraint(
            &Polynomial::constant(hi.clone()) - &p,
            Rel::Geq,
        ));
    }
    Formula::and(parts)
}

/// A region-verification problem ready for a solver session: the base
/// assertions are region-independent; the accept/reject sides carry the
/// negated and plain threshold comparison respectively. `unsat` of
/// `base ∧ accept ∧ Φ(R)` certifies that the region is accepting, `unsat`
/// of `base ∧ reject ∧ Φ(R)` that it is rejecting.
#[derive(Debug, Clone)]
pub struct SmtProblem {
    pub params: Vec<Var>,
    pub aux_vars: Vec<Var>,
    pub base: Formula,
    pub accept_assert: Formula,
    pub reject_assert: Formula,
}

fn state_var(prefix: &str, s: usize) -> Var {
    Var::intern(&format!("{}!{}", prefix, s))
}

/// Bounds `0 <= x <= 1` (or `x >= 0` for rewards) for auxiliary variables.
/// The true value vectors satisfy them, so refutation soundness is kept while
/// spurious models shrink.
fn aux_bounds(vars: &[Var], bounded_above: bool) -> Formula {
    let mut parts = Vec::new();
    for &v in vars {
        let p = Polynomial::var(v);
        parts.push(Formula::Constraint(p.clone(), Rel::Geq));
        if bounded_above {
            parts.push(Formula::Constraint(
                &Polynomial::one() - &p,
                Rel::Geq,
            ));
        }
    }
    Formula::and(parts)
}

fn threshold_asserts(init_var: Var, spec: &Specification) -> (Formula, Formula) {
    let x = Polynomial::var(init_var);
    let lambda = Polynomial::constant(spec.threshold.clone());
    let diff = &x - &lambda;
    let accept = Formula::Constraint(diff.clone(), Rel::from(spec.relation.negated()));
    let reject = Formula::Constraint(diff, Rel::from(spec.relation));
    (accept, reject)
}

/// Bellman equation rows for one state under one action, as polynomial
/// constraints relating `x_s` to its successors. `rel` is `Eq` for equation
/// systems, `Leq`/`Geq` for the strategy-quantified LP forms.
fn row_constraint(
    m: &ParametricModel,
    state: usize,
    action: usize,
    vars: &[Var],
    target: &BTreeSet<usize>,
    cannot: &BTreeSet<usize>,
    reward: Option<&RationalFunction>,
    rel: Rel,
) -> Formula {
    // x_s REL rew(s) + sum P(s,s') x_{s'}; rewritten over the common
    // denominator of the row functions.
    let mut rhs = match reward {
        Some(f) => f.clone(),
        None => RationalFunction::zero(),
    };
    for (succ, f) in &m.actions[state][action].row {
        let contrib = if target.contains(succ) {
            match reward {
                // targets contribute probability 1 for reachability, 0 reward
                Some(_) => continue,
                None => f.clone(),
            }
        } else if cannot.contains(succ) {
            continue;
        } else {
            f.mul(&RationalFunction::var(vars[*succ]))
        };
        rhs = rhs.add(&contrib);
    }
    // x_s - rhs REL' 0 with REL' mirroring rel on the left-hand side.
    let lhs = RationalFunction::var(vars[state]).sub(&rhs);
    transform_rf_constraint(&lhs, rel, &Polynomial::zero())
}

/// Equation-system formula for a pMC: fixed 0/1 rows, Bellman equalities,
/// threshold selectors on the initial state.
pub fn encode_equation_system(
    m: &ParametricModel,
    spec: &Specification,
    prefix: &str,
) -> Result<SmtProblem, SmtError> {
    if m.kind != ModelKind::Pmc {
        return Err(SmtError::Encoding("equation system form needs a pMC".into()));
    }
    let target = m
        .target_states(&spec.target)
        .map_err(|e| SmtError::Encoding(e.to_string()))?;
    let (_, cannot) = m.reach_states(&target);
    let reward = matches!(spec.kind, SpecKind::ExpReward);
    if matches!(spec.kind, SpecKind::BoundedReachProb(_)) {
        return Err(SmtError::Encoding(
            "bounded reachability is not encoded; unroll the model instead".into(),
        ));
    }
    if reward && m.rewards.is_none() {
        return Err(SmtError::Encoding("model has no reward function".into()));
    }
    if reward && cannot.iter().any(|s| m.reachable_from_initial().contains(s)) {
        return Err(SmtError::Encoding(
            "expected reward diverges: target not almost surely reached".into(),
        ));
    }
    let vars: Vec<Var> = (0..m.num_states).map(|s| state_var(prefix, s)).collect();
    let mut parts = Vec::new();
    for s in 0..m.num_states {
        let x = Polynomial::var(vars[s]);
        if target.contains(&s) {
            let value = if reward {
                Polynomial::zero()
            } else {
                Polynomial::one()
            };
            parts.push(Formula::Constraint(&x - &value, Rel::Eq));
        } else if cannot.contains(&s) {
            parts.push(Formula::Constraint(x, Rel::Eq));
        } else {
            let rew = m
                .rewards
                .as_ref()
                .filter(|_| reward)
                .map(|table| &table[s][0]);
            parts.push(row_constraint(
                m, s, 0, &vars, &target, &cannot, rew, Rel::Eq,
            ));
        }
    }
    parts.push(aux_bounds(&vars, !reward));
    let (accept, reject) = threshold_asserts(vars[m.initial], spec);
    Ok(SmtProblem {
        params: m.params.clone(),
        aux_vars: vars,
        base: Formula::and(parts),
        accept_assert: accept,
        reject_assert: reject,
    })
}

/// Solution-function formula: parameters only.
pub fn encode_solution_function(
    f: &RationalFunction,
    spec: &Specification,
    params: &[Var],
) -> SmtProblem {
    let lambda = Polynomial::constant(spec.threshold.clone());
    let accept = transform_rf_constraint(f, Rel::from(spec.relation.negated()), &lambda);
    let reject = transform_rf_constraint(f, Rel::from(spec.relation), &lambda);
    SmtProblem {
        params: params.to_vec(),
        aux_vars: Vec::new(),
        base: Formula::True,
        accept_assert: accept,
        reject_assert: reject,
    }
}

/// Resolution mode for pMDP encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchedulerRelation {
    Demonic,
    Angelic,
}

/// Syntactic form of the pMDP encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PmdpForm {
    EquationSystem,
    SolutionFunctions,
}

/// Quantified-strategy encodings for pMDPs.
///
/// The existential-strategy side is a per-state disjunction over the action
/// equalities; the universal side is the LP relaxation whose inequality
/// direction is chosen so that any feasible vector bounds the quantified
/// optimum in the direction the asserted threshold needs.
pub fn encode_pmdp(
    m: &ParametricModel,
    spec: &Specification,
    rel: SchedulerRelation,
    form: PmdpForm,
    strategy_cap: usize,
) -> Result<SmtProblem, SmtError> {
    if m.kind != ModelKind::Pmdp {
        return Err(SmtError::Encoding("pMDP encoding needs a pMDP".into()));
    }
    if !matches!(spec.kind, SpecKind::ReachProb) {
        return Err(SmtError::Encoding(
            "pMDP encodings support unbounded reachability only".into(),
        ));
    }
    match form {
        PmdpForm::EquationSystem => encode_pmdp_es(m, spec, rel),
        PmdpForm::SolutionFunctions => encode_pmdp_sf(m, spec, rel, strategy_cap),
    }
}

fn encode_pmdp_es(
    m: &ParametricModel,
    spec: &Specification,
    rel: SchedulerRelation,
) -> Result<SmtProblem, SmtError> {
    let target = m
        .target_states(&spec.target)
        .map_err(|e| SmtError::Encoding(e.to_string()))?;
    let (_, cannot) = m.reach_states(&target);

    // accept query asserts the negated relation, reject the plain one
    let accept_rel = spec.relation.negated();
    let reject_rel = spec.relation;

    // Existential strategy quantification: disjunction over action equalities.
    // Universal quantification: inequalities bounding the needed optimum.
    let build = |exists: bool, asserted: Relation, prefix: &str| -> (Vec<Var>, Formula) {
        let vars: Vec<Var> = (0..m.num_states).map(|s| state_var(prefix, s)).collect();
        let mut parts = Vec::new();
        for s in 0..m.num_states {
            let x = Polynomial::var(vars[s]);
            if target.contains(&s) {
                parts.push(Formula::Constraint(&x - &Polynomial::one(), Rel::Eq));
                continue;
            }
            if cannot.contains(&s) {
                parts.push(Formula::Constraint(x, Rel::Eq));
                continue;
            }
            if exists {
                let arms: Vec<Formula> = (0..m.actions[s].len())
                    .map(|a| row_constraint(m, s, a, &vars, &target, &cannot, None, Rel::Eq))
                    .collect();
                parts.push(Formula::or(arms));
            } else {
                // Upper-bound assertions need the maximum bounded from above
                // (x >= every action value); lower bounds the minimum (x <=).
                let dir = if asserted.is_upper_bound() {
                    Rel::Geq
                } else {
                    Rel::Leq
                };
                for a in 0..m.actions[s].len() {
                    parts.push(row_constraint(m, s, a, &vars, &target, &cannot, None, dir));
                }
            }
        }
        parts.push(aux_bounds(&vars, true));
        let x = Polynomial::var(vars[m.initial]);
        let lambda = Polynomial::constant(spec.threshold.clone());
        parts.push(Formula::Constraint(&x - &lambda, Rel::from(asserted)));
        (vars, Formula::and(parts))
    };

    // demonic accept refutes ∃u∃σ, demonic reject refutes ∃u∀σ;
    // angelic swaps the strategy quantifier.
    let (accept_exists, reject_exists) = match rel {
        SchedulerRelation::Demonic => (true, false),
        SchedulerRelation::Angelic => (false, true),
    };
    let (acc_vars, accept) = build(accept_exists, accept_rel, "xacc");
    let (rej_vars, reject) = build(reject_exists, reject_rel, "xrej");
    let mut aux = acc_vars;
    aux.extend(rej_vars);
    Ok(SmtProblem {
        params: m.params.clone(),
        aux_vars: aux,
        base: Formula::True,
        accept_assert: accept,
        reject_assert: reject,
    })
}

fn encode_pmdp_sf(
    m: &ParametricModel,
    spec: &Specification,
    rel: SchedulerRelation,
    strategy_cap: usize,
) -> Result<SmtProblem, SmtError> {
    let strategies = enumerate_strategies(m, strategy_cap)?;
    let mut functions = Vec::with_capacity(strategies.len());
    let order = crate::elimination::order_by_name("forward").expect("builtin order");
    for strat in &strategies {
        let induced = induced_pmc(m, strat);
        let f = crate::elimination::solution_function(
            &induced,
            &spec.target,
            order.as_ref(),
            crate::elimination::Engine::StateElim,
        )
        .map_err(|e| SmtError::Encoding(e.to_string()))?;
        functions.push(f);
    }
    let lambda = Polynomial::constant(spec.threshold.clone());
    let accept_rel = Rel::from(spec.relation.negated());
    let reject_rel = Rel::from(spec.relation);
    let accept_parts: Vec<Formula> = functions
        .iter()
        .map(|f| transform_rf_constraint(f, accept_rel, &lambda))
        .collect();
    let reject_parts: Vec<Formula> = functions
        .iter()
        .map(|f| transform_rf_constraint(f, reject_rel, &lambda))
        .collect();
    let (accept, reject) = match rel {
        // ∃σ: disjunction; ∀σ: conjunction, as for the equation systems.
        SchedulerRelation::Demonic => (Formula::or(accept_parts), Formula::and(reject_parts)),
        SchedulerRelation::Angelic => (Formula::and(accept_parts), Formula::or(reject_parts)),
    };
    Ok(SmtProblem {
        params: m.params.clone(),
        aux_vars: Vec::new(),
        base: Formula::True,
        accept_assert: accept,
        reject_assert: reject,
    })
}

/// All memoryless deterministic strategies as per-state action indices.
fn enumerate_strategies(
    m: &ParametricModel,
    cap: usize,
) -> Result<Vec<Vec<usize>>, SmtError> {
    let mut count: usize = 1;
    for acts in &m.actions {
        count = count.saturating_mul(acts.len());
        if count > cap {
            return Err(SmtError::StrategyCapExceeded(count, cap));
        }
    }
    let mut strategies = vec![vec![0usize; m.num_states]];
    for s in 0..m.num_states {
        let n = m.actions[s].len();
        if n == 1 {
            continue;
        }
        let mut next = Vec::with_capacity(strategies.len() * n);
        for strat in &strategies {
            for a in 0..n {
                let mut c = strat.clone();
                c[s] = a;
                next.push(c);
            }
        }
        strategies = next;
    }
    Ok(strategies)
}

/// The pMC induced by a memoryless strategy.
fn induced_pmc(m: &ParametricModel, strategy: &[usize]) -> ParametricModel {
    let actions = m
        .actions
        .iter()
        .enumerate()
        .map(|(s, acts)| vec![acts[strategy[s]].clone()])
        .collect();
    let rewards = m.rewards.as_ref().map(|table| {
        table
            .iter()
            .enumerate()
            .map(|(s, per_action)| vec![per_action[strategy[s]].clone()])
            .collect()
    });
    ParametricModel {
        kind: ModelKind::Pmc,
        num_states: m.num_states,
        initial: m.initial,
        params: m.params.clone(),
        actions,
        rewards,
        labels: m.labels.clone(),
    }
}

/// `Φ(R) ∧ ¬graph-preserving`: satisfiable iff the region is not
/// graph-preserving; a model is a witness point.
pub fn encode_graph_preservation(m: &ParametricModel, r: &Region) -> Formula {
    let mut conditions = Vec::new();
    for acts in &m.actions {
        for act in acts {
            let mut sum = RationalFunction::zero();
            for (_, f) in &act.row {
                conditions.push(transform_rf_constraint(f, Rel::Gt, &Polynomial::zero()));
                sum = sum.add(f);
            }
            conditions.push(transform_rf_constraint(&sum, Rel::Eq, &Polynomial::one()));
        }
    }
    if let Some(rewards) = &m.rewards {
        for per_action in rewards {
            for f in per_action {
                conditions.push(transform_rf_constraint(f, Rel::Geq, &Polynomial::zero()));
            }
        }
    }
    Formula::and(vec![
        region_formula(r),
        Formula::Not(Box::new(Formula::and(conditions))),
    ])
}

#[cfg(test)]
mod tests;
