//! Approximate region verification by parameter lifting.
//!
//! Over a graph-preserving rectangular region, every locally monotone
//! transition function attains its extrema at interval bounds of the
//! parameters occurring at that state. Replacing each state's parameter
//! choice by nondeterminism turns a pMC into a non-parametric MDP (and a pMDP
//! into a stochastic game) whose optimal values bound the parametric model's
//! values over the whole region.
//!
//! Games are solved numerically first (floating value iteration produces a
//! candidate strategy profile) and certified by exact rational policy
//! iteration, so verdicts never depend on floating-point tolerances.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};
use thiserror::Error;

use crate::models::{
    CheckValue, ConcreteAction, ConcreteModel, Instantiation, ModelError, ModelKind, OptDir,
    Relation, SpecKind, Specification,
};
use crate::ratfunc::{poly_gcd, Evaluated, Polynomial, Rational, RationalFunction, Var};
use crate::regions::{check_graph_preserving, GraphPreservation, Region, RegionVerdict, VerdictStatus};

#[derive(Debug, Error)]
pub enum LiftingError {
    #[error("state {0} is not locally monotone (no common multilinear denominator)")]
    NotLocallyMonotone(usize),
    #[error("region is not graph-preserving: {0}")]
    RegionNotGraphPreserving(String),
    #[error("expected reward diverges on the region")]
    RewardDiverges,
    #[error("model has no reward function")]
    NoRewards,
    #[error("parameter lifting does not support {0}; unroll bounded properties manually")]
    UnsupportedSpec(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Value-iteration convergence threshold for the floating warm-start phase.
/// The exact certification pass removes any dependence on this number.
const VI_RELATIVE_EPS: f64 = 1e-8;
const VI_MAX_ITERS: usize = 100_000;

/// Reusable symbolic template: per state and action the parameters to
/// substitute and the raw function rows. Building the numeric game for a new
/// region only re-evaluates functions at interval bounds.
#[derive(Debug, Clone)]
pub struct SubstitutionTemplate {
    /// per state, per action: sorted parameters occurring in the row (and
    /// reward for reward templates)
    state_params: Vec<Vec<Vec<Var>>>,
}

/// Numeric substitution MDP for a pMC: one action per vertex assignment of
/// the state's own parameters. Rows are exact rationals.
#[derive(Debug, Clone)]
pub struct SubstitutionMdp {
    pub model: ConcreteModel,
    /// The vertex assignment realised by each action.
    pub assignments: Vec<Vec<Instantiation>>,
    pub target: BTreeSet<usize>,
}

/// Numeric substitution game for a pMDP. Player-circle states are the
/// original states choosing original actions; player-box states are
/// state/action pairs choosing vertex assignments.
#[derive(Debug, Clone)]
pub struct SubstitutionSg {
    pub model: ConcreteModel,
    /// Number of circle states (the original ones); box states follow.
    pub circle_states: usize,
    pub assignments: Vec<Vec<Instantiation>>,
    pub target: BTreeSet<usize>,
}

/// Verifies local monotonicity: at every state (and action) the outgoing
/// functions, and the reward when requested, share a multilinear common
/// denominator with multilinear numerators.
pub fn check_locally_monotone(
    m: &crate::models::ParametricModel,
    with_rewards: bool,
) -> Result<(), LiftingError> {
    for (s, acts) in m.actions.iter().enumerate() {
        for (a, act) in acts.iter().enumerate() {
            let mut functions: Vec<&RationalFunction> =
                act.row.iter().map(|(_, f)| f).collect();
            let reward_slot;
            if with_rewards {
                if let Some(table) = &m.rewards {
                    reward_slot = table[s][a].clone();
                    if !reward_slot.is_zero() {
                        functions.push(&reward_slot);
                    }
                }
            }
            let mut lcm = Polynomial::one();
            for f in &functions {
                let den = f.denominator();
                let g = poly_gcd(&lcm, den);
                lcm = &lcm.exact_div(&g) * den;
            }
            if !lcm.is_multilinear() {
                return Err(LiftingError::NotLocallyMonotone(s));
            }
            for f in &functions {
                let scaled = f.numerator() * &lcm.exact_div(f.denominator());
                if !scaled.is_multilinear() {
                    return Err(LiftingError::NotLocallyMonotone(s));
                }
            }
        }
    }
    Ok(())
}

fn require_graph_preserving(
    m: &crate::models::ParametricModel,
    r: &Region,
) -> Result<(), LiftingError> {
    match check_graph_preserving(m, r) {
        GraphPreservation::Preserving => Ok(()),
        GraphPreservation::NotPreserving(witness) => Err(
            LiftingError::RegionNotGraphPreserving(format!("witness {}", witness)),
        ),
        GraphPreservation::NeedsSolver(_) => Err(LiftingError::RegionNotGraphPreserving(
            "undecided by the vertex fast path; check the region with the SMT engine".into(),
        )),
    }
}

impl SubstitutionTemplate {
    pub fn new(m: &crate::models::ParametricModel, with_rewards: bool) -> Self {
        let state_params = m
            .actions
            .iter()
            .enumerate()
            .map(|(s, acts)| {
                (0..acts.len())
                    .map(|a| {
                        let mut vars = m.params_at(s, a);
                        if with_rewards {
                            if let Some(table) = &m.rewards {
                                for v in table[s][a].variables() {
                                    if !vars.contains(&v) {
                                        vars.push(v);
                                    }
                                }
                            }
                        }
                        vars.sort();
                        vars
                    })
                    .collect()
            })
            .collect();
        SubstitutionTemplate { state_params }
    }

    /// Vertex assignments of `r` restricted to one state's parameters.
    fn vertex_assignments(&self, s: usize, a: usize, r: &Region) -> Vec<Instantiation> {
        let vars = &self.state_params[s][a];
        let mut result: Vec<BTreeMap<Var, Rational>> = vec![BTreeMap::new()];
        for &v in vars {
            let (lo, hi) = r
                .interval_of(v)
                .expect("region covers all model parameters");
            let choices: Vec<&Rational> = if lo == hi { vec![lo] } else { vec![lo, hi] };
            let mut next = Vec::with_capacity(result.len() * choices.len());
            for partial in &result {
                for c in &choices {
                    let mut m = partial.clone();
                    m.insert(v, (*c).clone());
                    next.push(m);
                }
            }
            result = next;
        }
        result.into_iter().map(Instantiation::new).collect()
    }
}

fn evaluate_row(
    row: &[(usize, RationalFunction)],
    u: &Instantiation,
) -> Result<Vec<(usize, Rational)>, LiftingError> {
    let mut out = Vec::with_capacity(row.len());
    for (succ, f) in row {
        match f.evaluate(&u.values) {
            Ok(Evaluated::Value(v)) => out.push((*succ, v)),
            _ => {
                return Err(LiftingError::RegionNotGraphPreserving(format!(
                    "function {} undefined at a vertex",
                    f
                )))
            }
        }
    }
    Ok(out)
}

/// Builds the substitution MDP of a pMC over a region: per state, one action
/// per vertex assignment of that state's parameters, deduplicated when two
/// assignments induce the same numeric row (and reward).
pub fn build_substitution(
    m: &crate::models::ParametricModel,
    r: &Region,
    spec_target: &str,
    with_rewards: bool,
) -> Result<SubstitutionMdp, LiftingError> {
    if m.kind != ModelKind::Pmc {
        return Err(LiftingError::UnsupportedSpec(
            "pMC substitution on a pMDP; use the game construction".into(),
        ));
    }
    r.covers(m)
        .map_err(|e| LiftingError::RegionNotGraphPreserving(e.to_string()))?;
    check_locally_monotone(m, with_rewards)?;
    require_graph_preserving(m, r)?;
    let target = m
        .target_states(spec_target)
        .map_err(LiftingError::Model)?;
    let template = SubstitutionTemplate::new(m, with_rewards);
    let mut actions: Vec<Vec<ConcreteAction>> = Vec::with_capacity(m.num_states);
    let mut assignments: Vec<Vec<Instantiation>> = Vec::with_capacity(m.num_states);
    let mut rewards: Option<Vec<Vec<Rational>>> = if with_rewards {
        Some(Vec::with_capacity(m.num_states))
    } else {
        None
    };
    for s in 0..m.num_states {
        let mut acts = Vec::new();
        let mut assigns = Vec::new();
        let mut rews = Vec::new();
        let mut seen: Vec<(Vec<(usize, Rational)>, Option<Rational>)> = Vec::new();
        for u in template.vertex_assignments(s, 0, r) {
            let row = evaluate_row(&m.actions[s][0].row, &u)?;
            let rew = if with_rewards {
                let table = m.rewards.as_ref().ok_or(LiftingError::NoRewards)?;
                match table[s][0].evaluate(&u.values) {
                    Ok(Evaluated::Value(v)) => Some(v),
                    _ => {
                        return Err(LiftingError::RegionNotGraphPreserving(
                            "reward undefined at a vertex".into(),
                        ))
                    }
                }
            } else {
                None
            };
            let key = (row.clone(), rew.clone());
            if seen.contains(&key) {
                continue;
            }
            seen.push(key);
            acts.push(ConcreteAction { row });
            assigns.push(u);
            rews.push(rew.unwrap_or_else(Rational::zero));
        }
        actions.push(acts);
        assigns.shrink_to_fit();
        assignments.push(assigns);
        if let Some(table) = rewards.as_mut() {
            table.push(rews);
        }
    }
    let mut labels = BTreeMap::new();
    labels.insert(spec_target.to_string(), target.clone());
    Ok(SubstitutionMdp {
        model: ConcreteModel {
            kind: ModelKind::Pmdp,
            num_states: m.num_states,
            initial: m.initial,
            actions,
            rewards,
            labels,
            defect: None,
        },
        assignments,
        target,
    })
}

/// Builds the substitution game of a pMDP: circle states keep the original
/// action choice (moving with probability one to a box state); box states
/// choose vertex assignments.
pub fn build_substitution_game(
    m: &crate::models::ParametricModel,
    r: &Region,
    spec_target: &str,
) -> Result<SubstitutionSg, LiftingError> {
    if m.kind != ModelKind::Pmdp {
        return Err(LiftingError::UnsupportedSpec(
            "game substitution needs a pMDP".into(),
        ));
    }
    r.covers(m)
        .map_err(|e| LiftingError::RegionNotGraphPreserving(e.to_string()))?;
    check_locally_monotone(m, false)?;
    require_graph_preserving(m, r)?;
    let target = m
        .target_states(spec_target)
        .map_err(LiftingError::Model)?;
    let template = SubstitutionTemplate::new(m, false);

    let n = m.num_states;
    let mut box_index: Vec<Vec<usize>> = Vec::with_capacity(n);
    let mut next = n;
    for (_s, acts) in m.actions.iter().enumerate() {
        let mut per_action = Vec::with_capacity(acts.len());
        for _ in acts {
            per_action.push(next);
            next += 1;
        }
        box_index.push(per_action);
    }
    let total = next;
    let mut actions: Vec<Vec<ConcreteAction>> = vec![Vec::new(); total];
    let mut assignments: Vec<Vec<Instantiation>> = vec![Vec::new(); total];
    for s in 0..n {
        for (a, &bx) in box_index[s].iter().enumerate() {
            // circle -> box move with probability one
            actions[s].push(ConcreteAction {
                row: vec![(bx, Rational::one())],
            });
            assignments[s].push(Instantiation::new(BTreeMap::new()));
            // box state: vertex assignments over the row's parameters
            let mut seen: Vec<Vec<(usize, Rational)>> = Vec::new();
            for u in template.vertex_assignments(s, a, r) {
                let row = evaluate_row(&m.actions[s][a].row, &u)?;
                if seen.contains(&row) {
                    continue;
                }
                seen.push(row.clone());
                actions[bx].push(ConcreteAction { row });
                assignments[bx].push(u);
            }
        }
    }
    let mut labels = BTreeMap::new();
    labels.insert(spec_target.to_string(), target.clone());
    Ok(SubstitutionSg {
        model: ConcreteModel {
            kind: ModelKind::Pmdp,
            num_states: total,
            initial: m.initial,
            actions,
            rewards: None,
            labels,
            defect: None,
        },
        circle_states: n,
        assignments,
        target,
    })
}

/// Floating value iteration to convergence; returns the greedy policy. The
/// `dir_of` closure assigns each state its optimization direction.
fn value_iteration_policy(
    model: &ConcreteModel,
    target: &BTreeSet<usize>,
    rewards: bool,
    dir_of: &dyn Fn(usize) -> OptDir,
) -> Vec<usize> {
    let n = model.num_states;
    let float_rows: Vec<Vec<Vec<(usize, f64)>>> = model
        .actions
        .iter()
        .map(|acts| {
            acts.iter()
                .map(|act| {
                    act.row
                        .iter()
                        .map(|(succ, v)| (*succ, rational_to_f64(v)))
                        .collect()
                })
                .collect()
        })
        .collect();
    let float_rewards: Option<Vec<Vec<f64>>> = model.rewards.as_ref().map(|table| {
        table
            .iter()
            .map(|per| per.iter().map(rational_to_f64).collect())
            .collect()
    });
    let mut x = vec![0.0f64; n];
    if !rewards {
        for &t in target {
            x[t] = 1.0;
        }
    }
    for _ in 0..VI_MAX_ITERS {
        let mut delta: f64 = 0.0;
        for s in 0..n {
            if target.contains(&s) {
                continue;
            }
            let mut best: Option<f64> = None;
            for (a, row) in float_rows[s].iter().enumerate() {
                let mut v: f64 = row.iter().map(|&(succ, p)| p * x[succ]).sum();
                if rewards {
                    v += float_rewards.as_ref().unwrap()[s][a];
                }
                best = Some(match (best, dir_of(s)) {
                    (None, _) => v,
                    (Some(b), OptDir::Max) => b.max(v),
                    (Some(b), OptDir::Min) => b.min(v),
                });
            }
            let v = best.unwrap_or(0.0);
            let diff = (v - x[s]).abs();
            let rel = if v.abs() > 1e-300 { diff / v.abs() } else { diff };
            delta = delta.max(rel);
            x[s] = v;
        }
        if delta < VI_RELATIVE_EPS {
            break;
        }
    }
    // greedy policy, lowest action index on ties
    (0..n)
        .map(|s| {
            if target.contains(&s) || float_rows[s].len() == 1 {
                return 0;
            }
            let mut best_a = 0;
            let mut best_v: Option<f64> = None;
            for (a, row) in float_rows[s].iter().enumerate() {
                let mut v: f64 = row.iter().map(|&(succ, p)| p * x[succ]).sum();
                if rewards {
                    v += float_rewards.as_ref().unwrap()[s][a];
                }
                let better = match (best_v, dir_of(s)) {
                    (None, _) => true,
                    (Some(b), OptDir::Max) => v > b,
                    (Some(b), OptDir::Min) => v < b,
                };
                if better {
                    best_a = a;
                    best_v = Some(v);
                }
            }
            best_a
        })
        .collect()
}

fn rational_to_f64(r: &Rational) -> f64 {
    let num = r.numer();
    let den = r.denom();
    let nf = num.to_string().parse::<f64>().unwrap_or(0.0);
    let df = den.to_string().parse::<f64>().unwrap_or(1.0);
    nf / df
}

/// Exact optimum of a substitution MDP: floating warm start, certified by
/// rational policy iteration.
pub fn solve_mdp(
    sub: &SubstitutionMdp,
    dir: OptDir,
    rewards: bool,
) -> Result<(Vec<Rational>, Vec<usize>), LiftingError> {
    let seed = value_iteration_policy(&sub.model, &sub.target, rewards, &|_| dir);
    let result = if rewards {
        sub.model.optimize_reward(&sub.target, dir, Some(seed))
    } else {
        sub.model.optimize_reach(&sub.target, dir, Some(seed))
    };
    result.map_err(LiftingError::Model)
}

/// Exact value of a substitution game where circle and box states may
/// optimize in different directions. Equal directions collapse to an MDP
/// solve; opposed directions run strategy iteration on the circle player
/// with exact box best responses.
pub fn solve_game(
    game: &SubstitutionSg,
    circle_dir: OptDir,
    box_dir: OptDir,
) -> Result<(Vec<Rational>, Vec<usize>), LiftingError> {
    let model = &game.model;
    if circle_dir == box_dir {
        let seed = value_iteration_policy(model, &game.target, false, &|_| circle_dir);
        return model
            .optimize_reach(&game.target, circle_dir, Some(seed))
            .map_err(LiftingError::Model);
    }
    let dir_of = |s: usize| {
        if s < game.circle_states {
            circle_dir
        } else {
            box_dir
        }
    };
    let mut circle_policy: Vec<usize> = {
        let seed = value_iteration_policy(model, &game.target, false, &dir_of);
        seed[..game.circle_states].to_vec()
    };
    let mut rounds = 0usize;
    loop {
        rounds += 1;
        if rounds > 10_000 {
            return Err(LiftingError::Model(ModelError::Invalid(
                "strategy iteration did not converge".into(),
            )));
        }
        // box best response against the fixed circle policy
        let restricted = restrict_circle(model, game.circle_states, &circle_policy);
        let (values, box_policy) = restricted
            .optimize_reach(&game.target, box_dir, None)
            .map_err(LiftingError::Model)?;
        // improve the circle player against exact values
        let mut improved = false;
        for s in 0..game.circle_states {
            if game.target.contains(&s) {
                continue;
            }
            let mut best = circle_policy[s];
            let mut best_val = action_value(&model.actions[s][best].row, &values);
            for (a, act) in model.actions[s].iter().enumerate() {
                if a == best {
                    continue;
                }
                let val = action_value(&act.row, &values);
                let better = match circle_dir {
                    OptDir::Max => val > best_val,
                    OptDir::Min => val < best_val,
                };
                if better {
                    best = a;
                    best_val = val;
                }
            }
            if best != circle_policy[s] {
                circle_policy[s] = best;
                improved = true;
            }
        }
        if !improved {
            let mut policy = circle_policy.clone();
            policy.extend_from_slice(&box_policy[game.circle_states..]);
            return Ok((values, policy));
        }
    }
}

/// Restricts circle states to their chosen action, leaving box states free.
fn restrict_circle(
    model: &ConcreteModel,
    circle_states: usize,
    policy: &[usize],
) -> ConcreteModel {
    let actions: Vec<Vec<ConcreteAction>> = model
        .actions
        .iter()
        .enumerate()
        .map(|(s, acts)| {
            if s < circle_states {
                vec![acts[policy[s]].clone()]
            } else {
                acts.clone()
            }
        })
        .collect();
    ConcreteModel {
        actions,
        ..model.clone()
    }
}

fn action_value(row: &[(usize, Rational)], values: &[Rational]) -> Rational {
    let mut acc = Rational::zero();
    for &(succ, ref v) in row {
        if !v.is_zero() {
            acc += v * &values[succ];
        }
    }
    acc
}

/// Can an over-approximation bound certify `value REL threshold` for all
/// points? A bound exactly equal to a strict threshold certifies nothing,
/// which falls out of the plain comparison.
fn bound_certifies(bound: &CheckValue, relation: Relation, threshold: &Rational) -> bool {
    match bound {
        CheckValue::Infinite => !relation.is_upper_bound(),
        CheckValue::Finite(b) => relation.holds(b, threshold),
    }
}

/// Maps exact lifting bounds `[lo, hi]` to a verdict for `spec`.
fn verdict_from_bounds(
    spec: &Specification,
    lo: &CheckValue,
    hi: &CheckValue,
) -> VerdictStatus {
    let rel = spec.relation;
    let neg = rel.negated();
    let accept_bound = if rel.is_upper_bound() { hi } else { lo };
    if bound_certifies(accept_bound, rel, &spec.threshold) {
        return VerdictStatus::AllSat;
    }
    let reject_bound = if neg.is_upper_bound() { hi } else { lo };
    if bound_certifies(reject_bound, neg, &spec.threshold) {
        return VerdictStatus::AllViolate;
    }
    VerdictStatus::Unknown
}

/// Candidate counterexample points: a consistent extraction from the vertex
/// strategy (first-occurrence bound per parameter) and the region center.
fn counterexample_candidates(
    m: &crate::models::ParametricModel,
    r: &Region,
    assignments: &[Vec<Instantiation>],
    policy: &[usize],
) -> Vec<Instantiation> {
    let mut choice: BTreeMap<Var, Rational> = BTreeMap::new();
    for (s, &a) in policy.iter().enumerate() {
        if s >= assignments.len() || assignments[s].is_empty() {
            continue;
        }
        for (v, val) in &assignments[s][a.min(assignments[s].len() - 1)].values {
            choice.entry(*v).or_insert_with(|| val.clone());
        }
    }
    let mut candidates = Vec::new();
    if m.params.iter().all(|p| choice.contains_key(p)) {
        candidates.push(Instantiation::new(choice));
    } else {
        // parameters missing from every strategy row: take lower bounds
        let mut full = choice;
        for &p in &m.params {
            if let Some((lo, _)) = r.interval_of(p) {
                full.entry(p).or_insert_with(|| lo.clone());
            }
        }
        candidates.push(Instantiation::new(full));
    }
    candidates.push(r.center());
    candidates
}

fn validated_counterexample(
    m: &crate::models::ParametricModel,
    r: &Region,
    spec: &Specification,
    candidates: Vec<Instantiation>,
) -> Option<Instantiation> {
    for u in candidates {
        if !r.contains(&u) {
            continue;
        }
        let concrete = m.instantiate(&u);
        if !concrete.is_well_defined() {
            continue;
        }
        if let Ok(v) = concrete.check(spec, OptDir::Max) {
            if !v.satisfies(spec.relation, &spec.threshold) {
                return Some(u);
            }
        }
    }
    None
}

/// Region verification for pMC reachability by parameter lifting.
pub fn check_region_pmc(
    m: &crate::models::ParametricModel,
    r: &Region,
    spec: &Specification,
) -> Result<RegionVerdict, LiftingError> {
    match spec.kind {
        SpecKind::ReachProb => {}
        SpecKind::ExpReward => return check_region_pmc_reward(m, r, spec),
        SpecKind::BoundedReachProb(_) => {
            return Err(LiftingError::UnsupportedSpec(
                "step-bounded reachability".into(),
            ))
        }
    }
    let sub = build_substitution(m, r, &spec.target, false)?;
    let (lo_vals, lo_policy) = solve_mdp(&sub, OptDir::Min, false)?;
    let (hi_vals, hi_policy) = solve_mdp(&sub, OptDir::Max, false)?;
    let lo = CheckValue::Finite(lo_vals[m.initial].clone());
    let hi = CheckValue::Finite(hi_vals[m.initial].clone());
    let status = verdict_from_bounds(spec, &lo, &hi);
    let mut verdict = RegionVerdict::new(status);
    verdict.bound_lo = lo.finite();
    verdict.bound_hi = hi.finite();
    if status != VerdictStatus::AllSat {
        let policy = if spec.relation.is_upper_bound() {
            &hi_policy
        } else {
            &lo_policy
        };
        verdict.counterexample = validated_counterexample(
            m,
            r,
            spec,
            counterexample_candidates(m, r, &sub.assignments, policy),
        );
    }
    Ok(verdict)
}

/// Expected-reward variant: actions also range over reward parameters, the
/// action reward is the reward function at the vertex.
pub fn check_region_pmc_reward(
    m: &crate::models::ParametricModel,
    r: &Region,
    spec: &Specification,
) -> Result<RegionVerdict, LiftingError> {
    if m.rewards.is_none() {
        return Err(LiftingError::NoRewards);
    }
    // graph preservation makes reachability qualitative: check once on the graph
    let target = m.target_states(&spec.target).map_err(LiftingError::Model)?;
    let (_, cannot) = m.reach_states(&target);
    let reachable = m.reachable_from_initial();
    if reachable.iter().any(|s| cannot.contains(s)) {
        return Err(LiftingError::RewardDiverges);
    }
    let sub = build_substitution(m, r, &spec.target, true)?;
    let (lo_vals, lo_policy) = solve_mdp(&sub, OptDir::Min, true)?;
    let (hi_vals, hi_policy) = solve_mdp(&sub, OptDir::Max, true)?;
    let lo = CheckValue::Finite(lo_vals[m.initial].clone());
    let hi = CheckValue::Finite(hi_vals[m.initial].clone());
    let status = verdict_from_bounds(spec, &lo, &hi);
    let mut verdict = RegionVerdict::new(status);
    verdict.bound_lo = lo.finite();
    verdict.bound_hi = hi.finite();
    if status != VerdictStatus::AllSat {
        let policy = if spec.relation.is_upper_bound() {
            &hi_policy
        } else {
            &lo_policy
        };
        verdict.counterexample = validated_counterexample(
            m,
            r,
            spec,
            counterexample_candidates(m, r, &sub.assignments, policy),
        );
    }
    Ok(verdict)
}

/// Which satisfaction relation a pMDP region check targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchedulerQuantifier {
    /// all strategies must satisfy the specification
    Demonic,
    /// some strategy per instantiation suffices
    Angelic,
}

/// Region verification for pMDPs via the substitution game.
///
/// The accepting check for the demonic relation quantifies both players in
/// the same direction and reduces to an MDP; the angelic-accept and
/// demonic-reject checks compute a robust strategy with opposed players,
/// adding a second layer of over-approximation.
pub fn check_region_pmdp(
    m: &crate::models::ParametricModel,
    r: &Region,
    spec: &Specification,
    quantifier: SchedulerQuantifier,
) -> Result<RegionVerdict, LiftingError> {
    if !matches!(spec.kind, SpecKind::ReachProb) {
        return Err(LiftingError::UnsupportedSpec(
            "pMDP lifting supports unbounded reachability".into(),
        ));
    }
    let game = build_substitution_game(m, r, &spec.target)?;
    let rel = spec.relation;
    let neg = rel.negated();

    // direction that certifies "for all players, value REL threshold"
    let both_dir = |relation: Relation| {
        if relation.is_upper_bound() {
            OptDir::Max
        } else {
            OptDir::Min
        }
    };
    // opposed directions certifying "exists circle strategy, for all box"
    let opposed_dirs = |relation: Relation| {
        if relation.is_upper_bound() {
            (OptDir::Min, OptDir::Max)
        } else {
            (OptDir::Max, OptDir::Min)
        }
    };

    let mut bound_lo = None;
    let mut bound_hi = None;
    let mut cex_policy: Option<Vec<usize>> = None;

    let accepted = match quantifier {
        SchedulerQuantifier::Demonic => {
            let dir = both_dir(rel);
            let (vals, policy) = solve_game(&game, dir, dir)?;
            let v = vals[m.initial].clone();
            let ok = bound_certifies(&CheckValue::Finite(v.clone()), rel, &spec.threshold);
            if dir == OptDir::Max {
                bound_hi = Some(v);
            } else {
                bound_lo = Some(v);
            }
            if !ok {
                cex_policy = Some(policy);
            }
            ok
        }
        SchedulerQuantifier::Angelic => {
            let (cd, bd) = opposed_dirs(rel);
            let (vals, _) = solve_game(&game, cd, bd)?;
            let v = vals[m.initial].clone();
            bound_certifies(&CheckValue::Finite(v), rel, &spec.threshold)
        }
    };
    if accepted {
        let mut verdict = RegionVerdict::new(VerdictStatus::AllSat);
        verdict.bound_lo = bound_lo;
        verdict.bound_hi = bound_hi;
        return Ok(verdict);
    }

    let rejected = match quantifier {
        SchedulerQuantifier::Demonic => {
            // rejecting: every instantiation has some violating strategy
            let (cd, bd) = opposed_dirs(neg);
            let (vals, _) = solve_game(&game, cd, bd)?;
            bound_certifies(&CheckValue::Finite(vals[m.initial].clone()), neg, &spec.threshold)
        }
        SchedulerQuantifier::Angelic => {
            let dir = both_dir(neg);
            let (vals, _) = solve_game(&game, dir, dir)?;
            let v = vals[m.initial].clone();
            if dir == OptDir::Max {
                bound_hi = Some(v.clone());
            } else {
                bound_lo = Some(v.clone());
            }
            bound_certifies(&CheckValue::Finite(v), neg, &spec.threshold)
        }
    };

    let status = if rejected {
        VerdictStatus::AllViolate
    } else {
        VerdictStatus::Unknown
    };
    let mut verdict = RegionVerdict::new(status);
    verdict.bound_lo = bound_lo;
    verdict.bound_hi = bound_hi;
    if quantifier == SchedulerQuantifier::Demonic && status != VerdictStatus::AllSat {
        // a violating point under *some* strategy refutes demonic acceptance
        if let Some(policy) = cex_policy {
            verdict.counterexample = validated_demonic_counterexample(
                m,
                r,
                spec,
                &game,
                &policy,
            );
        }
    }
    Ok(verdict)
}

/// Validates a candidate point extracted from the box player's vertex
/// choices: the point must admit a strategy violating the specification.
fn validated_demonic_counterexample(
    m: &crate::models::ParametricModel,
    r: &Region,
    spec: &Specification,
    game: &SubstitutionSg,
    policy: &[usize],
) -> Option<Instantiation> {
    let mut choice: BTreeMap<Var, Rational> = BTreeMap::new();
    for s in game.circle_states..game.model.num_states {
        if game.assignments[s].is_empty() {
            continue;
        }
        let a = policy.get(s).copied().unwrap_or(0);
        for (v, val) in &game.assignments[s][a.min(game.assignments[s].len() - 1)].values {
            choice.entry(*v).or_insert_with(|| val.clone());
        }
    }
    for &p in &m.params {
        if let Some((lo, _)) = r.interval_of(p) {
            choice.entry(p).or_insert_with(|| lo.clone());
        }
    }
    let candidates = vec![Instantiation::new(choice), r.center()];
    for u in candidates {
        if !r.contains(&u) {
            continue;
        }
        let concrete = m.instantiate(&u);
        if !concrete.is_well_defined() {
            continue;
        }
        // demonic acceptance fails if some strategy violates: check the
        // worst direction for the relation
        let dir = if spec.relation.is_upper_bound() {
            OptDir::Max
        } else {
            OptDir::Min
        };
        if let Ok(v) = concrete.check(spec, dir) {
            if !v.satisfies(spec.relation, &spec.threshold) {
                return Some(u);
            }
        }
    }
    None
}
