//! Exact synthesis: solution functions for pMCs.
//!
//! Three interchangeable engines compute the same function: state
//! elimination on a flexible sparse matrix with a one-step-probability
//! vector, Gaussian elimination over the field of rational functions, and
//! set-based transition elimination (simultaneous shortcutting by matrix
//! squaring). State elimination is steered by pluggable ordering heuristics
//! selected by name.

mod orders;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::models::{ModelKind, ParametricModel};
use crate::ratfunc::RationalFunction;

pub use orders::{order_by_name, order_names, EliminationOrder, OrderContext, OrderRun};

#[derive(Debug, Error)]
pub enum EliminationError {
    #[error("state {0} has an absorbing self-loop; it cannot be eliminated")]
    AbsorbingSelfLoop(usize),
    #[error("expected reward diverges: a reachable state cannot reach the target")]
    RewardDiverges,
    #[error("model has no reward function")]
    NoRewards,
    #[error("solution functions require a pMC")]
    NotPmc,
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("unknown elimination order `{0}`")]
    UnknownOrder(String),
    #[error(
        "set-based elimination exceeded its iteration cap of {0}; \
         the transient graph contains an odd cycle"
    )]
    SetBasedCapExceeded(usize),
}

/// Which algorithm computes the solution function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    StateElim,
    Gaussian,
    SetBased,
}

impl Engine {
    pub fn by_name(name: &str) -> Option<Engine> {
        match name {
            "state-elim" => Some(Engine::StateElim),
            "gaussian" => Some(Engine::Gaussian),
            "set-based" => Some(Engine::SetBased),
            _ => None,
        }
    }

    pub fn names() -> &'static [&'static str] {
        &["state-elim", "gaussian", "set-based"]
    }
}

/// Sparse transition matrix with fast entry insertion and deletion, a
/// synchronized predecessor index, and the one-step value vector `x`.
#[derive(Debug, Clone)]
pub struct FlexibleMatrix {
    rows: Vec<BTreeMap<usize, RationalFunction>>,
    preds: Vec<BTreeSet<usize>>,
    one_step: Vec<RationalFunction>,
}

impl FlexibleMatrix {
    fn with_states(n: usize) -> Self {
        FlexibleMatrix {
            rows: vec![BTreeMap::new(); n],
            preds: vec![BTreeSet::new(); n],
            one_step: vec![RationalFunction::zero(); n],
        }
    }

    pub fn entry(&self, from: usize, to: usize) -> Option<&RationalFunction> {
        self.rows[from].get(&to)
    }

    pub fn row(&self, s: usize) -> &BTreeMap<usize, RationalFunction> {
        &self.rows[s]
    }

    pub fn predecessors(&self, s: usize) -> &BTreeSet<usize> {
        &self.preds[s]
    }

    pub fn one_step(&self, s: usize) -> &RationalFunction {
        &self.one_step[s]
    }

    pub fn num_states(&self) -> usize {
        self.rows.len()
    }

    fn set_entry(&mut self, from: usize, to: usize, f: RationalFunction) {
        if f.is_zero() {
            self.remove_entry(from, to);
            return;
        }
        self.rows[from].insert(to, f);
        self.preds[to].insert(from);
    }

    fn remove_entry(&mut self, from: usize, to: usize) {
        self.rows[from].remove(&to);
        self.preds[to].remove(&from);
    }

    /// Rescales every other outgoing entry and the one-step value by
    /// `1/(1 - loop)` and removes the diagonal.
    pub fn eliminate_selfloop(&mut self, s: usize) -> Result<(), EliminationError> {
        let loop_f = match self.rows[s].get(&s) {
            None => return Ok(()),
            Some(f) => f.clone(),
        };
        let rest = RationalFunction::one().sub(&loop_f);
        if rest.is_zero() {
            return Err(EliminationError::AbsorbingSelfLoop(s));
        }
        let factor = RationalFunction::one()
            .div(&rest)
            .expect("nonzero denominator checked above");
        self.remove_entry(s, s);
        let targets: Vec<usize> = self.rows[s].keys().copied().collect();
        for t in targets {
            let f = self.rows[s][&t].mul(&factor).reduced();
            self.set_entry(s, t, f);
        }
        if !self.one_step[s].is_zero() {
            self.one_step[s] = self.one_step[s].mul(&factor).reduced();
        }
        Ok(())
    }

    /// Adds shortcuts around `s` into the row of its predecessor `s1` and
    /// removes the direct transition. The diagonal of `s` must be gone.
    pub fn eliminate_transition(&mut self, s1: usize, s: usize) {
        debug_assert!(s1 != s);
        debug_assert!(!self.rows[s].contains_key(&s));
        let weight = match self.rows[s1].get(&s) {
            None => return,
            Some(f) => f.clone(),
        };
        if !self.one_step[s].is_zero() {
            self.one_step[s1] = self.one_step[s1].add(&weight.mul(&self.one_step[s]));
        }
        let succ_row: Vec<(usize, RationalFunction)> = self.rows[s]
            .iter()
            .map(|(&t, f)| (t, f.clone()))
            .collect();
        for (s2, f) in succ_row {
            let add = weight.mul(&f);
            let updated = match self.rows[s1].get(&s2) {
                Some(existing) => existing.add(&add),
                None => add,
            };
            self.set_entry(s1, s2, updated);
        }
        self.remove_entry(s1, s);
    }

    /// Bypasses `s` entirely: shortcuts from every predecessor.
    pub fn eliminate_state(&mut self, s: usize) {
        let preds: Vec<usize> = self.preds[s].iter().copied().filter(|&p| p != s).collect();
        for p in preds {
            self.eliminate_transition(p, s);
        }
    }
}

/// What the one-step vector is seeded with.
enum Seed {
    /// Probability of entering the target in one step; used for reachability.
    TargetProbability,
    /// The state reward; used for expected rewards.
    Reward,
}

struct Prepared {
    matrix: FlexibleMatrix,
    eligible: Vec<usize>,
    target: BTreeSet<usize>,
    cannot: BTreeSet<usize>,
}

/// Builds the elimination matrix: target and unreachable-of-target states are
/// absorbing, transitions into them are folded into the one-step vector or
/// dropped, and the eligible transient states are listed.
fn prepare(
    m: &ParametricModel,
    target_label: &str,
    seed: Seed,
) -> Result<Prepared, EliminationError> {
    if m.kind != ModelKind::Pmc {
        return Err(EliminationError::NotPmc);
    }
    let target = m
        .target_states(target_label)
        .map_err(|e| EliminationError::UnknownLabel(e.to_string()))?;
    let (can, cannot) = m.reach_states(&target);
    let mut matrix = FlexibleMatrix::with_states(m.num_states);
    for s in 0..m.num_states {
        if target.contains(&s) || cannot.contains(&s) {
            continue;
        }
        match seed {
            Seed::TargetProbability => {
                for (succ, f) in &m.actions[s][0].row {
                    if target.contains(succ) {
                        matrix.one_step[s] = matrix.one_step[s].add(f);
                    } else if !cannot.contains(succ) {
                        matrix.set_entry(s, *succ, f.clone());
                    }
                }
            }
            Seed::Reward => {
                matrix.one_step[s] = m
                    .rewards
                    .as_ref()
                    .map(|table| table[s][0].clone())
                    .unwrap_or_else(RationalFunction::zero);
                for (succ, f) in &m.actions[s][0].row {
                    if !target.contains(succ) && !cannot.contains(succ) {
                        matrix.set_entry(s, *succ, f.clone());
                    }
                }
            }
        }
    }
    let eligible: Vec<usize> = (0..m.num_states)
        .filter(|s| can.contains(s) && !target.contains(s) && *s != m.initial)
        .collect();
    Ok(Prepared {
        matrix,
        eligible,
        target,
        cannot,
    })
}

fn run_state_elimination(
    mut prepared: Prepared,
    m: &ParametricModel,
    order: &dyn EliminationOrder,
) -> Result<RationalFunction, EliminationError> {
    let initial = m.initial;
    let mut run = {
        let ctx = OrderContext {
            model: m,
            matrix: &prepared.matrix,
            initial,
            eligible: &prepared.eligible,
            target: &prepared.target,
        };
        order.begin(&ctx)
    };
    let mut remaining: BTreeSet<usize> = prepared.eligible.iter().copied().collect();
    while !remaining.is_empty() {
        let s = run.next_state(&prepared.matrix, &remaining);
        debug_assert!(remaining.contains(&s));
        prepared.matrix.eliminate_selfloop(s)?;
        prepared.matrix.eliminate_state(s);
        remaining.remove(&s);
    }
    prepared.matrix.eliminate_selfloop(initial)?;
    Ok(prepared.matrix.one_step[initial].clone())
}

/// Solution function for unbounded reachability of a labelled target.
pub fn solution_function(
    m: &ParametricModel,
    target_label: &str,
    order: &dyn EliminationOrder,
    engine: Engine,
) -> Result<RationalFunction, EliminationError> {
    let prepared = prepare(m, target_label, Seed::TargetProbability)?;
    if prepared.target.contains(&m.initial) {
        return Ok(RationalFunction::one());
    }
    if prepared.cannot.contains(&m.initial) {
        return Ok(RationalFunction::zero());
    }
    match engine {
        Engine::StateElim => run_state_elimination(prepared, m, order),
        Engine::Gaussian => {
            let vector = gaussian_vector(m, target_label, ValueKind::Reachability)?;
            Ok(vector[m.initial].clone())
        }
        Engine::SetBased => set_based(prepared, m.initial),
    }
}

/// Expected accumulated reward until the target, via the one-step vector
/// seeded with the state rewards.
pub fn expected_reward_function(
    m: &ParametricModel,
    target_label: &str,
    order: &dyn EliminationOrder,
) -> Result<RationalFunction, EliminationError> {
    if m.rewards.is_none() {
        return Err(EliminationError::NoRewards);
    }
    let prepared = prepare(m, target_label, Seed::Reward)?;
    let reachable = m.reachable_from_initial();
    if reachable.iter().any(|s| prepared.cannot.contains(s)) {
        return Err(EliminationError::RewardDiverges);
    }
    if prepared.target.contains(&m.initial) {
        return Ok(RationalFunction::zero());
    }
    run_state_elimination(prepared, m, order)
}

/// Step-bounded reachability by sparse matrix-vector multiplication over the
/// field of rational functions.
pub fn bounded_reach_function(
    m: &ParametricModel,
    target_label: &str,
    steps: usize,
) -> Result<RationalFunction, EliminationError> {
    if m.kind != ModelKind::Pmc {
        return Err(EliminationError::NotPmc);
    }
    let target = m
        .target_states(target_label)
        .map_err(|e| EliminationError::UnknownLabel(e.to_string()))?;
    let mut x: Vec<RationalFunction> = (0..m.num_states)
        .map(|s| {
            if target.contains(&s) {
                RationalFunction::one()
            } else {
                RationalFunction::zero()
            }
        })
        .collect();
    for _ in 0..steps {
        let mut next = x.clone();
        for s in 0..m.num_states {
            if target.contains(&s) {
                continue;
            }
            let mut acc = RationalFunction::zero();
            for (succ, f) in &m.actions[s][0].row {
                if !x[*succ].is_zero() {
                    acc = acc.add(&f.mul(&x[*succ]));
                }
            }
            next[s] = acc;
        }
        x = next;
    }
    Ok(x[m.initial].clone())
}

/// What the Gaussian right-hand side carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    Reachability,
    ExpectedReward,
}

/// Solves the full Bellman system over the rational-function field and
/// returns the complete per-state vector: 1 on targets (0 for rewards) and
/// 0 on states that cannot reach the target.
pub fn gaussian_vector(
    m: &ParametricModel,
    target_label: &str,
    kind: ValueKind,
) -> Result<Vec<RationalFunction>, EliminationError> {
    if m.kind != ModelKind::Pmc {
        return Err(EliminationError::NotPmc);
    }
    let target = m
        .target_states(target_label)
        .map_err(|e| EliminationError::UnknownLabel(e.to_string()))?;
    let (can, cannot) = m.reach_states(&target);
    if kind == ValueKind::ExpectedReward {
        if m.rewards.is_none() {
            return Err(EliminationError::NoRewards);
        }
        let reachable = m.reachable_from_initial();
        if reachable.iter().any(|s| cannot.contains(s)) {
            return Err(EliminationError::RewardDiverges);
        }
    }
    let unknowns: Vec<usize> = (0..m.num_states)
        .filter(|s| can.contains(s) && !target.contains(s))
        .collect();
    let index: BTreeMap<usize, usize> = unknowns.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let n = unknowns.len();
    // augmented system (I - A | b) over Q(V)
    let mut matrix: Vec<Vec<RationalFunction>> = vec![vec![RationalFunction::zero(); n + 1]; n];
    for (i, &s) in unknowns.iter().enumerate() {
        matrix[i][i] = RationalFunction::one();
        match kind {
            ValueKind::Reachability => {}
            ValueKind::ExpectedReward => {
                matrix[i][n] = m.rewards.as_ref().unwrap()[s][0].clone();
            }
        }
        for (succ, f) in &m.actions[s][0].row {
            if target.contains(succ) {
                if kind == ValueKind::Reachability {
                    matrix[i][n] = matrix[i][n].add(f);
                }
            } else if let Some(&j) = index.get(succ) {
                matrix[i][j] = matrix[i][j].sub(f);
            }
        }
    }
    // forward elimination in natural order, row swap on semantically zero pivots
    for col in 0..n {
        let pivot_row = (col..n)
            .find(|&r| !matrix[r][col].is_zero())
            .expect("Bellman system is nonsingular for stochastic models");
        matrix.swap(col, pivot_row);
        let pivot = matrix[col][col].clone();
        for c in col..=n {
            if !matrix[col][c].is_zero() {
                matrix[col][c] = matrix[col][c]
                    .div(&pivot)
                    .expect("pivot is nonzero");
            }
        }
        for r in (col + 1)..n {
            if matrix[r][col].is_zero() {
                continue;
            }
            let factor = matrix[r][col].clone();
            for c in col..=n {
                if !matrix[col][c].is_zero() {
                    let delta = factor.mul(&matrix[col][c]);
                    matrix[r][c] = matrix[r][c].sub(&delta);
                }
            }
        }
    }
    // back substitution
    let mut solution = vec![RationalFunction::zero(); n];
    for i in (0..n).rev() {
        let mut acc = matrix[i][n].clone();
        for j in (i + 1)..n {
            if !matrix[i][j].is_zero() {
                acc = acc.sub(&matrix[i][j].mul(&solution[j]));
            }
        }
        solution[i] = acc.reduced();
    }
    let mut values = vec![RationalFunction::zero(); m.num_states];
    if kind == ValueKind::Reachability {
        for t in &target {
            values[*t] = RationalFunction::one();
        }
    }
    for (i, &s) in unknowns.iter().enumerate() {
        values[s] = solution[i].clone();
    }
    Ok(values)
}

/// Set-based transition elimination: eliminate all self-loops, then
/// repeatedly square the transient matrix (folding one-step values) and
/// re-eliminate self-loops until no transient-to-transient transition
/// remains. Each squaring doubles the collapsed path length, so the
/// iteration count is capped at `ceil(log2(states)) + 2`.
fn set_based(mut prepared: Prepared, initial: usize) -> Result<RationalFunction, EliminationError> {
    let n = prepared.matrix.num_states();
    let transient: Vec<usize> = (0..n)
        .filter(|s| !prepared.target.contains(s) && !prepared.cannot.contains(s))
        .collect();
    for &s in &transient {
        prepared.matrix.eliminate_selfloop(s)?;
    }
    let cap = (usize::BITS - n.leading_zeros()) as usize + 2;
    let mut iterations = 0;
    loop {
        let any_transient_edge = transient
            .iter()
            .any(|&s| !prepared.matrix.rows[s].is_empty());
        if !any_transient_edge {
            break;
        }
        if iterations >= cap {
            return Err(EliminationError::SetBasedCapExceeded(cap));
        }
        iterations += 1;
        // x' = P x + x and P' = P * P, simultaneously for all states
        let old = prepared.matrix.clone();
        let mut fresh = FlexibleMatrix::with_states(n);
        for &s in &transient {
            let mut x = old.one_step[s].clone();
            let mut row_acc: BTreeMap<usize, RationalFunction> = BTreeMap::new();
            for (&mid, w) in &old.rows[s] {
                x = x.add(&w.mul(&old.one_step[mid]));
                for (&t, f) in &old.rows[mid] {
                    let add = w.mul(f);
                    match row_acc.get_mut(&t) {
                        Some(existing) => *existing = existing.add(&add),
                        None => {
                            row_acc.insert(t, add);
                        }
                    }
                }
            }
            fresh.one_step[s] = x;
            for (t, f) in row_acc {
                fresh.set_entry(s, t, f);
            }
        }
        prepared.matrix = fresh;
        for &s in &transient {
            prepared.matrix.eliminate_selfloop(s)?;
        }
    }
    Ok(prepared.matrix.one_step[initial].clone())
}

#[cfg(test)]
pub(crate) fn prepare_for_tests(
    m: &ParametricModel,
    target_label: &str,
) -> (FlexibleMatrix, Vec<usize>) {
    let p = prepare(m, target_label, Seed::TargetProbability).unwrap();
    (p.matrix, p.eligible)
}

#[cfg(test)]
mod tests;
