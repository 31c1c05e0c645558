//! Approximate synthesis: partition a rectangular parameter space into
//! accepting and rejecting boxes up to a coverage target.
//!
//! The loop keeps a pool of exactly-checked samples, generates candidate
//! boxes whose samples agree (splitting by quads or growing rectangles),
//! verifies candidates largest-first with a pluggable region engine, feeds
//! engine counterexamples back into the sample pool, and splits further on
//! inconsistency. Everything is deterministic: rational arithmetic, fixed
//! tie-breaking, no randomness.

use std::collections::BinaryHeap;
use std::time::Instant;

use num_traits::Zero;
use thiserror::Error;

use crate::engine::{make_engine, EngineError, EngineOptions, Hypothesis, RegionEngine};
use crate::models::{
    CheckValue, Instantiation, ModelError, ModelKind, OptDir, ParametricModel, Specification,
};
use crate::lifting::SchedulerQuantifier;
use crate::ratfunc::Rational;
use crate::regions::{Region, SplitStrategy, VerdictStatus};

mod export;

pub use export::{export_csv, export_svg, ExportError};

#[derive(Debug, Error)]
pub enum PartitionError {
    #[error("engine unavailable: {0}")]
    EngineUnavailable(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("no mixed samples: interpolation needs both verdicts")]
    NoMixedSamples,
    #[error("{0}")]
    Invalid(String),
}

/// An exactly checked instantiation.
#[derive(Debug, Clone)]
pub struct Sample {
    pub point: Instantiation,
    pub satisfies: bool,
    pub value: CheckValue,
}

/// Candidate-generation strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Splitter {
    Quads,
    GrowingRectangles,
}

impl Splitter {
    pub fn by_name(name: &str) -> Option<Splitter> {
        match name {
            "quads" => Some(Splitter::Quads),
            "rectangles" | "growing-rectangles" => Some(Splitter::GrowingRectangles),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PartitionConfig {
    /// Coverage target in (0, 1].
    pub coverage: Rational,
    /// Region-verification engine name (see [`crate::engine::engine_names`]).
    pub engine: String,
    pub splitter: Splitter,
    /// Initial sampling density per dimension.
    pub grid: usize,
    pub budget_ms: Option<u64>,
    pub iteration_cap: usize,
    /// Try an SMT engine on unknown boxes below 1/1024 of the space.
    pub smt_fallback: bool,
    pub options: EngineOptions,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        PartitionConfig {
            coverage: Rational::new(95.into(), 100.into()),
            engine: "lifting".to_string(),
            splitter: Splitter::Quads,
            grid: 4,
            budget_ms: None,
            iteration_cap: 100_000,
            smt_fallback: true,
            options: EngineOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    CoverageReached,
    QueueExhausted,
    IterationCap,
    BudgetExhausted,
}

/// Evolving result of the refinement loop. The accepted, rejected, and
/// queued boxes are pairwise interior-disjoint and cover the input space.
#[derive(Debug)]
pub struct PartitionState {
    pub space: Region,
    pub accepted: Vec<Region>,
    pub rejected: Vec<Region>,
    /// Undecided remainder, including boxes stalled below the split limit.
    pub queue: Vec<Region>,
    pub samples: Vec<Sample>,
    pub coverage: Rational,
    pub iterations: usize,
    pub engine_calls: usize,
    pub stop: StopReason,
}

/// Exact satisfaction of one instantiation, honouring the strategy
/// quantifier on pMDPs.
fn evaluate_sample(
    m: &ParametricModel,
    spec: &Specification,
    quantifier: SchedulerQuantifier,
    point: Instantiation,
) -> Result<Sample, PartitionError> {
    let concrete = m.instantiate(&point);
    let dir = match (m.kind, quantifier) {
        (ModelKind::Pmc, _) => OptDir::Max,
        (ModelKind::Pmdp, SchedulerQuantifier::Demonic) => {
            if spec.relation.is_upper_bound() {
                OptDir::Max
            } else {
                OptDir::Min
            }
        }
        (ModelKind::Pmdp, SchedulerQuantifier::Angelic) => {
            if spec.relation.is_upper_bound() {
                OptDir::Min
            } else {
                OptDir::Max
            }
        }
    };
    let value = concrete.check(spec, dir)?;
    let satisfies = value.satisfies(spec.relation, &spec.threshold);
    Ok(Sample {
        point,
        satisfies,
        value,
    })
}

/// Uniformly spaced interior lattice with `k` points per dimension, each
/// checked exactly.
pub fn sample_grid(
    m: &ParametricModel,
    spec: &Specification,
    space: &Region,
    k: usize,
    quantifier: SchedulerQuantifier,
) -> Result<Vec<Sample>, PartitionError> {
    if k == 0 {
        return Ok(Vec::new());
    }
    let mut points: Vec<Vec<(crate::ratfunc::Var, Rational)>> = vec![Vec::new()];
    for (v, lo, hi) in space.intervals() {
        let width = hi - lo;
        let mut next = Vec::with_capacity(points.len() * k);
        for i in 0..k {
            // midpoint lattice: lo + width * (2i+1)/(2k)
            let offset = &width * Rational::new(((2 * i + 1) as i64).into(), ((2 * k) as i64).into());
            let val = lo + &offset;
            for p in &points {
                let mut q = p.clone();
                q.push((*v, val.clone()));
                next.push(q);
            }
        }
        points = next;
    }
    let mut samples = Vec::with_capacity(points.len());
    for assignment in points {
        let point = Instantiation::new(assignment.into_iter().collect());
        samples.push(evaluate_sample(m, spec, quantifier, point)?);
    }
    samples.sort_by(|a, b| a.point.values.cmp(&b.point.values));
    Ok(samples)
}

/// Squared Euclidean distance on box-normalized coordinates.
fn normalized_distance2(a: &Instantiation, b: &Instantiation, space: &Region) -> Rational {
    let mut acc = Rational::zero();
    for (v, lo, hi) in space.intervals() {
        let width = hi - lo;
        if width.is_zero() {
            continue;
        }
        let (x, y) = match (a.get(*v), b.get(*v)) {
            (Some(x), Some(y)) => (x, y),
            _ => continue,
        };
        let d = (x - y) / &width;
        acc += &d * &d;
    }
    acc
}

/// Midpoints between each sample and its nearest opposite-verdict sample,
/// deduplicated; candidates for border-refining samples.
pub fn interpolate_samples(
    samples: &[Sample],
    space: &Region,
) -> Result<Vec<Instantiation>, PartitionError> {
    let accepting: Vec<&Sample> = samples.iter().filter(|s| s.satisfies).collect();
    let rejecting: Vec<&Sample> = samples.iter().filter(|s| !s.satisfies).collect();
    if accepting.is_empty() || rejecting.is_empty() {
        return Err(PartitionError::NoMixedSamples);
    }
    let half = Rational::new(1.into(), 2.into());
    let mut midpoints: Vec<Instantiation> = Vec::new();
    for s in samples {
        let pool = if s.satisfies { &rejecting } else { &accepting };
        let nearest = pool
            .iter()
            .min_by(|a, b| {
                normalized_distance2(&s.point, &a.point, space)
                    .cmp(&normalized_distance2(&s.point, &b.point, space))
                    .then_with(|| a.point.values.cmp(&b.point.values))
            })
            .unwrap();
        let mid = Instantiation::new(
            s.point
                .values
                .iter()
                .map(|(v, x)| {
                    let y = nearest.point.get(*v).unwrap_or(x);
                    (*v, (x + y) * &half)
                })
                .collect(),
        );
        if space.contains(&mid) && !midpoints.contains(&mid) {
            midpoints.push(mid);
        }
    }
    midpoints.sort_by(|a, b| a.values.cmp(&b.values));
    midpoints.dedup();
    Ok(midpoints)
}

fn samples_in<'s>(samples: &'s [Sample], r: &Region) -> Vec<&'s Sample> {
    samples.iter().filter(|s| r.contains(&s.point)).collect()
}

fn pure_verdict(samples: &[&Sample]) -> Option<Option<bool>> {
    // Some(Some(v)): pure with verdict v; Some(None): empty; None: mixed
    let mut verdict: Option<bool> = None;
    for s in samples {
        match verdict {
            None => verdict = Some(s.satisfies),
            Some(v) if v == s.satisfies => {}
            Some(_) => return None,
        }
    }
    Some(verdict)
}

/// Hypothesis for a sample-free box: verdict of the nearest decided region
/// or sample by center distance; accept wins ties.
fn neighbourhood_hypothesis(r: &Region, state: &LoopState) -> bool {
    let center = r.center();
    let mut best: Option<(Rational, bool)> = None;
    let mut consider = |dist: Rational, verdict: bool| match &best {
        None => best = Some((dist, verdict)),
        Some((d, v)) => {
            if dist < *d || (dist == *d && verdict && !*v) {
                best = Some((dist, verdict));
            }
        }
    };
    for region in &state.accepted {
        consider(
            normalized_distance2(&center, &region.center(), &state.space),
            true,
        );
    }
    for region in &state.rejected {
        consider(
            normalized_distance2(&center, &region.center(), &state.space),
            false,
        );
    }
    for s in &state.samples {
        consider(
            normalized_distance2(&center, &s.point, &state.space),
            s.satisfies,
        );
    }
    best.map(|(_, v)| v).unwrap_or(true)
}

/// Candidate generation: returns interior-disjoint boxes covering `r`, each
/// with a hypothesis. Quads bisects the largest dimension until every leaf's
/// samples agree; growing rectangles grows a pure box from the best anchor
/// vertex and slices the remainder, falling back to quads when no anchor
/// works.
fn generate_candidates(
    r: &Region,
    samples: &[Sample],
    splitter: Splitter,
    state: &LoopState,
) -> Vec<(Region, bool)> {
    match splitter {
        Splitter::Quads => {
            let mut leaves = Vec::new();
            quads_rec(r, samples, state, &mut leaves, 0);
            leaves
        }
        Splitter::GrowingRectangles => {
            growing_rectangles(r, samples, state).unwrap_or_else(|| {
                let mut leaves = Vec::new();
                quads_rec(r, samples, state, &mut leaves, 0);
                leaves
            })
        }
    }
}

const MAX_QUADS_DEPTH: usize = 64;

fn quads_rec(
    r: &Region,
    samples: &[Sample],
    state: &LoopState,
    out: &mut Vec<(Region, bool)>,
    depth: usize,
) {
    let inside = samples_in(samples, r);
    match pure_verdict(&inside) {
        Some(Some(v)) => out.push((r.clone(), v)),
        Some(None) => out.push((r.clone(), neighbourhood_hypothesis(r, state))),
        None => {
            let dim = match r.widest_dim() {
                Some(d) if depth < MAX_QUADS_DEPTH => d,
                _ => {
                    // cannot split further; report with the majority verdict
                    let sat = inside.iter().filter(|s| s.satisfies).count();
                    out.push((r.clone(), sat * 2 >= inside.len()));
                    return;
                }
            };
            for child in r.split(&SplitStrategy::Dim(dim)) {
                quads_rec(&child, samples, state, out, depth + 1);
            }
        }
    }
}

/// Pessimistic growing rectangles: every region vertex anchors a box spanned
/// towards an opposite-verdict sample; the largest sample-pure box wins and
/// the remainder is sliced into at most two boxes per dimension.
fn growing_rectangles(
    r: &Region,
    samples: &[Sample],
    state: &LoopState,
) -> Option<Vec<(Region, bool)>> {
    let inside = samples_in(samples, r);
    match pure_verdict(&inside) {
        Some(Some(v)) => return Some(vec![(r.clone(), v)]),
        Some(None) => return Some(vec![(r.clone(), neighbourhood_hypothesis(r, state))]),
        None => {}
    }
    let mut best: Option<(Region, bool, Rational)> = None;
    for anchor in r.vertices() {
        // hypothesis: verdict of the sample closest to this anchor
        let h = inside
            .iter()
            .min_by(|a, b| {
                normalized_distance2(&anchor, &a.point, &state.space)
                    .cmp(&normalized_distance2(&anchor, &b.point, &state.space))
                    .then_with(|| a.point.values.cmp(&b.point.values))
            })?
            .satisfies;
        for opposite in inside.iter().filter(|s| s.satisfies != h) {
            // box spanned by the anchor and the opposite sample
            let mut intervals = Vec::new();
            for (v, lo, hi) in r.intervals() {
                let a = anchor.get(*v).unwrap();
                let o = opposite.point.get(*v).unwrap();
                let (l, u) = if a <= o { (a, o) } else { (o, a) };
                let _ = (lo, hi);
                intervals.push((*v, l.clone(), u.clone()));
            }
            let candidate = Region::new(intervals).ok()?;
            // pure: no strictly interior opposite-verdict samples
            let impure = inside.iter().any(|s| {
                s.satisfies != h
                    && candidate
                        .intervals()
                        .iter()
                        .all(|(v, lo, hi)| match s.point.get(*v) {
                            Some(x) => x > lo && x < hi,
                            None => false,
                        })
            });
            if impure {
                continue;
            }
            let size = candidate.size();
            if size.is_zero() {
                continue;
            }
            match &best {
                Some((_, _, s)) if *s >= size => {}
                _ => best = Some((candidate, h, size)),
            }
        }
    }
    let (grown, h, _) = best?;
    let mut out = vec![(grown.clone(), h)];
    // slice the remainder of r around the grown box, one dimension at a time
    let mut rest = r.clone();
    for (v, glo, ghi) in grown.intervals() {
        let (rlo, rhi) = {
            let (lo, hi) = rest.interval_of(*v)?;
            (lo.clone(), hi.clone())
        };
        if &rlo < glo {
            let mut slab = rest.intervals().to_vec();
            for item in &mut slab {
                if item.0 == *v {
                    item.1 = rlo.clone();
                    item.2 = glo.clone();
                }
            }
            let slab = Region::new(slab).ok()?;
            if !slab.size().is_zero() {
                let hyp = match pure_verdict(&samples_in(samples, &slab)) {
                    Some(Some(v)) => v,
                    Some(None) => neighbourhood_hypothesis(&slab, state),
                    None => !h,
                };
                out.push((slab, hyp));
            }
        }
        if ghi < &rhi {
            let mut slab = rest.intervals().to_vec();
            for item in &mut slab {
                if item.0 == *v {
                    item.1 = ghi.clone();
                    item.2 = rhi.clone();
                }
            }
            let slab = Region::new(slab).ok()?;
            if !slab.size().is_zero() {
                let hyp = match pure_verdict(&samples_in(samples, &slab)) {
                    Some(Some(v)) => v,
                    Some(None) => neighbourhood_hypothesis(&slab, state),
                    None => !h,
                };
                out.push((slab, hyp));
            }
        }
        let mut narrowed = rest.intervals().to_vec();
        for item in &mut narrowed {
            if item.0 == *v {
                item.1 = glo.clone();
                item.2 = ghi.clone();
            }
        }
        rest = Region::new(narrowed).ok()?;
    }
    Some(out)
}

/// Queue entry ordering: size descending, then neighbourhood-consistent
/// candidates first, then first-created.
struct Candidate {
    region: Region,
    hypothesis: bool,
    size: Rational,
    consistent: bool,
    id: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.size
            .cmp(&other.size)
            .then_with(|| self.consistent.cmp(&other.consistent))
            .then_with(|| other.id.cmp(&self.id))
    }
}

struct LoopState {
    space: Region,
    accepted: Vec<Region>,
    rejected: Vec<Region>,
    samples: Vec<Sample>,
}

/// The refinement loop.
pub fn refine(
    m: &ParametricModel,
    spec: &Specification,
    space: &Region,
    cfg: &PartitionConfig,
) -> Result<PartitionState, PartitionError> {
    space
        .covers(m)
        .map_err(|e| PartitionError::Invalid(e.to_string()))?;
    let mut engine = make_engine(&cfg.engine, m, spec, &cfg.options)
        .map_err(|e| PartitionError::EngineUnavailable(e.to_string()))?;
    let mut fallback: Option<Box<dyn RegionEngine>> = None;
    let mut fallback_failed = !cfg.smt_fallback || cfg.engine.starts_with("smt");
    let fallback_name = match m.kind {
        ModelKind::Pmc => "smt-sf",
        ModelKind::Pmdp => match cfg.options.quantifier {
            SchedulerQuantifier::Demonic => "smt-demonic",
            SchedulerQuantifier::Angelic => "smt-angelic",
        },
    };

    let start = Instant::now();
    let space_size = space.size();
    if space_size.is_zero() {
        return Err(PartitionError::Invalid(
            "parameter space has zero volume".into(),
        ));
    }
    let small_threshold = &space_size / Rational::from_integer(1024.into());
    let min_split_size = &space_size / Rational::from_integer(num_bigint_pow2(40));

    let mut state = LoopState {
        space: space.clone(),
        accepted: Vec::new(),
        rejected: Vec::new(),
        samples: sample_grid(m, spec, space, cfg.grid, cfg.options.quantifier)?,
    };
    if let Ok(midpoints) = interpolate_samples(&state.samples, space) {
        for p in midpoints {
            state
                .samples
                .push(evaluate_sample(m, spec, cfg.options.quantifier, p)?);
        }
    }

    let mut queue: BinaryHeap<Candidate> = BinaryHeap::new();
    let mut stalled: Vec<Region> = Vec::new();
    let mut next_id = 0usize;
    let push = |queue: &mut BinaryHeap<Candidate>,
                    state: &LoopState,
                    region: Region,
                    hypothesis: bool,
                    next_id: &mut usize| {
        let size = region.size();
        let consistent = neighbourhood_hypothesis(&region, state) == hypothesis;
        queue.push(Candidate {
            region,
            hypothesis,
            size,
            consistent,
            id: *next_id,
        });
        *next_id += 1;
    };
    for (region, hypothesis) in generate_candidates(space, &state.samples, cfg.splitter, &state) {
        push(&mut queue, &state, region, hypothesis, &mut next_id);
    }

    let mut decided_size = Rational::zero();
    let mut iterations = 0usize;
    let mut engine_calls = 0usize;
    let coverage_target = &cfg.coverage * &space_size;
    let stop;
    loop {
        if decided_size >= coverage_target {
            stop = StopReason::CoverageReached;
            break;
        }
        if iterations >= cfg.iteration_cap {
            stop = StopReason::IterationCap;
            break;
        }
        if let Some(budget) = cfg.budget_ms {
            if start.elapsed().as_millis() as u64 >= budget {
                stop = StopReason::BudgetExhausted;
                break;
            }
        }
        let candidate = match queue.pop() {
            Some(c) => c,
            None => {
                stop = StopReason::QueueExhausted;
                break;
            }
        };
        iterations += 1;
        let inside = samples_in(&state.samples, &candidate.region);
        let verdict_hint = match pure_verdict(&inside) {
            None => {
                // mixed: split further
                for (region, hypothesis) in
                    generate_candidates(&candidate.region, &state.samples, cfg.splitter, &state)
                {
                    if region == candidate.region {
                        // unsplittable mixed box cannot occur: mixed samples
                        // force a positive-width dimension between them
                        stalled.push(region);
                        continue;
                    }
                    push(&mut queue, &state, region, hypothesis, &mut next_id);
                }
                continue;
            }
            Some(Some(v)) => v,
            Some(None) => candidate.hypothesis,
        };
        let hyp = if verdict_hint {
            Hypothesis::Accepting
        } else {
            Hypothesis::Rejecting
        };
        engine_calls += 1;
        let verdict = engine.check_hypothesis(&candidate.region, hyp)?;
        let mut status = verdict.status;
        if status == VerdictStatus::Unknown
            && !fallback_failed
            && candidate.size < small_threshold
        {
            if fallback.is_none() {
                match make_engine(fallback_name, m, spec, &cfg.options) {
                    Ok(e) => fallback = Some(e),
                    Err(_) => fallback_failed = true,
                }
            }
            if let Some(fb) = fallback.as_mut() {
                engine_calls += 1;
                match fb.check_hypothesis(&candidate.region, hyp) {
                    Ok(v) => {
                        if v.status != VerdictStatus::Unknown {
                            status = v.status;
                        }
                    }
                    Err(_) => fallback_failed = true,
                }
            }
        }
        match status {
            VerdictStatus::AllSat => {
                decided_size += candidate.size;
                state.accepted.push(candidate.region);
            }
            VerdictStatus::AllViolate => {
                decided_size += candidate.size;
                state.rejected.push(candidate.region);
            }
            VerdictStatus::Unknown => {
                if let Some(cex) = verdict.counterexample {
                    if candidate.region.contains(&cex)
                        && !state.samples.iter().any(|s| s.point == cex)
                    {
                        state
                            .samples
                            .push(evaluate_sample(m, spec, cfg.options.quantifier, cex)?);
                    }
                }
                if candidate.size <= min_split_size || candidate.region.widest_dim().is_none() {
                    stalled.push(candidate.region);
                    continue;
                }
                // split and requeue; a fresh counterexample may purify children
                let children = generate_candidates(
                    &candidate.region,
                    &state.samples,
                    cfg.splitter,
                    &state,
                );
                let unsplit = children.len() == 1 && children[0].0 == candidate.region;
                if unsplit {
                    // engine said unknown on a pure box: bisect blindly
                    let dim = candidate.region.widest_dim().unwrap();
                    for child in candidate.region.split(&SplitStrategy::Dim(dim)) {
                        let hypothesis = candidate.hypothesis;
                        push(&mut queue, &state, child, hypothesis, &mut next_id);
                    }
                } else {
                    for (region, hypothesis) in children {
                        push(&mut queue, &state, region, hypothesis, &mut next_id);
                    }
                }
            }
        }
    }

    let mut remaining: Vec<Region> = queue.into_sorted_vec().into_iter().map(|c| c.region).collect();
    remaining.extend(stalled);
    let coverage = &decided_size / &space_size;
    Ok(PartitionState {
        space: state.space,
        accepted: state.accepted,
        rejected: state.rejected,
        queue: remaining,
        samples: state.samples,
        coverage,
        iterations,
        engine_calls,
        stop,
    })
}

fn num_bigint_pow2(bits: u32) -> num_bigint::BigInt {
    num_bigint::BigInt::from(1u8) << bits
}

#[cfg(test)]
mod tests;
