//! Rectangular parameter regions and whole-region graph-preservation checks.
//!
//! A region is a closed axis-aligned box with rational bounds, one interval
//! per parameter. Region algebra (splitting, size, vertex enumeration) is
//! exact. Graph preservation of a whole region is decided by a fast path for
//! multilinear transition functions whose rows sum to one; everything else is
//! handed to the SMT layer as a formula.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::models::{Instantiation, ParametricModel};
use crate::ratfunc::{
    parse_rational_constant, rational_to_string, Polynomial, Rational, RationalFunction, Var,
};
use crate::smt::Formula;

#[derive(Debug, Error)]
pub enum RegionError {
    #[error("{0}")]
    Parse(String),
    #[error("empty box: lower bound of `{0}` exceeds its upper bound")]
    EmptyBox(String),
    #[error("region misses parameter `{0}`")]
    MissingParameter(String),
}

/// Closed rectangular box over parameters: per parameter a closed interval
/// with rational bounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    /// Ascending by parameter id.
    intervals: Vec<(Var, Rational, Rational)>,
}

impl Region {
    pub fn new(mut intervals: Vec<(Var, Rational, Rational)>) -> Result<Region, RegionError> {
        intervals.sort_by_key(|&(v, _, _)| v);
        for (v, lo, hi) in &intervals {
            if lo > hi {
                return Err(RegionError::EmptyBox(v.name()));
            }
        }
        Ok(Region { intervals })
    }

    /// Parses `0.1<=p<=0.8, 0.4<=q<=0.7`.
    pub fn parse(src: &str) -> Result<Region, RegionError> {
        let mut intervals = Vec::new();
        for part in src.split(',') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let pieces: Vec<&str> = part.split("<=").map(str::trim).collect();
            if pieces.len() != 3 {
                return Err(RegionError::Parse(format!(
                    "expected `lo<=param<=hi`, found `{}`",
                    part
                )));
            }
            let lo = parse_rational_constant(pieces[0])
                .map_err(|e| RegionError::Parse(e.to_string()))?;
            let hi = parse_rational_constant(pieces[2])
                .map_err(|e| RegionError::Parse(e.to_string()))?;
            if pieces[1].is_empty() || !pieces[1].chars().all(|c| c.is_alphanumeric() || c == '_')
            {
                return Err(RegionError::Parse(format!(
                    "bad parameter name `{}`",
                    pieces[1]
                )));
            }
            intervals.push((Var::intern(pieces[1]), lo, hi));
        }
        if intervals.is_empty() {
            return Err(RegionError::Parse("empty region".to_string()));
        }
        Region::new(intervals)
    }

    pub fn intervals(&self) -> &[(Var, Rational, Rational)] {
        &self.intervals
    }

    pub fn params(&self) -> Vec<Var> {
        self.intervals.iter().map(|&(v, _, _)| v).collect()
    }

    pub fn interval_of(&self, v: Var) -> Option<(&Rational, &Rational)> {
        self.intervals
            .iter()
            .find(|&&(w, _, _)| w == v)
            .map(|(_, lo, hi)| (lo, hi))
    }

    /// Checks that the region covers every parameter of `m`.
    pub fn covers(&self, m: &ParametricModel) -> Result<(), RegionError> {
        for &p in &m.params {
            if self.interval_of(p).is_none() {
                return Err(RegionError::MissingParameter(p.name()));
            }
        }
        Ok(())
    }

    /// Lebesgue measure of the box.
    pub fn size(&self) -> Rational {
        let mut acc = Rational::one();
        for (_, lo, hi) in &self.intervals {
            acc *= hi - lo;
        }
        acc
    }

    pub fn contains(&self, u: &Instantiation) -> bool {
        self.intervals.iter().all(|(v, lo, hi)| match u.get(*v) {
            Some(val) => val >= lo && val <= hi,
            None => false,
        })
    }

    /// Box center, used for deterministic nearest-neighbour rules.
    pub fn center(&self) -> Instantiation {
        let half = Rational::new(1.into(), 2.into());
        Instantiation::new(
            self.intervals
                .iter()
                .map(|(v, lo, hi)| (*v, (lo + hi) * &half))
                .collect(),
        )
    }

    /// All corner instantiations: lower bound before upper bound per
    /// parameter, last parameter varying fastest. Degenerate intervals
    /// contribute a single value.
    pub fn vertices(&self) -> Vec<Instantiation> {
        let mut result = vec![BTreeMap::new()];
        for (v, lo, hi) in &self.intervals {
            let choices: Vec<&Rational> = if lo == hi { vec![lo] } else { vec![lo, hi] };
            let mut next = Vec::with_capacity(result.len() * choices.len());
            for partial in &result {
                for choice in &choices {
                    let mut m: BTreeMap<Var, Rational> = partial.clone();
                    m.insert(*v, (*choice).clone());
                    next.push(m);
                }
            }
            result = next;
        }
        result.into_iter().map(Instantiation::new).collect()
    }

    fn replaced(&self, v: Var, lo: Rational, hi: Rational) -> Region {
        Region {
            intervals: self
                .intervals
                .iter()
                .map(|(w, l, h)| {
                    if *w == v {
                        (*w, lo.clone(), hi.clone())
                    } else {
                        (*w, l.clone(), h.clone())
                    }
                })
                .collect(),
        }
    }

    /// Splits into sub-boxes that partition this box up to shared faces;
    /// the sizes of the children sum to the parent's size exactly.
    pub fn split(&self, strategy: &SplitStrategy) -> Vec<Region> {
        match strategy {
            SplitStrategy::AllDims => {
                let mut boxes = vec![self.clone()];
                for (v, lo, hi) in &self.intervals {
                    if lo == hi {
                        continue;
                    }
                    let mid = (lo + hi) * Rational::new(1.into(), 2.into());
                    let mut next = Vec::with_capacity(boxes.len() * 2);
                    for b in &boxes {
                        next.push(b.replaced(*v, lo.clone(), mid.clone()));
                        next.push(b.replaced(*v, mid.clone(), hi.clone()));
                    }
                    boxes = next;
                }
                boxes
            }
            SplitStrategy::Dim(v) => match self.interval_of(*v) {
                Some((lo, hi)) if lo != hi => {
                    let mid = (lo + hi) * Rational::new(1.into(), 2.into());
                    vec![
                        self.replaced(*v, lo.clone(), mid.clone()),
                        self.replaced(*v, mid, hi.clone()),
                    ]
                }
                _ => vec![self.clone()],
            },
            SplitStrategy::AtPoint(u) => {
                let mut boxes = vec![self.clone()];
                for (v, lo, hi) in &self.intervals {
                    let anchor = match u.get(*v) {
                        Some(a) if a > lo && a < hi => a.clone(),
                        _ => continue,
                    };
                    let mut next = Vec::with_capacity(boxes.len() * 2);
                    for b in &boxes {
                        next.push(b.replaced(*v, lo.clone(), anchor.clone()));
                        next.push(b.replaced(*v, anchor.clone(), hi.clone()));
                    }
                    boxes = next;
                }
                boxes
            }
        }
    }

    /// Largest-width parameter with a positive width, ties broken by id.
    pub fn widest_dim(&self) -> Option<Var> {
        let mut best: Option<(Var, Rational)> = None;
        for (v, lo, hi) in &self.intervals {
            let w = hi - lo;
            if w.is_zero() {
                continue;
            }
            match &best {
                Some((_, bw)) if *bw >= w => {}
                _ => best = Some((*v, w)),
            }
        }
        best.map(|(v, _)| v)
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .intervals
            .iter()
            .map(|(v, lo, hi)| {
                format!(
                    "{}<={}<={}",
                    rational_to_string(lo),
                    v.name(),
                    rational_to_string(hi)
                )
            })
            .collect();
        write!(f, "{}", parts.join(", "))
    }
}

#[derive(Debug, Clone)]
pub enum SplitStrategy {
    AllDims,
    Dim(Var),
    AtPoint(Instantiation),
}

/// Outcome of a region verification call.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictStatus {
    AllSat,
    AllViolate,
    Unknown,
}

impl fmt::Display for VerdictStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VerdictStatus::AllSat => write!(f, "AllSat"),
            VerdictStatus::AllViolate => write!(f, "AllViolate"),
            VerdictStatus::Unknown => write!(f, "Unknown"),
        }
    }
}

/// Verdict with optional diagnostic payload: a validated counterexample
/// instantiation inside the region, and the exact over-approximation bounds
/// computed by parameter lifting.
#[derive(Debug, Clone)]
pub struct RegionVerdict {
    pub status: VerdictStatus,
    pub counterexample: Option<Instantiation>,
    pub bound_lo: Option<Rational>,
    pub bound_hi: Option<Rational>,
}

impl RegionVerdict {
    pub fn new(status: VerdictStatus) -> Self {
        RegionVerdict {
            status,
            counterexample: None,
            bound_lo: None,
            bound_hi: None,
        }
    }
}

/// Result of the whole-region graph-preservation check.
#[derive(Debug)]
pub enum GraphPreservation {
    Preserving,
    NotPreserving(Instantiation),
    /// The fast path does not apply; deciding requires the emitted formula.
    NeedsSolver(Formula),
}

/// Fast path: when every transition (and reward) function has multilinear
/// numerator and denominator and every row sums to one as a rational
/// function, positivity over the box follows from the signs at the vertices
/// of each function's own parameters. Otherwise the graph-preservation
/// formula is emitted for an external solver.
pub fn check_graph_preserving(m: &ParametricModel, r: &Region) -> GraphPreservation {
    if r.covers(m).is_err() {
        return GraphPreservation::NeedsSolver(crate::smt::encode_graph_preservation(m, r));
    }
    let mut fast = true;
    'outer: for acts in &m.actions {
        for act in acts {
            let mut sum = RationalFunction::zero();
            for (_, f) in &act.row {
                if !f.is_locally_monotone_form() {
                    fast = false;
                    break 'outer;
                }
                sum = sum.add(f);
            }
            if !sum.reduced().is_one() {
                fast = false;
                break 'outer;
            }
        }
    }
    if fast {
        if let Some(rewards) = &m.rewards {
            'outer2: for per_action in rewards {
                for f in per_action {
                    if !f.is_locally_monotone_form() {
                        fast = false;
                        break 'outer2;
                    }
                }
            }
        }
    }
    if !fast {
        return GraphPreservation::NeedsSolver(crate::smt::encode_graph_preservation(m, r));
    }

    for acts in &m.actions {
        for act in acts {
            for (_, f) in &act.row {
                if let Some(witness) = not_strictly_positive_witness(f, r) {
                    return GraphPreservation::NotPreserving(witness);
                }
            }
        }
    }
    if let Some(rewards) = &m.rewards {
        for per_action in rewards {
            for f in per_action {
                if f.is_zero() {
                    continue;
                }
                if let Some(witness) = negative_or_undefined_witness(f, r) {
                    return GraphPreservation::NotPreserving(witness);
                }
            }
        }
    }
    GraphPreservation::Preserving
}

/// Signs of a multilinear polynomial over the box, decided at the vertices of
/// the polynomial's own parameters (multilinear extrema are attained there).
struct VertexSigns {
    all_positive: bool,
    all_negative: bool,
    /// A vertex where the polynomial is <= 0, extended to a full-region point.
    witness_nonpositive: Option<Instantiation>,
    /// A vertex where the polynomial is < 0.
    witness_negative: Option<Instantiation>,
}

fn vertex_signs(p: &Polynomial, r: &Region) -> VertexSigns {
    let vars = p.variables();
    let sub = Region::new(
        r.intervals()
            .iter()
            .filter(|(v, _, _)| vars.contains(v))
            .cloned()
            .collect::<Vec<_>>(),
    )
    .expect("sub-box of a valid box");
    let vertices = if vars.is_empty() {
        vec![Instantiation::new(BTreeMap::new())]
    } else {
        sub.vertices()
    };
    let mut signs = VertexSigns {
        all_positive: true,
        all_negative: true,
        witness_nonpositive: None,
        witness_negative: None,
    };
    for vert in vertices {
        let val = p.evaluate(&vert.values).expect("vertex covers variables");
        if !val.is_positive() {
            signs.all_positive = false;
            if signs.witness_nonpositive.is_none() {
                signs.witness_nonpositive = Some(extend_to_region(&vert, r));
            }
        }
        if val.is_negative() {
            if signs.witness_negative.is_none() {
                signs.witness_negative = Some(extend_to_region(&vert, r));
            }
        }
        if !val.is_negative() {
            signs.all_negative = false;
        }
    }
    signs
}

fn extend_to_region(partial: &Instantiation, r: &Region) -> Instantiation {
    let mut values = partial.values.clone();
    for (v, lo, _) in r.intervals() {
        values.entry(*v).or_insert_with(|| lo.clone());
    }
    Instantiation::new(values)
}

/// Witness that `f` is not strictly positive (or undefined) somewhere on the
/// box; `None` proves `f > 0` on the whole box.
fn not_strictly_positive_witness(f: &RationalFunction, r: &Region) -> Option<Instantiation> {
    let num = vertex_signs(f.numerator(), r);
    let den = vertex_signs(f.denominator(), r);
    if (num.all_positive && den.all_positive) || (num.all_negative && den.all_negative) {
        return None;
    }
    if den.all_positive {
        return num.witness_nonpositive;
    }
    // The denominator is not bounded away from zero with a fixed sign; any
    // such vertex both threatens well-definedness and positivity.
    den.witness_nonpositive.or(num.witness_nonpositive)
}

/// Witness that `f` is negative or undefined somewhere on the box.
fn negative_or_undefined_witness(f: &RationalFunction, r: &Region) -> Option<Instantiation> {
    let num = vertex_signs(f.numerator(), r);
    let den = vertex_signs(f.denominator(), r);
    if den.all_positive {
        return num.witness_negative;
    }
    if den.all_negative {
        // f >= 0 requires num <= 0 at every vertex here; report a positive one.
        return vertex_signs(&f.numerator().neg_ref(), r).witness_negative;
    }
    den.witness_nonpositive
}

#[cfg(test)]
mod tests;
