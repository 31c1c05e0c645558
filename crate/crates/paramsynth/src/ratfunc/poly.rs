//! Sparse polynomials over interned parameters with rational coefficients.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_traits::{One, Signed, Zero};

use super::{RatFuncError, Rational, Var};

/// A product of parameter powers; exponents are positive and sorted by
/// parameter id. The empty monomial is the constant `1`.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Monomial {
    exps: Vec<(Var, u32)>,
}

impl Monomial {
    pub fn unit() -> Self {
        Monomial { exps: Vec::new() }
    }

    pub fn var(v: Var) -> Self {
        Monomial { exps: vec![(v, 1)] }
    }

    pub fn from_exponents(mut exps: Vec<(Var, u32)>) -> Self {
        exps.retain(|&(_, e)| e > 0);
        exps.sort_by_key(|&(v, _)| v);
        Monomial { exps }
    }

    pub fn is_unit(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn exponents(&self) -> &[(Var, u32)] {
        &self.exps
    }

    pub fn exponent_of(&self, v: Var) -> u32 {
        self.exps
            .iter()
            .find(|&&(w, _)| w == v)
            .map(|&(_, e)| e)
            .unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.exps.iter().map(|&(_, e)| e).sum()
    }

    pub fn is_multilinear(&self) -> bool {
        self.exps.iter().all(|&(_, e)| e <= 1)
    }

    /// Merge-multiply: exponents add.
    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut exps = Vec::with_capacity(self.exps.len() + other.exps.len());
        let (mut i, mut j) = (0, 0);
        while i < self.exps.len() && j < other.exps.len() {
            match self.exps[i].0.cmp(&other.exps[j].0) {
                Ordering::Less => {
                    exps.push(self.exps[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    exps.push(other.exps[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    exps.push((self.exps[i].0, self.exps[i].1 + other.exps[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        exps.extend_from_slice(&self.exps[i..]);
        exps.extend_from_slice(&other.exps[j..]);
        Monomial { exps }
    }

    /// Exact division; `None` when some exponent of `other` exceeds ours.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut exps = Vec::with_capacity(self.exps.len());
        let mut j = 0;
        for &(v, e) in &self.exps {
            let mut rest = e;
            while j < other.exps.len() && other.exps[j].0 < v {
                return None;
            }
            if j < other.exps.len() && other.exps[j].0 == v {
                if other.exps[j].1 > e {
                    return None;
                }
                rest = e - other.exps[j].1;
                j += 1;
            }
            if rest > 0 {
                exps.push((v, rest));
            }
        }
        if j < other.exps.len() {
            return None;
        }
        Some(Monomial { exps })
    }
}

// Graded lexicographic order: total degree first, ties broken by the first
// parameter id where the exponents differ (higher exponent on the earlier
// parameter is greater).
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total_degree()
            .cmp(&other.total_degree())
            .then_with(|| {
                let (mut i, mut j) = (0, 0);
                loop {
                    match (self.exps.get(i), other.exps.get(j)) {
                        (None, None) => return Ordering::Equal,
                        // A missing entry is exponent zero on the earliest
                        // remaining variable of the other side.
                        (None, Some(_)) => return Ordering::Less,
                        (Some(_), None) => return Ordering::Greater,
                        (Some(&(va, ea)), Some(&(vb, eb))) => match va.cmp(&vb) {
                            Ordering::Less => return Ordering::Greater,
                            Ordering::Greater => return Ordering::Less,
                            Ordering::Equal => match ea.cmp(&eb) {
                                Ordering::Equal => {
                                    i += 1;
                                    j += 1;
                                }
                                ord => return ord,
                            },
                        },
                    }
                }
            })
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exps.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self
            .exps
            .iter()
            .map(|&(v, e)| {
                if e == 1 {
                    v.name()
                } else {
                    format!("{}^{}", v.name(), e)
                }
            })
            .collect();
        write!(f, "{}", parts.join("*"))
    }
}

/// Weighted sum of monomials in canonical form: no zero coefficients, terms
/// strictly ascending in the monomial order; the zero polynomial is empty.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Polynomial {
    terms: Vec<(Rational, Monomial)>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Polynomial { terms: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Polynomial {
            terms: vec![(c, Monomial::unit())],
        }
    }

    pub fn var(v: Var) -> Self {
        Polynomial {
            terms: vec![(Rational::one(), Monomial::var(v))],
        }
    }

    /// Builds from arbitrary (coefficient, monomial) pairs, merging duplicates.
    pub fn from_terms(terms: Vec<(Rational, Monomial)>) -> Self {
        let mut map: BTreeMap<Monomial, Rational> = BTreeMap::new();
        for (c, m) in terms {
            let entry = map.entry(m).or_insert_with(Rational::zero);
            *entry += c;
        }
        Polynomial {
            terms: map
                .into_iter()
                .filter(|(_, c)| !c.is_zero())
                .map(|(m, c)| (c, m))
                .collect(),
        }
    }

    pub fn terms(&self) -> &[(Rational, Monomial)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].1.is_unit() && self.terms[0].0.is_one()
    }

    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 if self.terms[0].1.is_unit() => Some(self.terms[0].0.clone()),
            _ => None,
        }
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn total_degree(&self) -> u32 {
        // Terms are sorted by graded order, so the last term carries the degree.
        self.terms.last().map(|(_, m)| m.total_degree()).unwrap_or(0)
    }

    pub fn is_multilinear(&self) -> bool {
        self.terms.iter().all(|(_, m)| m.is_multilinear())
    }

    /// Coefficient of the first stored (lowest-order) term.
    pub fn first_coefficient(&self) -> Option<&Rational> {
        self.terms.first().map(|(c, _)| c)
    }

    /// Leading term in the graded-lex order (the last stored term).
    pub fn leading_term(&self) -> Option<(&Rational, &Monomial)> {
        self.terms.last().map(|(c, m)| (c, m))
    }

    pub fn variables(&self) -> Vec<Var> {
        let mut vars: Vec<Var> = Vec::new();
        for (_, m) in &self.terms {
            for &(v, _) in m.exponents() {
                if !vars.contains(&v) {
                    vars.push(v);
                }
            }
        }
        vars.sort();
        vars
    }

    pub fn neg_ref(&self) -> Polynomial {
        Polynomial {
            terms: self.terms.iter().map(|(c, m)| (-c, m.clone())).collect(),
        }
    }

    pub fn scale(&self, factor: &Rational) -> Polynomial {
        if factor.is_zero() {
            return Polynomial::zero();
        }
        Polynomial {
            terms: self
                .terms
                .iter()
                .map(|(c, m)| (c * factor, m.clone()))
                .collect(),
        }
    }

    pub fn mul_monomial(&self, factor: &Monomial) -> Polynomial {
        Polynomial {
            terms: self
                .terms
                .iter()
                .map(|(c, m)| (c.clone(), m.mul(factor)))
                .collect(),
        }
    }

    fn add_impl(&self, other: &Polynomial, negate_other: bool) -> Polynomial {
        let mut terms = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() && j < other.terms.len() {
            let (ca, ma) = &self.terms[i];
            let (cb, mb) = &other.terms[j];
            match ma.cmp(mb) {
                Ordering::Less => {
                    terms.push((ca.clone(), ma.clone()));
                    i += 1;
                }
                Ordering::Greater => {
                    terms.push((if negate_other { -cb } else { cb.clone() }, mb.clone()));
                    j += 1;
                }
                Ordering::Equal => {
                    let c = if negate_other { ca - cb } else { ca + cb };
                    if !c.is_zero() {
                        terms.push((c, ma.clone()));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        for (c, m) in &self.terms[i..] {
            terms.push((c.clone(), m.clone()));
        }
        for (c, m) in &other.terms[j..] {
            terms.push((if negate_other { -c } else { c.clone() }, m.clone()));
        }
        Polynomial { terms }
    }

    pub fn evaluate(&self, u: &BTreeMap<Var, Rational>) -> Result<Rational, RatFuncError> {
        let mut acc = Rational::zero();
        for (c, m) in &self.terms {
            let mut term = c.clone();
            for &(v, e) in m.exponents() {
                let val = u
                    .get(&v)
                    .ok_or_else(|| RatFuncError::MissingParameter(v.name()))?;
                for _ in 0..e {
                    term *= val;
                }
            }
            acc += term;
        }
        Ok(acc)
    }

    /// Substitutes a subset of the variables, keeping the rest symbolic.
    pub fn substitute(&self, u: &BTreeMap<Var, Rational>) -> Polynomial {
        let mut out: Vec<(Rational, Monomial)> = Vec::with_capacity(self.terms.len());
        for (c, m) in &self.terms {
            let mut coeff = c.clone();
            let mut exps = Vec::new();
            for &(v, e) in m.exponents() {
                if let Some(val) = u.get(&v) {
                    for _ in 0..e {
                        coeff *= val;
                    }
                } else {
                    exps.push((v, e));
                }
            }
            out.push((coeff, Monomial::from_exponents(exps)));
        }
        Polynomial::from_terms(out)
    }

    /// Exact multivariate division. Panics if `divisor` does not divide
    /// `self`; callers only divide by known factors (gcds).
    pub fn exact_div(&self, divisor: &Polynomial) -> Polynomial {
        assert!(!divisor.is_zero(), "division by zero polynomial");
        if self.is_zero() {
            return Polynomial::zero();
        }
        if let Some(c) = divisor.as_constant() {
            return self.scale(&(Rational::one() / c));
        }
        let (dc, dm) = divisor.leading_term().map(|(c, m)| (c.clone(), m.clone())).unwrap();
        let mut rem = self.clone();
        let mut quot: Vec<(Rational, Monomial)> = Vec::new();
        while !rem.is_zero() {
            let (rc, rm) = rem.leading_term().map(|(c, m)| (c.clone(), m.clone())).unwrap();
            let qm = rm
                .div(&dm)
                .expect("exact_div: divisor does not divide the polynomial");
            let qc = rc / &dc;
            let t = Polynomial {
                terms: vec![(qc.clone(), qm.clone())],
            };
            rem = &rem - &(&t * divisor);
            quot.push((qc, qm));
        }
        Polynomial::from_terms(quot)
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, other: &Polynomial) -> Polynomial {
        self.add_impl(other, false)
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, other: &Polynomial) -> Polynomial {
        self.add_impl(other, true)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, other: &Polynomial) -> Polynomial {
        if self.is_zero() || other.is_zero() {
            return Polynomial::zero();
        }
        let mut map: BTreeMap<Monomial, Rational> = BTreeMap::new();
        for (ca, ma) in &self.terms {
            for (cb, mb) in &other.terms {
                let m = ma.mul(mb);
                let entry = map.entry(m).or_insert_with(Rational::zero);
                *entry += ca * cb;
            }
        }
        Polynomial {
            terms: map
                .into_iter()
                .filter(|(_, c)| !c.is_zero())
                .map(|(m, c)| (c, m))
                .collect(),
        }
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, (c, m)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            if idx == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if m.is_unit() {
                write!(f, "{}", super::rational_to_string(&abs))?;
            } else if abs.is_one() {
                write!(f, "{}", m)?;
            } else {
                write!(f, "{}*{}", super::rational_to_string(&abs), m)?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}
