//! Exact sparse multivariate rational-function arithmetic.
//!
//! Parameters are interned to small integer ids ([`Var`]); monomials are
//! sparse exponent maps ordered graded-lexicographically by id; polynomials
//! are strictly sorted term sequences with nonzero rational coefficients.
//! Two polynomials are semantically equal iff their term sequences are
//! identical, so the representation is canonical.
//!
//! Rational functions store a numerator/denominator pair. Full gcd
//! cancellation is applied only on division and on explicit [`RationalFunction::reduced`]
//! calls (the hot-path ring operations keep cheap normalisation only), since
//! multivariate gcds dominate the cost of state elimination.

mod gcd;
mod parse;
mod poly;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Mutex, OnceLock};

use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub use gcd::poly_gcd;
pub use parse::{
    parse_rational_constant, parse_rational_function, parse_rational_function_at, ParseError,
};
pub use poly::{Monomial, Polynomial};

/// Arbitrary-precision rational number; always stored in canonical form
/// (reduced, positive denominator).
pub type Rational = num_rational::BigRational;

/// Interned parameter identifier. Ordering follows interning order, which the
/// model parser fixes to the declaration order of `parameters` lines.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Var(pub u32);

struct Interner {
    names: Vec<String>,
    ids: BTreeMap<String, u32>,
}

fn interner() -> &'static Mutex<Interner> {
    static INTERNER: OnceLock<Mutex<Interner>> = OnceLock::new();
    INTERNER.get_or_init(|| {
        Mutex::new(Interner {
            names: Vec::new(),
            ids: BTreeMap::new(),
        })
    })
}

impl Var {
    /// Interns `name` and returns its id; repeated calls are stable.
    pub fn intern(name: &str) -> Var {
        let mut int = interner().lock().unwrap();
        if let Some(&id) = int.ids.get(name) {
            return Var(id);
        }
        let id = int.names.len() as u32;
        int.names.push(name.to_string());
        int.ids.insert(name.to_string(), id);
        Var(id)
    }

    pub fn name(&self) -> String {
        interner().lock().unwrap().names[self.0 as usize].clone()
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RatFuncError {
    #[error("division by a semantically zero rational function")]
    DivisionByZeroFunction,
    #[error("instantiation misses parameter `{0}`")]
    MissingParameter(String),
}

/// Result of evaluating a rational function at a point: the denominator may
/// vanish there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Evaluated {
    Value(Rational),
    Undefined,
}

impl Evaluated {
    pub fn value(self) -> Option<Rational> {
        match self {
            Evaluated::Value(v) => Some(v),
            Evaluated::Undefined => None,
        }
    }
}

/// A fraction of polynomials with a nonzero denominator.
///
/// Invariants: the denominator is not the zero polynomial and its first
/// stored (lowest-order) coefficient is positive.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RationalFunction {
    num: Polynomial,
    den: Polynomial,
}

impl RationalFunction {
    /// Builds `num/den` with cheap normalisation only (no gcd): zero
    /// numerators collapse to `0/1`, constant denominators are folded into
    /// the numerator, and the denominator sign is normalised.
    ///
    /// Panics if `den` is the zero polynomial.
    pub fn new(num: Polynomial, den: Polynomial) -> Self {
        assert!(!den.is_zero(), "rational function denominator must not be zero");
        if num.is_zero() {
            return RationalFunction {
                num: Polynomial::zero(),
                den: Polynomial::one(),
            };
        }
        if let Some(c) = den.as_constant() {
            return RationalFunction {
                num: num.scale(&(Rational::one() / c)),
                den: Polynomial::one(),
            };
        }
        let (mut num, mut den) = (num, den);
        if den.first_coefficient().map(|c| c.is_negative()).unwrap_or(false) {
            num = num.neg_ref();
            den = den.neg_ref();
        }
        RationalFunction { num, den }
    }

    pub fn from_poly(p: Polynomial) -> Self {
        RationalFunction {
            num: p,
            den: Polynomial::one(),
        }
    }

    pub fn constant(c: Rational) -> Self {
        Self::from_poly(Polynomial::constant(c))
    }

    pub fn var(v: Var) -> Self {
        Self::from_poly(Polynomial::var(v))
    }

    pub fn zero() -> Self {
        Self::constant(Rational::zero())
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn numerator(&self) -> &Polynomial {
        &self.num
    }

    pub fn denominator(&self) -> &Polynomial {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num == self.den
    }

    /// Exact rational value if this function is constant.
    pub fn as_constant(&self) -> Option<Rational> {
        match (self.num.as_constant(), self.den.as_constant()) {
            (Some(n), Some(d)) => Some(n / d),
            _ => None,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        if self.den == other.den {
            return Self::new(&self.num + &other.num, self.den.clone());
        }
        let num = &(&self.num * &other.den) + &(&other.num * &self.den);
        Self::new(num, &self.den * &other.den)
    }

    pub fn sub(&self, other: &Self) -> Self {
        if self.den == other.den {
            return Self::new(&self.num - &other.num, self.den.clone());
        }
        let num = &(&self.num * &other.den) - &(&other.num * &self.den);
        Self::new(num, &self.den * &other.den)
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::new(&self.num * &other.num, &self.den * &other.den)
    }

    pub fn neg(&self) -> Self {
        RationalFunction {
            num: self.num.neg_ref(),
            den: self.den.clone(),
        }
    }

    /// Division with gcd cancellation of the result.
    pub fn div(&self, other: &Self) -> Result<Self, RatFuncError> {
        if other.is_zero() {
            return Err(RatFuncError::DivisionByZeroFunction);
        }
        Ok(Self::new(&self.num * &other.den, &self.den * &other.num).reduced())
    }

    /// Cancels the multivariate gcd of numerator and denominator.
    pub fn reduced(&self) -> Self {
        if self.num.is_zero() || self.den.is_one() {
            return self.clone();
        }
        let g = poly_gcd(&self.num, &self.den);
        if g.is_one() {
            return self.clone();
        }
        Self::new(self.num.exact_div(&g), self.den.exact_div(&g))
    }

    /// Exact evaluation; `Undefined` iff the denominator vanishes at `u`.
    pub fn evaluate(&self, u: &BTreeMap<Var, Rational>) -> Result<Evaluated, RatFuncError> {
        let den = self.den.evaluate(u)?;
        if den.is_zero() {
            return Ok(Evaluated::Undefined);
        }
        let num = self.num.evaluate(u)?;
        Ok(Evaluated::Value(num / den))
    }

    /// True iff `self` and `other` denote the same function:
    /// `a.num * b.den - b.num * a.den` is the zero polynomial.
    pub fn semantically_equal(&self, other: &Self) -> bool {
        (&(&self.num * &other.den) - &(&other.num * &self.den)).is_zero()
    }

    /// `(deg_num, deg_den, terms_num, terms_den)` with graded total degrees.
    pub fn stats(&self) -> (u32, u32, usize, usize) {
        (
            self.num.total_degree(),
            self.den.total_degree(),
            self.num.term_count(),
            self.den.term_count(),
        )
    }

    /// True iff every exponent in both polynomials is at most one. A state
    /// whose outgoing functions all have this shape (over a common
    /// denominator) is monotone per parameter on a box.
    pub fn is_locally_monotone_form(&self) -> bool {
        self.num.is_multilinear() && self.den.is_multilinear()
    }

    /// All parameters occurring in numerator or denominator.
    pub fn variables(&self) -> Vec<Var> {
        let mut vars = self.num.variables();
        for v in self.den.variables() {
            if !vars.contains(&v) {
                vars.push(v);
            }
        }
        vars.sort();
        vars
    }
}

impl fmt::Display for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            return write!(f, "{}", self.num);
        }
        let num = if self.num.term_count() > 1 {
            format!("({})", self.num)
        } else {
            format!("{}", self.num)
        };
        write!(f, "{} / ({})", num, self.den)
    }
}

impl fmt::Debug for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

/// Formats a rational for display and wire output, e.g. `23/40` or `-3`.
pub fn rational_to_string(r: &Rational) -> String {
    if r.denom().is_one() {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[cfg(test)]
mod tests;
