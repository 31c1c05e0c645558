//! Multivariate polynomial gcd over the rationals.
//!
//! Recursive content/primitive-part Euclidean algorithm: polynomials are
//! viewed as univariate in their highest parameter id with polynomial
//! coefficients over the remaining parameters; the gcd of the contents and
//! the gcd of the primitive parts (via a pseudo-remainder sequence) are
//! combined. Results are normalised so that the first stored coefficient
//! is `1`, which makes cancellation deterministic.

use std::collections::BTreeMap;

use num_traits::One;

use super::{Monomial, Polynomial, Rational, Var};

/// Gcd of two polynomials, normalised to first coefficient `1`.
/// `poly_gcd(0, b) = normalise(b)` and symmetrically.
pub fn poly_gcd(a: &Polynomial, b: &Polynomial) -> Polynomial {
    let g = gcd_rec(a, b);
    normalize(&g)
}

/// Exact division that reports failure instead of panicking; used as a
/// divisibility probe fast path.
fn try_exact_div(p: &Polynomial, divisor: &Polynomial) -> Option<Polynomial> {
    if divisor.is_zero() {
        return None;
    }
    if p.is_zero() {
        return Some(Polynomial::zero());
    }
    if let Some(c) = divisor.as_constant() {
        return Some(p.scale(&(Rational::one() / c)));
    }
    let (dc, dm) = divisor.leading_term().map(|(c, m)| (c.clone(), m.clone()))?;
    let mut rem = p.clone();
    let mut quot: Vec<(Rational, Monomial)> = Vec::new();
    while !rem.is_zero() {
        let (rc, rm) = rem.leading_term().map(|(c, m)| (c.clone(), m.clone()))?;
        let qm = rm.div(&dm)?;
        let qc = rc / &dc;
        let t = Polynomial::from_terms(vec![(qc.clone(), qm.clone())]);
        rem = &rem - &(&t * divisor);
        quot.push((qc, qm));
    }
    Some(Polynomial::from_terms(quot))
}

fn normalize(p: &Polynomial) -> Polynomial {
    match p.first_coefficient() {
        None => Polynomial::zero(),
        Some(c) => p.scale(&(Rational::one() / c)),
    }
}

fn gcd_rec(a: &Polynomial, b: &Polynomial) -> Polynomial {
    if a.is_zero() {
        return b.clone();
    }
    if b.is_zero() {
        return a.clone();
    }
    if a.as_constant().is_some() || b.as_constant().is_some() {
        return Polynomial::one();
    }
    if a == b {
        return a.clone();
    }
    // divisibility probes avoid the remainder sequence in the common case
    // of reducing a product by one of its factors
    if try_exact_div(b, a).is_some() {
        return a.clone();
    }
    if try_exact_div(a, b).is_some() {
        return b.clone();
    }
    // Recurse over the highest parameter occurring in either operand.
    let va = a.variables();
    let vb = b.variables();
    let v = *va.iter().chain(vb.iter()).max().unwrap();
    if !vb.contains(&v) {
        // b is free of v: gcd divides the content of a w.r.t. v.
        let (cont_a, _) = content_primitive(a, v);
        return gcd_rec(&cont_a, b);
    }
    if !va.contains(&v) {
        let (cont_b, _) = content_primitive(b, v);
        return gcd_rec(a, &cont_b);
    }

    let (cont_a, prim_a) = content_primitive(a, v);
    let (cont_b, prim_b) = content_primitive(b, v);
    let cont_gcd = gcd_rec(&cont_a, &cont_b);

    // Primitive PRS on the primitive parts.
    let mut f = prim_a;
    let mut g = prim_b;
    if degree_in(&f, v) < degree_in(&g, v) {
        std::mem::swap(&mut f, &mut g);
    }
    loop {
        let r = pseudo_rem(&f, &g, v);
        if r.is_zero() {
            let (_, prim_g) = content_primitive(&g, v);
            return &cont_gcd * &prim_g;
        }
        if degree_in(&r, v) == 0 {
            // Coprime in v; only the contents share factors.
            return cont_gcd;
        }
        let (_, prim_r) = content_primitive(&r, v);
        f = g;
        g = prim_r;
    }
}

fn degree_in(p: &Polynomial, v: Var) -> u32 {
    p.terms()
        .iter()
        .map(|(_, m)| m.exponent_of(v))
        .max()
        .unwrap_or(0)
}

/// Splits `p` into coefficients by the power of `v`.
fn univariate_in(p: &Polynomial, v: Var) -> BTreeMap<u32, Polynomial> {
    let mut coeffs: BTreeMap<u32, Vec<(Rational, Monomial)>> = BTreeMap::new();
    for (c, m) in p.terms() {
        let e = m.exponent_of(v);
        let rest: Vec<(Var, u32)> = m
            .exponents()
            .iter()
            .copied()
            .filter(|&(w, _)| w != v)
            .collect();
        coeffs
            .entry(e)
            .or_default()
            .push((c.clone(), Monomial::from_exponents(rest)));
    }
    coeffs
        .into_iter()
        .map(|(e, ts)| (e, Polynomial::from_terms(ts)))
        .collect()
}

/// Content (gcd of the `v`-coefficients) and primitive part of `p` w.r.t. `v`.
fn content_primitive(p: &Polynomial, v: Var) -> (Polynomial, Polynomial) {
    let coeffs = univariate_in(p, v);
    let mut content = Polynomial::zero();
    for coeff in coeffs.values() {
        content = gcd_rec(&content, coeff);
        if content.as_constant().is_some() && !content.is_zero() {
            content = Polynomial::one();
            break;
        }
    }
    let content = normalize(&content);
    if content.is_one() {
        return (content, p.clone());
    }
    (content.clone(), p.exact_div(&content))
}

/// Pseudo-remainder of `f` by `g` in the variable `v`: repeatedly scales `f`
/// by the leading coefficient of `g` so the leading term cancels exactly.
fn pseudo_rem(f: &Polynomial, g: &Polynomial, v: Var) -> Polynomial {
    let dg = degree_in(g, v);
    let g_uni = univariate_in(g, v);
    let lc_g = g_uni.get(&dg).cloned().unwrap();
    let mut r = f.clone();
    while !r.is_zero() {
        let dr = degree_in(&r, v);
        if dr < dg {
            break;
        }
        let r_uni = univariate_in(&r, v);
        let lc_r = r_uni.get(&dr).cloned().unwrap();
        let shift = Monomial::from_exponents(vec![(v, dr - dg)]);
        // lc_g * r - lc_r * v^(dr-dg) * g  cancels the degree-dr head.
        r = &(&lc_g * &r) - &(&lc_r.mul_monomial(&shift) * g);
        debug_assert!(degree_in(&r, v) < dr || r.is_zero());
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratfunc::parse_rational_function;

    fn poly(s: &str) -> Polynomial {
        parse_rational_function(s).unwrap().numerator().clone()
    }

    #[test]
    fn gcd_of_difference_of_squares() {
        let a = poly("1 - q*q");
        let b = poly("1 - q");
        let g = poly_gcd(&a, &b);
        // normalised to first coefficient one
        assert_eq!(g, poly("1 - q"));
        assert_eq!(a.exact_div(&g), poly("1 + q"));
    }

    #[test]
    fn gcd_multivariate_common_factor() {
        let f = poly("1 - p + p*q");
        let a = &f * &poly("1 - p*q");
        let b = &f * &poly("q");
        let g = poly_gcd(&a, &b);
        assert_eq!(g, normalize(&f));
    }

    #[test]
    fn coprime_polynomials_have_unit_gcd() {
        let a = poly("q");
        let b = poly("1 - q*q");
        assert!(poly_gcd(&a, &b).is_one());
    }

    #[test]
    fn gcd_with_zero_is_the_other_normalised() {
        let a = poly("2 - 2*q");
        let g = poly_gcd(&Polynomial::zero(), &a);
        assert_eq!(g, poly("1 - q"));
    }
}
