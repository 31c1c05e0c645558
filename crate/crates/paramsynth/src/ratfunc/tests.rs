use std::collections::BTreeMap;

use num_traits::One;
use proptest::prelude::*;

use super::*;

fn rf(s: &str) -> RationalFunction {
    parse_rational_function(s).unwrap()
}

fn rat(s: &str) -> Rational {
    parse_rational_constant(s).unwrap()
}

fn point(pairs: &[(&str, &str)]) -> BTreeMap<Var, Rational> {
    pairs
        .iter()
        .map(|&(name, val)| (Var::intern(name), rat(val)))
        .collect()
}

#[test]
fn complementary_probabilities_sum_to_one() {
    assert!(rf("p").add(&rf("1-p")).is_one());
}

#[test]
fn product_of_parameters() {
    assert_eq!(rf("p").mul(&rf("q")), rf("p*q"));
}

#[test]
fn hand_expansion_of_two_complements() {
    let expanded = rf("(1-p)*(1-q)");
    assert_eq!(expanded, rf("1 - p - q + p*q"));
    // verified by evaluation at five points
    let pts = [
        [("p", "1/3"), ("q", "1/7")],
        [("p", "2/5"), ("q", "9/11")],
        [("p", "0"), ("q", "1")],
        [("p", "5/2"), ("q", "-1/3")],
        [("p", "13/17"), ("q", "4/9")],
    ];
    for pt in pts {
        let u = point(&pt);
        let lhs = rf("1-p")
            .evaluate(&u)
            .unwrap()
            .value()
            .unwrap()
            * rf("1-q").evaluate(&u).unwrap().value().unwrap();
        assert_eq!(expanded.evaluate(&u).unwrap().value().unwrap(), lhs);
    }
}

#[test]
fn no_spurious_cancellation() {
    // q and 1 - q^2 share no factor; stored unreduced.
    let f = rf("q").div(&rf("1 - q*q")).unwrap();
    assert_eq!(f.numerator(), rf("q").numerator());
    assert_eq!(f.denominator(), rf("1 - q*q").numerator());
}

#[test]
fn reduction_cancels_common_factor() {
    // (q - q^2) / (1 - q^2) = q / (1 + q)
    let f = RationalFunction::new(
        rf("q - q*q").numerator().clone(),
        rf("1 - q*q").numerator().clone(),
    )
    .reduced();
    assert_eq!(f, rf("q").div(&rf("1+q")).unwrap());
    assert!(f.semantically_equal(&RationalFunction::new(
        rf("q - q*q").numerator().clone(),
        rf("1 - q*q").numerator().clone(),
    )));
}

#[test]
fn self_division_is_identity() {
    let f = rf("1 - p + p*q");
    assert!(f.div(&f).unwrap().is_one());
}

#[test]
fn knuth_yao_two_at_biased_coins() {
    let f = rf("p*(1-q)*(1-p)/(1-p*q)");
    let v = f
        .evaluate(&point(&[("p", "2/5"), ("q", "7/10")]))
        .unwrap()
        .value()
        .unwrap();
    assert_eq!(v, rat("1/10"));
}

#[test]
fn toy_pmc_solution_at_half_and_three_tenths() {
    let f = rf("1 - p + p*q");
    let v = f
        .evaluate(&point(&[("p", "1/2"), ("q", "3/10")]))
        .unwrap()
        .value()
        .unwrap();
    assert_eq!(v, rat("13/20"));
}

#[test]
fn evaluation_at_vanishing_denominator_is_undefined() {
    let f = rf("1/p");
    assert_eq!(
        f.evaluate(&point(&[("p", "0")])).unwrap(),
        Evaluated::Undefined
    );
}

#[test]
fn evaluation_misses_parameter() {
    let f = rf("p*q");
    assert!(matches!(
        f.evaluate(&point(&[("p", "1/2")])),
        Err(RatFuncError::MissingParameter(_))
    ));
}

#[test]
fn semantic_equality_examples() {
    let a = RationalFunction::new(
        rf("q - q*q").numerator().clone(),
        rf("1 - q*q").numerator().clone(),
    );
    let b = rf("q").div(&rf("1 + q")).unwrap();
    assert!(a.semantically_equal(&b));
    assert!(!rf("p").semantically_equal(&rf("q")));
    let zero_a = rf("0");
    let zero_b = RationalFunction::new(Polynomial::zero(), rf("1+p").numerator().clone());
    assert!(zero_a.semantically_equal(&zero_b));
}

#[test]
fn stats_examples() {
    assert_eq!(rf("1 - p + p*q").stats(), (2, 0, 3, 1));
    assert_eq!(rf("1").stats(), (0, 0, 1, 1));
    assert_eq!(rf("p*(1-q)*(1-p)/(1-p*q)").stats(), (3, 2, 4, 2));
}

#[test]
fn multilinear_checks() {
    assert!(rf("p*q").is_locally_monotone_form());
    assert!(!rf("p*p").is_locally_monotone_form());
    assert!(rf("1/(1+p)").is_locally_monotone_form());
    assert!(rf("p*q").numerator().is_multilinear());
    assert!(!rf("p*p").numerator().is_multilinear());
}

#[test]
fn denominator_sign_is_normalised() {
    let f = RationalFunction::new(
        rf("q").numerator().clone(),
        rf("-1 + q").numerator().clone(),
    );
    assert!(f.denominator().first_coefficient().unwrap() > &Rational::from_integer(0.into()));
    assert!(f.semantically_equal(&rf("q").div(&rf("q - 1")).unwrap()));
}

#[test]
fn display_round_trips_simple_functions() {
    let f = rf("1 - p + p*q");
    assert_eq!(format!("{}", f), "1 - p + p*q");
    let g = rf("p*(1-q)*(1-p)/(1-p*q)");
    assert_eq!(format!("{}", g), "(p - p*q - p^2 + p^2*q) / (1 - p*q)");
}

// -- randomised invariants ---------------------------------------------------

fn arb_rational() -> impl Strategy<Value = Rational> {
    (-6i64..=6, 1u64..=5).prop_map(|(n, d)| Rational::new(n.into(), d.into()))
}

// Generators stay close to the shapes the model format produces: few terms,
// low exponents. Pseudo-remainder gcds on large random polynomials blow up
// combinatorially and test nothing the pipeline exercises.
fn arb_poly() -> impl Strategy<Value = Polynomial> {
    let vars = ["p", "q", "r"];
    proptest::collection::vec((arb_rational(), 0u32..=1, 0u32..=1, 0u32..=1), 0..4).prop_map(
        move |terms| {
            Polynomial::from_terms(
                terms
                    .into_iter()
                    .map(|(c, ep, eq, er)| {
                        (
                            c,
                            Monomial::from_exponents(vec![
                                (Var::intern(vars[0]), ep),
                                (Var::intern(vars[1]), eq),
                                (Var::intern(vars[2]), er),
                            ]),
                        )
                    })
                    .collect(),
            )
        },
    )
}

fn arb_ratfunc() -> impl Strategy<Value = RationalFunction> {
    (arb_poly(), arb_poly()).prop_filter_map("nonzero denominator", |(n, d)| {
        if d.is_zero() {
            None
        } else {
            Some(RationalFunction::new(n, d))
        }
    })
}

fn arb_point() -> impl Strategy<Value = BTreeMap<Var, Rational>> {
    (arb_rational(), arb_rational(), arb_rational()).prop_map(|(a, b, c)| {
        [("p", a), ("q", b), ("r", c)]
            .into_iter()
            .map(|(n, v)| (Var::intern(n), v))
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    // Evaluation is a field homomorphism wherever denominators stay nonzero.
    #[test]
    fn evaluation_homomorphism(a in arb_ratfunc(), b in arb_ratfunc(), u in arb_point()) {
        let va = a.evaluate(&u).unwrap().value();
        let vb = b.evaluate(&u).unwrap().value();
        if let (Some(va), Some(vb)) = (va, vb) {
            if let Some(s) = a.add(&b).evaluate(&u).unwrap().value() {
                prop_assert_eq!(s, &va + &vb);
            }
            if let Some(d) = a.sub(&b).evaluate(&u).unwrap().value() {
                prop_assert_eq!(d, &va - &vb);
            }
            if let Some(m) = a.mul(&b).evaluate(&u).unwrap().value() {
                prop_assert_eq!(m, &va * &vb);
            }
            if !b.is_zero() && !vb.is_zero() {
                if let Some(q) = a.div(&b).unwrap().evaluate(&u).unwrap().value() {
                    prop_assert_eq!(q, va / vb);
                }
            }
        }
    }

    // poly_add(a, poly_neg(a)) is the empty term sequence.
    #[test]
    fn additive_cancellation_is_canonical(a in arb_poly()) {
        prop_assert!((&a + &a.neg_ref()).is_zero());
    }

    // semantically_equal is an equivalence relation.
    #[test]
    fn semantic_equality_is_equivalence(a in arb_ratfunc(), b in arb_ratfunc(), c in arb_ratfunc()) {
        prop_assert!(a.semantically_equal(&a));
        prop_assert_eq!(a.semantically_equal(&b), b.semantically_equal(&a));
        if a.semantically_equal(&b) && b.semantically_equal(&c) {
            prop_assert!(a.semantically_equal(&c));
        }
    }

    // Cancellation never changes semantics.
    #[test]
    fn reduction_preserves_semantics(a in arb_ratfunc(), u in arb_point()) {
        let r = a.reduced();
        prop_assert!(r.semantically_equal(&a));
        let before = a.evaluate(&u).unwrap().value();
        let after = r.evaluate(&u).unwrap().value();
        if let (Some(x), Some(y)) = (before, after) {
            prop_assert_eq!(x, y);
        }
    }
}
