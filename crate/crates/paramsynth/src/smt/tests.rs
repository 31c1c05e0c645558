use super::script::formula_sexp;
use super::*;
use crate::ratfunc::parse_rational_function;
use crate::regions::Region;
use crate::testutil::{model, PMDP3, TOY4};

fn rf(s: &str) -> crate::ratfunc::RationalFunction {
    parse_rational_function(s).unwrap()
}

fn poly(s: &str) -> Polynomial {
    rf(s).numerator().clone()
}

#[test]
fn polynomial_constraints_pass_through() {
    let f = rf("1 - p + p*q");
    let out = transform_rf_constraint(&f, Rel::Gt, &poly("2/5"));
    assert_eq!(out, Formula::Constraint(poly("3/5 - p + p*q"), Rel::Gt));
}

#[test]
fn inequality_splits_on_denominator_sign() {
    // p/(1+p) > 0 becomes
    // (1+p != 0) and ((1+p > 0 and p > 0) or (1+p < 0 and p < 0))
    let f = rf("p/(1+p)");
    let out = transform_rf_constraint(&f, Rel::Gt, &Polynomial::zero());
    let expected = Formula::and(vec![
        Formula::Constraint(poly("1+p"), Rel::Neq),
        Formula::or(vec![
            Formula::and(vec![
                Formula::Constraint(poly("1+p"), Rel::Gt),
                Formula::Constraint(poly("p"), Rel::Gt),
            ]),
            Formula::and(vec![
                Formula::Constraint(poly("1+p"), Rel::Lt),
                Formula::Constraint(poly("p"), Rel::Lt),
            ]),
        ]),
    ]);
    assert_eq!(out, expected);
}

#[test]
fn equality_multiplies_through() {
    // q + p/(1+p) = 1  ~~>  (1+p != 0) and q*(1+p) - 1 = 0
    let f = rf("q + p/(1+p)");
    let out = transform_rf_constraint(&f, Rel::Eq, &Polynomial::one());
    let expected = Formula::and(vec![
        Formula::Constraint(poly("1+p"), Rel::Neq),
        Formula::Constraint(poly("q + p*q - 1"), Rel::Eq),
    ]);
    assert_eq!(out, expected);
}

#[test]
fn equation_system_structure_for_toy_pmc() {
    let m = model(TOY4);
    let spec = Specification::parse("P <= 2/5 reach target").unwrap();
    let problem = encode_equation_system(&m, &spec, "x").unwrap();
    assert_eq!(problem.aux_vars.len(), 4);
    // accepting side asserts the negated threshold x0 > 2/5
    let accept = formula_sexp(&problem.accept_assert);
    assert!(accept.contains("(> "), "accept side: {}", accept);
    let reject = formula_sexp(&problem.reject_assert);
    assert!(reject.contains("(<= "), "reject side: {}", reject);
    let base = formula_sexp(&problem.base);
    // Bellman row of the initial state mentions p and both x variables
    assert!(base.contains("x!0"));
    assert!(base.contains("x!3"));
}

#[test]
fn demonic_system_has_disjunction_over_actions() {
    let m = model(PMDP3);
    let spec = Specification::parse("P <= 2/5 reach target").unwrap();
    let problem = encode_pmdp(
        &m,
        &spec,
        SchedulerRelation::Demonic,
        PmdpForm::EquationSystem,
        64,
    )
    .unwrap();
    let accept = formula_sexp(&problem.accept_assert);
    // two actions at the initial state: the disjunction picks the strategy
    assert!(accept.contains("(or "), "demonic accept: {}", accept);
    // the reject side universally quantifies strategies: LP inequalities
    let reject = formula_sexp(&problem.reject_assert);
    assert!(!reject.contains("(or "), "demonic reject: {}", reject);
}

#[test]
fn angelic_system_uses_inequalities() {
    let m = model(PMDP3);
    let spec = Specification::parse("P <= 2/5 reach target").unwrap();
    let problem = encode_pmdp(
        &m,
        &spec,
        SchedulerRelation::Angelic,
        PmdpForm::EquationSystem,
        64,
    )
    .unwrap();
    let accept = formula_sexp(&problem.accept_assert);
    assert!(!accept.contains("(or "), "angelic accept: {}", accept);
    let reject = formula_sexp(&problem.reject_assert);
    assert!(reject.contains("(or "), "angelic reject: {}", reject);
}

#[test]
fn demonic_solution_function_form() {
    let m = model(PMDP3);
    let spec = Specification::parse("P <= 2/5 reach target").unwrap();
    let problem = encode_pmdp(
        &m,
        &spec,
        SchedulerRelation::Demonic,
        PmdpForm::SolutionFunctions,
        64,
    )
    .unwrap();
    // two strategies at s0: "(1 > 2/5 or 1 - q + p*q > 2/5)"
    let accept = formula_sexp(&problem.accept_assert);
    assert!(accept.starts_with("(or "), "demonic sf: {}", accept);
    assert!(problem.aux_vars.is_empty());
}

#[test]
fn strategy_cap_is_enforced() {
    let m = model(PMDP3);
    let spec = Specification::parse("P <= 2/5 reach target").unwrap();
    assert!(matches!(
        encode_pmdp(
            &m,
            &spec,
            SchedulerRelation::Demonic,
            PmdpForm::SolutionFunctions,
            1,
        ),
        Err(SmtError::StrategyCapExceeded(2, 1))
    ));
}

#[test]
fn graph_preservation_formula_shape() {
    let m = model(TOY4);
    let r = Region::parse("0<=p<=1, 0<=q<=1").unwrap();
    let formula = encode_graph_preservation(&m, &r);
    let text = formula_sexp(&formula);
    // region box, then the negated preservation conjunction
    assert!(text.starts_with("(and "));
    assert!(text.contains("(not (and "));
    // row-sum conditions degenerate to 0 = 0 for complementary rows
    assert!(text.contains("(= 0 0)"));
}

#[test]
fn standalone_script_is_deterministic_and_well_formed() {
    let m = model(TOY4);
    let spec = Specification::parse("P <= 2/5 reach target").unwrap();
    let f = rf("1 - p + p*q");
    let problem = encode_solution_function(&f, &spec, &m.params);
    let r = Region::parse("2/5<=p<=3/5, 1/5<=q<=1/2").unwrap();
    let script = script_for_query(&problem, &r, Query::Accepting);
    let again = script_for_query(&problem, &r, Query::Accepting);
    assert_eq!(script, again);
    assert!(script.starts_with("(set-logic QF_NRA)\n"));
    assert!(script.contains("(declare-const p Real)"));
    assert!(script.contains("(declare-const q Real)"));
    assert!(script.trim_end().ends_with("(check-sat)"));
    // the accepting query asserts 1 - p + p*q > 2/5, i.e. 3/5 - p + p*q > 0
    assert!(script.contains("(assert (> (+ (/ 3 5) (* (- 1) p) (* p q)) 0))"));
    // balanced parentheses
    let mut depth = 0i64;
    for c in script.chars() {
        if c == '(' {
            depth += 1;
        }
        if c == ')' {
            depth -= 1;
        }
        assert!(depth >= 0);
    }
    assert_eq!(depth, 0);
}

#[test]
fn formula_variables_are_collected_in_order() {
    let f = Formula::and(vec![
        Formula::Constraint(poly("q"), Rel::Gt),
        Formula::Constraint(poly("p"), Rel::Gt),
    ]);
    let vars = f.variables();
    let names: Vec<String> = vars.iter().map(|v| v.name()).collect();
    assert_eq!(names, vec!["p", "q"]);
}
