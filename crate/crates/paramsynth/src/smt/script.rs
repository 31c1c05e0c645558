//! Deterministic SMT-LIB 2 text emission.
//!
//! All numerals are exact rationals; output is byte-stable for identical
//! inputs, which the golden tests rely on.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{One, Signed};

use crate::ratfunc::{Polynomial, Rational, Var};
use crate::regions::Region;

use super::{region_formula, Formula, Rel, SmtProblem};

/// Which side of a problem a standalone script should check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Query {
    Accepting,
    Rejecting,
}

fn int_sexp(i: &BigInt) -> String {
    if i.is_negative() {
        format!("(- {})", -i)
    } else {
        format!("{}", i)
    }
}

fn rational_sexp(r: &Rational) -> String {
    if r.denom().is_one() {
        int_sexp(r.numer())
    } else {
        format!("(/ {} {})", int_sexp(r.numer()), r.denom())
    }
}

fn poly_sexp(p: &Polynomial) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    let terms: Vec<String> = p
        .terms()
        .iter()
        .map(|(c, m)| {
            let mut factors: Vec<String> = Vec::new();
            for &(v, e) in m.exponents() {
                for _ in 0..e {
                    factors.push(v.name());
                }
            }
            if factors.is_empty() {
                rational_sexp(c)
            } else if c.is_one() && factors.len() == 1 {
                factors.pop().unwrap()
            } else if c.is_one() {
                format!("(* {})", factors.join(" "))
            } else {
                format!("(* {} {})", rational_sexp(c), factors.join(" "))
            }
        })
        .collect();
    if terms.len() == 1 {
        terms.into_iter().next().unwrap()
    } else {
        format!("(+ {})", terms.join(" "))
    }
}

pub(super) fn formula_sexp(f: &Formula) -> String {
    match f {
        Formula::True => "true".to_string(),
        Formula::False => "false".to_string(),
        Formula::Constraint(p, rel) => match rel {
            Rel::Neq => format!("(distinct {} 0)", poly_sexp(p)),
            _ => format!("({} {} 0)", rel.smt_op(), poly_sexp(p)),
        },
        Formula::And(parts) => format!(
            "(and {})",
            parts.iter().map(formula_sexp).collect::<Vec<_>>().join(" ")
        ),
        Formula::Or(parts) => format!(
            "(or {})",
            parts.iter().map(formula_sexp).collect::<Vec<_>>().join(" ")
        ),
        Formula::Not(inner) => format!("(not {})", formula_sexp(inner)),
    }
}

fn declarations(params: &[Var], aux: &[Var]) -> String {
    let mut out = String::new();
    let mut all: Vec<Var> = params.to_vec();
    all.extend_from_slice(aux);
    all.sort();
    all.dedup();
    for v in all {
        writeln!(out, "(declare-const {} Real)", v.name()).unwrap();
    }
    out
}

/// Standalone script checking one side of a problem on one region.
pub fn script_for_query(problem: &SmtProblem, region: &Region, query: Query) -> String {
    let assert = match query {
        Query::Accepting => &problem.accept_assert,
        Query::Rejecting => &problem.reject_assert,
    };
    let mut out = String::new();
    out.push_str("(set-logic QF_NRA)\n");
    out.push_str(&declarations(&problem.params, &problem.aux_vars));
    if problem.base != Formula::True {
        writeln!(out, "(assert {})", formula_sexp(&problem.base)).unwrap();
    }
    writeln!(out, "(assert {})", formula_sexp(assert)).unwrap();
    writeln!(out, "(assert {})", formula_sexp(&region_formula(region))).unwrap();
    out.push_str("(check-sat)\n");
    out
}

/// Standalone script for a bare formula (e.g. graph preservation).
pub fn script_for_formula(formula: &Formula) -> String {
    let mut out = String::new();
    out.push_str("(set-logic QF_NRA)\n");
    out.push_str(&declarations(&formula.variables(), &[]));
    writeln!(out, "(assert {})", formula_sexp(formula)).unwrap();
    out.push_str("(check-sat)\n");
    out
}
