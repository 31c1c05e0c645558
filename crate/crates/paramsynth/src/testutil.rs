//! Shared fixtures for unit tests: the bundled toy models in source form.

use crate::models::{Instantiation, ParametricModel};
use crate::ratfunc::{parse_rational_constant, Rational};

/// Four-state acyclic pMC; solution for reaching `target` is `1 - p + p*q`.
pub const TOY4: &str = "\
pmc
parameters p q
states 4 init 0
label target 2
transition 0 1 p
transition 0 2 1-p
transition 1 2 q
transition 1 3 1-q
transition 2 2 1
transition 3 3 1
";

/// Five-state pMC with a q-cycle between s1 and s2; solution for reaching
/// `target` = {s3} is `(p + q - p*q) / (1 + q)`.
pub const PMC5: &str = "\
pmc
parameters p q
states 5 init 0
label target 3
transition 0 1 p
transition 0 2 1-p
transition 1 2 q
transition 1 3 1-q
transition 2 1 q
transition 2 4 1-q
transition 3 3 1
transition 4 4 1
";

/// Toy pMDP: action `b` surely reaches the target, action `a` behaves like
/// the toy pMC with `q` on the first branching.
pub const PMDP3: &str = "\
pmdp
parameters p q
states 4 init 0
label target 2
transition 0 a 1 q
transition 0 a 2 1-q
transition 0 b 2 1
transition 1 a 2 p
transition 1 a 3 1-p
transition 2 a 2 1
transition 3 a 3 1
";

/// Parametric Knuth-Yao die; the probability of rolling `two` is
/// `p*(1-q)*(1-p) / (1-p*q)`.
pub const KYDIE: &str = "\
pmc
parameters p q
states 13 init 0
label two 8
transition 0 1 p
transition 0 2 1-p
transition 1 3 q
transition 1 4 1-q
transition 2 5 q
transition 2 6 1-q
transition 3 1 p
transition 3 7 1-p
transition 4 9 p
transition 4 8 1-p
transition 5 10 p
transition 5 11 1-p
transition 6 2 p
transition 6 12 1-p
transition 7 7 1
transition 8 8 1
transition 9 9 1
transition 10 10 1
transition 11 11 1
transition 12 12 1
";

/// Geometric loop with unit reward; expected reward to the target is `1/p`.
pub const GEOMETRIC: &str = "\
pmc
parameters p
states 2 init 0
label target 1
transition 0 1 p
transition 0 0 1-p
transition 1 1 1
reward 0 1
";

/// Chain with rational-function transitions `1/(1+p)` and `p/(1+p)`;
/// solution for reaching `target` is `q/(1+p)`.
pub const INVCHAIN: &str = "\
pmc
parameters p q
states 4 init 0
label target 3
transition 0 1 1/(1+p)
transition 0 2 p/(1+p)
transition 1 3 q
transition 1 2 1-q
transition 2 2 1
transition 3 3 1
";

pub fn rat(s: &str) -> Rational {
    parse_rational_constant(s).unwrap()
}

pub fn model(src: &str) -> ParametricModel {
    ParametricModel::parse(src).unwrap()
}

pub fn inst(m: &ParametricModel, s: &str) -> Instantiation {
    Instantiation::parse(s, &m.params).unwrap()
}
