//! Parameter synthesis for parametric Markov models.
//!
//! A parametric Markov chain (pMC) or decision process (pMDP) carries rational
//! functions over real-valued parameters on its transitions. This crate solves
//! three problems on such models:
//!
//! * **exact synthesis** — compute the solution function mapping parameter
//!   instantiations to reachability probabilities or expected rewards
//!   ([`elimination`]),
//! * **region verification** — decide whether every instantiation in a
//!   rectangular parameter region satisfies a specification, either by
//!   parameter lifting ([`lifting`]) or by emitting nonlinear-arithmetic
//!   queries to an external SMT solver ([`smt`]),
//! * **approximate synthesis** — partition a parameter space into accepting
//!   and rejecting boxes up to a coverage target ([`partition`]).
//!
//! All arithmetic in the exact pipeline is over arbitrary-precision rationals;
//! no floating point enters any verdict.

pub mod elimination;
pub mod engine;
pub mod lifting;
pub mod models;
pub mod partition;
pub mod ratfunc;
pub mod regions;
pub mod smt;

#[cfg(test)]
pub(crate) mod testutil;



pub use engine::{engine_names, make_engine, EngineOptions, RegionEngine};
pub use models::{ConcreteModel, Instantiation, ParametricModel, Specification};
pub use ratfunc::{Polynomial, Rational, RationalFunction, Var};
pub use regions::{Region, RegionVerdict, VerdictStatus};

