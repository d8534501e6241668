//! Information-constrained optimization over finite probability spaces.
//!
//! The crate maximizes expected utility `<x, y>` subject to a bound
//! `F(y) <= lambda` on an information functional, computes the resulting
//! Gibbs families and value curves, optimizes Markov channels under a
//! mutual-information budget, and compares them against deterministic
//! kernels.

pub mod asymptotics;
pub mod bisect;
pub mod cli;
pub mod error;
pub mod functionals;
pub mod kernels;
pub mod measure;
pub mod separation;
pub mod solver;

pub use error::{Error, Result};
pub use functionals::{FunctionalKind, InfoFunctional, Mode};
pub use measure::{
    normalize, pair, support, FiniteSpace, JointSpace, Measure, ProbMeasure, Utility,
};
pub use solver::{
    lower_branch, solve_for_lambda, solve_for_upsilon, solve_tv, special_values, value_curve,
    Branch, OptimalSolution, SolutionStatus, SpecialValues, ValueCurve,
};
