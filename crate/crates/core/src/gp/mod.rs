//! Geometric programming: posynomial algebra, monomial condensation, a
//! log-space barrier solver and the single-condensation outer loop for
//! ratio-of-posynomial objectives.

mod barrier;
mod posynomial;
mod problem;
mod series;
mod solve;

pub use barrier::BarrierOptions;
pub(crate) use solve::warm_t0;
pub use posynomial::{condense, Monomial, Posynomial};
pub use problem::{Constraint, GpProblem, Objective};
pub use series::{log_rate_approx, SeriesTerms};
pub use solve::{
    solve_condensation, solve_gp, CondensationOptions, CondensationResult, GpOptions, GpSolution,
    IterateRecord,
};

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GpError {
    #[error("posynomial needs at least one term")]
    EmptyPosynomial,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("point has non-positive coordinate {index} = {value}")]
    NonPositivePoint { index: usize, value: f64 },
    #[error("invalid bounds on variable {index}: [{lower}, {upper}]")]
    InvalidBounds { index: usize, lower: f64, upper: f64 },
    #[error("problem contains a posynomial ratio; condense it first")]
    NotGeometric,
    #[error("initial point is not strictly feasible")]
    InitialPointInfeasible,
    #[error("problem is infeasible (smallest achievable log-violation {min_violation})")]
    Infeasible { min_violation: f64 },
    #[error("Newton budget exhausted (objective {objective})")]
    MaxIterations { best: Vec<f64>, objective: f64 },
    #[error("condensed objective rose at iteration {iteration}: {previous} -> {current}")]
    NonMonotone {
        iteration: usize,
        previous: f64,
        current: f64,
    },
    #[error("numerical failure: {0}")]
    Numerical(String),
}
