//! Damped Newton solver for the coupled determinant system with Dirichlet
//! data, plus convexity monitoring and manufactured-solution validation.

mod manufactured;
mod newton;
mod reports;
pub mod sparse;

use thiserror::Error;

use crate::fields::FieldError;
use crate::geometry::GeometryError;
use crate::nonlinearity::RhsError;

pub use manufactured::{
    convergence_study, manufactured_case, probe_points, solution_error, ConvergenceRow, ConvergenceTable, ManufacturedCase,
    SolutionError, GRADIENT_EXP_CASE, MANUFACTURED_CASES, PROBE_STANDOFF,
};
pub use newton::{
    convexity_flags, initial_guess, jacobian_apply, newton_solve, newton_solve_from, residual, solve_poisson, InitStrategy,
    SolveConfig, SolveResult,
};
pub use reports::{boundary_monotonicity, BoundaryMonotonicityReport, ConvexityReport, CONVEXITY_LOSS_FRACTION};
pub use sparse::LinearSolveError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("Newton did not converge after {iterations} iterations (residual {residual:e})")]
    DidNotConverge { iterations: usize, residual: f64 },
    #[error("convexity lost at {violations} of {checked} interior nodes")]
    ConvexityLost { violations: usize, checked: usize },
    #[error("unknown manufactured case '{0}'")]
    UnknownCase(String),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("residual is not finite")]
    NonFiniteResidual,
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Rhs(#[from] RhsError),
    #[error(transparent)]
    Linear(#[from] LinearSolveError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
