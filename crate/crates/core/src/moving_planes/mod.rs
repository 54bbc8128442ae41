//! Moving-plane verification objects: reflected differences across the
//! plane `x1 = lambda`, the plane sweep with its critical-plane estimate,
//! monotonicity and symmetry checks, the reflected differential inequality,
//! and the narrow-strip barrier calculator.

mod barrier;
mod inequality;
mod sweep;

use thiserror::Error;

use crate::fields::FieldError;
use crate::geometry::GeometryError;
use crate::nonlinearity::RhsError;

pub use barrier::{
    barrier_epsilon0, barrier_psi, barrier_ratio_bound, exact_ratio, verify_barrier, BarrierParams, BarrierVerification, PSI_MAX,
    PSI_MIN,
};
pub use inequality::{inequality_residual, inequality_residual_v, InequalityResidual};
pub use sweep::{
    anti_monotone_witness, lambda_samples, monotonicity_check, reflect_difference, symmetry_defect, sweep, CapField,
    MonotonicityReport, SweepConfig, SweepRecord, SweepReport,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MovingPlanesError {
    #[error("lambda {lambda} outside (-{a}, 0]")]
    LambdaOutOfRange { lambda: f64, a: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("x1 = {x1} outside the barrier strip [{lo}, {hi}]")]
    DomainError { x1: f64, lo: f64, hi: f64 },
    #[error("no admissible strip width down to 1e-12")]
    NoEpsilonFound,
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Rhs(#[from] RhsError),
}
