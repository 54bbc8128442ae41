//! Grid-based scalar fields, discrete calculus and 2x2 symmetric algebra.

mod field;
mod grid;
pub mod io;
mod sym2;

use thiserror::Error;

use crate::geometry::Point;

pub use field::{gradient, hessian, sample, trace_fn, ScalarField, Trace};
pub use grid::{Dir, NodeClass, NodeStencils, Stencil, UniformGrid, PIN_ARM};
pub use sym2::{cof2, det2, det_diff_coeffs, is_spd, Sym2};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("node {0} is exterior to the domain")]
    ExteriorNode(usize),
    #[error("point {0} lies outside the closed domain")]
    OutsideDomain(Point),
    #[error("boundary data required near the boundary but the field has no trace")]
    MissingTrace,
    #[error("grid spacing {0} is not usable")]
    InvalidSpacing(f64),
    #[error("grid too coarse to resolve the domain")]
    GridTooCoarse,
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite value at node {0}")]
    NonFinite(usize),
    #[error("io: {0}")]
    Io(String),
    #[error("parse: {0}")]
    Parse(String),
}
