//! Numerical laboratory for coupled planar Monge-Ampere systems
//!
//! `det D^2 u + g(u, v, grad u) = 0`, `det D^2 v + f(u, v, grad v) = 0`
//!
//! with Dirichlet data on domains convex in x1. The crate solves such systems
//! for convex solutions and checks the moving-plane picture on the result:
//! the reflected differences `u(x^lambda) - u(x)` stay nonpositive on every
//! cap left of the plane `x1 = lambda`, solutions decrease in x1 on the left
//! half, and mirror-symmetric instances produce mirror-symmetric solutions.

pub mod cli;
pub mod fields;
pub mod geometry;
pub mod moving_planes;
pub mod nonlinearity;
pub mod sampling;
pub mod solver;
