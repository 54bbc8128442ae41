use std::sync::Arc;

use crate::fields::{sample, trace_fn, ScalarField, Trace, UniformGrid};
use crate::geometry::{Domain2D, Point};
use crate::nonlinearity::CoupledRhs;
use crate::sampling::{lerp, ShiftedHalton};

use super::newton::{newton_solve, SolveConfig, SolveResult};
use super::SolverError;

/// Cases with exact solution `u = v = |x|^2 / 2` on the unit disk.
pub const MANUFACTURED_CASES: [&str; 3] = ["radial-decoupled", "radial-coupled-linear", "radial-coupled-exp"];

/// Extra case with a non-polynomial exact solution `u = v = exp(|x|^2 / 2)`,
/// so the nodal error is a genuine truncation error.
pub const GRADIENT_EXP_CASE: &str = "radial-gradient-exp";

/// Probe points for the continuum error keep this distance from the boundary.
pub const PROBE_STANDOFF: f64 = 1.0 / 16.0;
const PROBE_COUNT: usize = 20_000;
const PROBE_SEED: u64 = 0x005e_ed0f_d15c;

#[derive(Clone)]
pub struct ManufacturedCase {
    pub name: String,
    pub domain: Domain2D,
    pub rhs: CoupledRhs,
    pub boundary_u: Trace,
    pub boundary_v: Trace,
    pub exact_u: Trace,
    pub exact_v: Trace,
    /// True when the coupling sits on the boundary of the cross-monotonicity
    /// hypothesis (`dg/dv = 0`).
    pub hypothesis_boundary: bool,
}

impl std::fmt::Debug for ManufacturedCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ManufacturedCase")
            .field("name", &self.name)
            .field("domain", &self.domain.name())
            .field("rhs", &self.rhs.name())
            .finish()
    }
}

pub fn manufactured_case(name: &str) -> Result<ManufacturedCase, SolverError> {
    let (rhs_name, exact, hypothesis_boundary): (&str, Trace, bool) = match name {
        "radial-decoupled" => ("constant", trace_fn(|p: Point| 0.5 * p.norm_sq()), true),
        "radial-coupled-linear" => ("linear", trace_fn(|p: Point| 0.5 * p.norm_sq()), false),
        "radial-coupled-exp" => ("coupled-exp", trace_fn(|p: Point| 0.5 * p.norm_sq()), false),
        GRADIENT_EXP_CASE => ("gradient-exp", trace_fn(|p: Point| (0.5 * p.norm_sq()).exp()), false),
        other => return Err(SolverError::UnknownCase(other.to_string())),
    };
    Ok(ManufacturedCase {
        name: name.to_string(),
        domain: Domain2D::unit_disk(),
        rhs: CoupledRhs::builtin(rhs_name)?,
        boundary_u: exact.clone(),
        boundary_v: exact.clone(),
        exact_u: exact.clone(),
        exact_v: exact,
        hypothesis_boundary,
    })
}

impl ManufacturedCase {
    pub fn exact_fields(&self, grid: &Arc<UniformGrid>) -> (ScalarField, ScalarField) {
        let (eu, ev) = (self.exact_u.clone(), self.exact_v.clone());
        (
            ScalarField::from_fn(grid, |p| eu(p), Some(self.boundary_u.clone())),
            ScalarField::from_fn(grid, |p| ev(p), Some(self.boundary_v.clone())),
        )
    }

    pub fn solve(&self, h: f64, config: &SolveConfig) -> Result<SolveResult, SolverError> {
        let grid = UniformGrid::new(&self.domain, h)?;
        newton_solve(&grid, &self.rhs, &self.boundary_u, &self.boundary_v, config)
    }
}

/// Fixed point set, independent of `h`, at which reconstructions are compared
/// with the exact solution.
pub fn probe_points(domain: &Domain2D) -> Vec<Point> {
    let b = domain.bbox();
    let mut seq = ShiftedHalton::new(2, PROBE_SEED);
    let mut out = Vec::with_capacity(PROBE_COUNT);
    let mut tries = 0;
    while out.len() < PROBE_COUNT && tries < 50 * PROBE_COUNT {
        tries += 1;
        let t = seq.next_point();
        let p = Point::new(lerp((b.x1_min, b.x1_max), t[0]), lerp((b.x2_min, b.x2_max), t[1]));
        if domain.boundary_distance(p) <= -PROBE_STANDOFF {
            out.push(p);
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolutionError {
    /// Max-norm error at grid nodes.
    pub nodal: f64,
    /// Max-norm error of the sampled reconstruction at the probe points.
    pub continuum: f64,
}

pub fn solution_error(case: &ManufacturedCase, u: &ScalarField, v: &ScalarField, probes: &[Point]) -> Result<SolutionError, SolverError> {
    let grid = u.grid();
    let mut nodal = 0.0f64;
    for &n in grid.active_nodes() {
        let p = grid.point(n);
        nodal = nodal.max((u.value(n) - (case.exact_u)(p)).abs()).max((v.value(n) - (case.exact_v)(p)).abs());
    }
    let mut continuum = 0.0f64;
    for &p in probes {
        continuum = continuum
            .max((sample(u, p)? - (case.exact_u)(p)).abs())
            .max((sample(v, p)? - (case.exact_v)(p)).abs());
    }
    Ok(SolutionError { nodal, continuum })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub h: f64,
    pub iterations: usize,
    pub final_residual: f64,
    pub converged: bool,
    pub convexity_violations: usize,
    pub error: SolutionError,
    /// `error(previous h) / error(h)` for the continuum error.
    pub ratio: Option<f64>,
    /// `log2` of the ratio scaled to the actual refinement factor.
    pub order: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceTable {
    pub case: String,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn ratios(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.ratio).collect()
    }

    pub fn orders(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.order).collect()
    }
}

/// Solve a manufactured case on each spacing (coarse to fine) and tabulate
/// errors and observed orders.
pub fn convergence_study(case: &ManufacturedCase, hs: &[f64], config: &SolveConfig) -> Result<ConvergenceTable, SolverError> {
    let probes = probe_points(&case.domain);
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(hs.len());
    for &h in hs {
        let res = case.solve(h, config)?;
        let error = solution_error(case, &res.u, &res.v, &probes)?;
        let (ratio, order) = match rows.last() {
            Some(prev) if error.continuum > 0.0 => {
                let r = prev.error.continuum / error.continuum;
                (Some(r), Some(r.ln() / (prev.h / h).ln()))
            }
            _ => (None, None),
        };
        rows.push(ConvergenceRow {
            h,
            iterations: res.iterations,
            final_residual: res.final_residual(),
            converged: res.converged,
            convexity_violations: res.convexity_report.violations,
            error,
            ratio,
            order,
        });
    }
    Ok(ConvergenceTable { case: case.name.clone(), rows })
}
