use std::sync::Arc;

use rayon::prelude::*;

use crate::fields::{hessian, is_spd, gradient, NodeClass, ScalarField, Sym2, Trace, UniformGrid};
use crate::geometry::Point;
use crate::nonlinearity::{CoupledRhs, RhsArgs, Which};

use super::reports::{boundary_monotonicity, BoundaryMonotonicityReport, ConvexityReport};
use super::sparse::{self, CsrMatrix};
use super::SolverError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitStrategy {
    /// `kappa |x|^2 / 2` plus a harmonic correction matching the data.
    Quadratic,
    /// Solution of `Laplace u = 2 sqrt(kappa)` with the Dirichlet data.
    Poisson,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveConfig {
    pub newton_tol: f64,
    pub max_iters: usize,
    /// Backtracking factor in (0, 1).
    pub beta: f64,
    pub min_step: f64,
    pub init: InitStrategy,
    pub linear_tol: f64,
    pub linear_max_iters: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            newton_tol: 1e-9,
            max_iters: 50,
            beta: 0.5,
            min_step: 1e-6,
            init: InitStrategy::Quadratic,
            linear_tol: 1e-10,
            linear_max_iters: 4000,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.newton_tol > 0.0) {
            return Err(SolverError::InvalidConfig("newton_tol must be positive".into()));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(SolverError::InvalidConfig("beta must lie in (0, 1)".into()));
        }
        if !(self.min_step > 0.0 && self.min_step <= 1.0) {
            return Err(SolverError::InvalidConfig("min_step must lie in (0, 1]".into()));
        }
        if !(self.linear_tol > 0.0 && self.linear_tol < 1.0) {
            return Err(SolverError::InvalidConfig("linear_tol must lie in (0, 1)".into()));
        }
        if self.max_iters == 0 || self.linear_max_iters == 0 {
            return Err(SolverError::InvalidConfig("iteration limits must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub u: ScalarField,
    pub v: ScalarField,
    /// Residual max-norm before each Newton step and at the final iterate.
    pub residual_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub convexity_report: ConvexityReport,
    pub boundary_monotonicity_u: BoundaryMonotonicityReport,
    pub boundary_monotonicity_v: BoundaryMonotonicityReport,
    pub linear_iterations: usize,
}

impl SolveResult {
    pub fn final_residual(&self) -> f64 {
        *self.residual_history.last().unwrap_or(&f64::NAN)
    }

    pub fn boundary_monotonicity_pass(&self) -> bool {
        self.boundary_monotonicity_u.pass && self.boundary_monotonicity_v.pass
    }
}

/// Local linearisation data at one node for one equation.
struct NodeLin {
    /// Residual value.
    value: f64,
    /// `None` for pinned nodes, else cofactor of the Hessian and the
    /// partials `(d/du, d/dv, d/dp1, d/dp2)` of the coupling.
    pde: Option<(Sym2, [f64; 4])>,
}

fn node_lin(own: &ScalarField, u: &ScalarField, v: &ScalarField, rhs: &CoupledRhs, which: Which, n: usize, with_partials: bool) -> Result<NodeLin, SolverError> {
    let grid = own.grid();
    let st = grid.stencils(n).ok_or(crate::fields::FieldError::ExteriorNode(n))?;
    if let Some(pin) = &st.pin {
        let target = pin.apply(own.values(), own.trace().map(|t| &**t))?;
        return Ok(NodeLin { value: own.value(n) - target, pde: None });
    }
    let hs = hessian(own, n)?;
    let gr = gradient(own, n)?;
    let args = RhsArgs::new(u.value(n), v.value(n), gr[0], gr[1]);
    if with_partials {
        let e = rhs.eval(which, args)?;
        Ok(NodeLin { value: hs.det() + e.value, pde: Some((hs.cof(), e.partials)) })
    } else {
        let val = rhs.value(which, args);
        if !val.is_finite() {
            return Err(crate::nonlinearity::RhsError::NonFiniteResult { which, args }.into());
        }
        Ok(NodeLin { value: hs.det() + val, pde: None })
    }
}

fn check_same_grid(u: &ScalarField, v: &ScalarField) -> Result<(), SolverError> {
    if Arc::ptr_eq(u.grid(), v.grid()) {
        Ok(())
    } else {
        Err(SolverError::GridMismatch)
    }
}

/// Discrete residual `(det D^2 u + g, det D^2 v + f)` at every active node;
/// pinned nodes report their interpolation defect instead.
pub fn residual(u: &ScalarField, v: &ScalarField, rhs: &CoupledRhs) -> Result<(ScalarField, ScalarField), SolverError> {
    check_same_grid(u, v)?;
    let grid = u.grid();
    let vals: Vec<(f64, f64)> = grid
        .active_nodes()
        .par_iter()
        .map(|&n| {
            let ru = node_lin(u, u, v, rhs, Which::G, n, false)?.value;
            let rv = node_lin(v, u, v, rhs, Which::F, n, false)?.value;
            Ok((ru, rv))
        })
        .collect::<Result<_, SolverError>>()?;
    let mut ru = vec![f64::NAN; grid.len()];
    let mut rv = vec![f64::NAN; grid.len()];
    for (&n, &(a, b)) in grid.active_nodes().iter().zip(&vals) {
        ru[n] = a;
        rv[n] = b;
    }
    Ok((
        ScalarField::from_values(grid, ru, None).map_err(|_| SolverError::NonFiniteResidual)?,
        ScalarField::from_values(grid, rv, None).map_err(|_| SolverError::NonFiniteResidual)?,
    ))
}

fn residual_max_norm(ru: &ScalarField, rv: &ScalarField) -> f64 {
    ru.max_abs().max(rv.max_abs())
}

/// Jacobian rows of one equation at node `n`, unknowns interleaved as
/// `(u_k, v_k) -> (2k, 2k+1)`.
fn jacobian_row(grid: &UniformGrid, lin: &NodeLin, n: usize, which: Which) -> Vec<(usize, f64)> {
    let st = grid.stencils(n).expect("active");
    let k = grid.active_index(n).expect("active");
    let own = match which {
        Which::G => 0,
        Which::F => 1,
    };
    let col = |m: usize| 2 * grid.active_index(m).expect("stencil nodes are active") + own;
    let mut row = Vec::with_capacity(24);
    match (&st.pin, &lin.pde) {
        (Some(pin), _) => {
            row.push((2 * k + own, 1.0));
            for &(m, w) in &pin.nodes {
                row.push((col(m), -w));
            }
        }
        (None, Some((c, p))) => {
            for &(m, w) in &st.d11.nodes {
                row.push((col(m), c.a11 * w));
            }
            for &(m, w) in &st.d22.nodes {
                row.push((col(m), c.a22 * w));
            }
            for &(m, w) in &st.d12.nodes {
                row.push((col(m), 2.0 * c.a12 * w));
            }
            for &(m, w) in &st.d1.nodes {
                row.push((col(m), p[2] * w));
            }
            for &(m, w) in &st.d2.nodes {
                row.push((col(m), p[3] * w));
            }
            row.push((2 * k, p[0]));
            row.push((2 * k + 1, p[1]));
        }
        (None, None) => unreachable!("partials requested"),
    }
    row
}

pub(crate) fn assemble_jacobian(u: &ScalarField, v: &ScalarField, rhs: &CoupledRhs) -> Result<(CsrMatrix, Vec<f64>), SolverError> {
    let grid = u.grid();
    let per_node: Vec<[(Vec<(usize, f64)>, f64); 2]> = grid
        .active_nodes()
        .par_iter()
        .map(|&n| {
            let lu = node_lin(u, u, v, rhs, Which::G, n, true)?;
            let lv = node_lin(v, u, v, rhs, Which::F, n, true)?;
            Ok([
                (jacobian_row(grid, &lu, n, Which::G), lu.value),
                (jacobian_row(grid, &lv, n, Which::F), lv.value),
            ])
        })
        .collect::<Result<_, SolverError>>()?;
    let mut rows = Vec::with_capacity(2 * per_node.len());
    let mut res = Vec::with_capacity(2 * per_node.len());
    for pair in per_node {
        for (row, r) in pair {
            rows.push(row);
            res.push(r);
        }
    }
    Ok((CsrMatrix::from_rows(rows), res))
}

/// Directional derivative of the residual at `(u, v)` along `(du, dv)` with
/// the boundary data held fixed.
pub fn jacobian_apply(
    u: &ScalarField,
    v: &ScalarField,
    rhs: &CoupledRhs,
    du: &ScalarField,
    dv: &ScalarField,
) -> Result<(ScalarField, ScalarField), SolverError> {
    check_same_grid(u, v)?;
    check_same_grid(u, du)?;
    check_same_grid(u, dv)?;
    let grid = u.grid();
    let out: Vec<(f64, f64)> = grid
        .active_nodes()
        .par_iter()
        .map(|&n| {
            let st = grid.stencils(n).expect("active");
            let mut pair = [0.0; 2];
            for (slot, (own, d_own, which)) in [(u, du, Which::G), (v, dv, Which::F)].into_iter().enumerate() {
                let lin = node_lin(own, u, v, rhs, which, n, true)?;
                pair[slot] = match (&st.pin, lin.pde) {
                    (Some(pin), _) => d_own.value(n) - pin.apply_nodes(d_own.values()),
                    (None, Some((c, p))) => {
                        let dh = Sym2::new(
                            st.d11.apply_nodes(d_own.values()),
                            st.d12.apply_nodes(d_own.values()),
                            st.d22.apply_nodes(d_own.values()),
                        );
                        c.pair(&dh)
                            + p[2] * st.d1.apply_nodes(d_own.values())
                            + p[3] * st.d2.apply_nodes(d_own.values())
                            + p[0] * du.value(n)
                            + p[1] * dv.value(n)
                    }
                    (None, None) => unreachable!(),
                };
            }
            Ok((pair[0], pair[1]))
        })
        .collect::<Result<_, SolverError>>()?;
    let mut a = vec![f64::NAN; grid.len()];
    let mut b = vec![f64::NAN; grid.len()];
    for (&n, &(x, y)) in grid.active_nodes().iter().zip(&out) {
        a[n] = x;
        b[n] = y;
    }
    Ok((ScalarField::from_values(grid, a, None)?, ScalarField::from_values(grid, b, None)?))
}

/// Solve `Laplace w = source` with Dirichlet data `trace` on the
/// Shortley-Weller discretisation (pinned nodes keep their interpolation).
pub fn solve_poisson(grid: &Arc<UniformGrid>, source: f64, trace: &Trace, config: &SolveConfig) -> Result<ScalarField, SolverError> {
    let n_act = grid.active_nodes().len();
    let mut rows = Vec::with_capacity(n_act);
    let mut b = Vec::with_capacity(n_act);
    for &n in grid.active_nodes() {
        let st = grid.stencils(n).expect("active");
        let k = grid.active_index(n).expect("active");
        let col = |m: usize| grid.active_index(m).expect("active");
        let mut row = Vec::new();
        let rhs_val = if let Some(pin) = &st.pin {
            row.push((k, 1.0));
            row.extend(pin.nodes.iter().map(|&(m, w)| (col(m), -w)));
            pin.cuts.iter().map(|&(p, w)| w * trace(p)).sum::<f64>()
        } else {
            row.extend(st.d11.nodes.iter().chain(&st.d22.nodes).map(|&(m, w)| (col(m), w)));
            source - st.d11.cuts.iter().chain(&st.d22.cuts).map(|&(p, w)| w * trace(p)).sum::<f64>()
        };
        rows.push(row);
        b.push(rhs_val);
    }
    let a = CsrMatrix::from_rows(rows);
    let (x, _) = sparse::solve(&a, &b, config.linear_tol.min(1e-12), config.linear_max_iters)?;
    let mut vals = vec![f64::NAN; grid.len()];
    for (&n, xv) in grid.active_nodes().iter().zip(x) {
        vals[n] = xv;
    }
    Ok(ScalarField::from_values(grid, vals, Some(trace.clone()))?)
}

fn boundary_points(grid: &UniformGrid) -> Vec<Point> {
    let mut out = Vec::new();
    for &n in grid.active_nodes() {
        if grid.class(n) == NodeClass::NearBoundary {
            for d in crate::fields::Dir::ALL {
                if grid.arms(n)[d as usize] < 1.0 {
                    out.push(grid.cut_point(n, d));
                }
            }
        }
    }
    out
}

/// `max(1, sup |coupling|)` over boundary points with the boundary data and
/// the gradient of `|x|^2 / 2`.
fn boundary_kappa(grid: &UniformGrid, rhs: &CoupledRhs, which: Which, bu: &Trace, bv: &Trace) -> f64 {
    boundary_points(grid)
        .iter()
        .map(|&p| rhs.value(which, RhsArgs::new(bu(p), bv(p), p.x1, p.x2)).abs())
        .filter(|v| v.is_finite())
        .fold(1.0, f64::max)
}

pub fn initial_guess(
    grid: &Arc<UniformGrid>,
    rhs: &CoupledRhs,
    bu: &Trace,
    bv: &Trace,
    config: &SolveConfig,
) -> Result<(ScalarField, ScalarField), SolverError> {
    let mut out = Vec::with_capacity(2);
    for (which, tr) in [(Which::G, bu), (Which::F, bv)] {
        let kappa = boundary_kappa(grid, rhs, which, bu, bv);
        let field = match config.init {
            InitStrategy::Quadratic => {
                let q = move |p: Point| 0.5 * kappa * p.norm_sq();
                let t = tr.clone();
                let w_trace: Trace = Arc::new(move |p| t(p) - q(p));
                let w = solve_poisson(grid, 0.0, &w_trace, config)?;
                let vals = (0..grid.len()).map(|n| w.value(n) + q(grid.point(n))).collect();
                ScalarField::from_values(grid, vals, Some(tr.clone()))?
            }
            InitStrategy::Poisson => solve_poisson(grid, 2.0 * kappa.sqrt(), tr, config)?,
        };
        out.push(field);
    }
    let v = out.pop().unwrap();
    let u = out.pop().unwrap();
    Ok((u, v))
}

/// Damped Newton iteration for the coupled system with Dirichlet data
/// `bu`, `bv`, started from the configured initial guess.
pub fn newton_solve(
    grid: &Arc<UniformGrid>,
    rhs: &CoupledRhs,
    bu: &Trace,
    bv: &Trace,
    config: &SolveConfig,
) -> Result<SolveResult, SolverError> {
    config.validate()?;
    let (u0, v0) = initial_guess(grid, rhs, bu, bv, config)?;
    newton_solve_from(u0, v0, rhs, config)
}

/// Damped Newton iteration from an explicit initial pair; the boundary data
/// are the traces carried by `u0` and `v0`.
pub fn newton_solve_from(u0: ScalarField, v0: ScalarField, rhs: &CoupledRhs, config: &SolveConfig) -> Result<SolveResult, SolverError> {
    config.validate()?;
    check_same_grid(&u0, &v0)?;
    if u0.trace().is_none() || v0.trace().is_none() {
        return Err(crate::fields::FieldError::MissingTrace.into());
    }
    let grid = u0.grid().clone();
    let (mut u, mut v) = (u0, v0);
    let (ru, rv) = residual(&u, &v, rhs)?;
    let mut norm = residual_max_norm(&ru, &rv);
    let mut history = vec![norm];
    let mut iterations = 0;
    let mut linear_iterations = 0;
    while norm > config.newton_tol {
        if iterations >= config.max_iters {
            return Err(SolverError::DidNotConverge { iterations, residual: norm });
        }
        let (jac, res) = assemble_jacobian(&u, &v, rhs)?;
        let b: Vec<f64> = res.iter().map(|r| -r).collect();
        let (step, stats) = sparse::solve(&jac, &b, config.linear_tol, config.linear_max_iters)?;
        linear_iterations += stats.iterations;
        let mut du = ScalarField::zeros(&grid, None);
        let mut dv = ScalarField::zeros(&grid, None);
        for (k, &n) in grid.active_nodes().iter().enumerate() {
            du.set_value(n, step[2 * k]);
            dv.set_value(n, step[2 * k + 1]);
        }
        let mut t = 1.0;
        loop {
            if t < config.min_step {
                return Err(SolverError::DidNotConverge { iterations, residual: norm });
            }
            let (tu, tv) = (u.axpy(t, &du), v.axpy(t, &dv));
            match residual(&tu, &tv, rhs) {
                Ok((ru, rv)) => {
                    let trial = residual_max_norm(&ru, &rv);
                    if trial < norm {
                        u = tu;
                        v = tv;
                        norm = trial;
                        break;
                    }
                }
                Err(SolverError::Rhs(_)) | Err(SolverError::NonFiniteResidual) => {}
                Err(e) => return Err(e),
            }
            t *= config.beta;
        }
        iterations += 1;
        history.push(norm);
    }
    let convexity_report = ConvexityReport::compute(&u, &v)?;
    convexity_report.check()?;
    let boundary_monotonicity_u = boundary_monotonicity(&u)?;
    let boundary_monotonicity_v = boundary_monotonicity(&v)?;
    Ok(SolveResult {
        u,
        v,
        residual_history: history,
        iterations,
        converged: true,
        convexity_report,
        boundary_monotonicity_u,
        boundary_monotonicity_v,
        linear_iterations,
    })
}

/// SPD test of the discrete Hessian of `f` at every active node.
pub fn convexity_flags(f: &ScalarField) -> Result<Vec<bool>, SolverError> {
    f.grid()
        .active_nodes()
        .par_iter()
        .map(|&n| Ok(is_spd(hessian(f, n)?)))
        .collect()
}
