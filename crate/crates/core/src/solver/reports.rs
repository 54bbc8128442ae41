use crate::fields::{hessian, is_spd, Dir, ScalarField};
use crate::geometry::Point;

use super::SolverError;

/// Share of deep-interior nodes allowed to lose discrete convexity before a
/// solve is rejected.
pub const CONVEXITY_LOSS_FRACTION: f64 = 0.01;

/// Per-node SPD flags of the discrete Hessians of `u` and `v`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexityReport {
    /// Active nodes in lattice order, with `(spd(D^2 u), spd(D^2 v))`.
    pub flags: Vec<(usize, bool, bool)>,
    /// Nodes farther than `2h` from the boundary.
    pub deep_nodes: usize,
    /// Deep nodes where either Hessian fails the SPD test.
    pub deep_violations: usize,
    /// All active nodes where either Hessian fails the SPD test.
    pub violations: usize,
}

impl ConvexityReport {
    pub fn compute(u: &ScalarField, v: &ScalarField) -> Result<Self, SolverError> {
        let grid = u.grid();
        let h = grid.h();
        let mut flags = Vec::with_capacity(grid.active_nodes().len());
        let (mut deep_nodes, mut deep_violations, mut violations) = (0, 0, 0);
        for &n in grid.active_nodes() {
            let fu = is_spd(hessian(u, n)?);
            let fv = is_spd(hessian(v, n)?);
            let deep = grid.domain().boundary_distance(grid.point(n)) < -2.0 * h;
            if deep {
                deep_nodes += 1;
            }
            if !(fu && fv) {
                violations += 1;
                if deep {
                    deep_violations += 1;
                }
            }
            flags.push((n, fu, fv));
        }
        Ok(Self { flags, deep_nodes, deep_violations, violations })
    }

    pub fn deep_fraction(&self) -> f64 {
        if self.deep_nodes == 0 {
            0.0
        } else {
            self.deep_violations as f64 / self.deep_nodes as f64
        }
    }

    pub fn check(&self) -> Result<(), SolverError> {
        if self.deep_fraction() > CONVEXITY_LOSS_FRACTION {
            Err(SolverError::ConvexityLost { violations: self.deep_violations, checked: self.deep_nodes })
        } else {
            Ok(())
        }
    }
}

/// Verdict on the boundary ordering along horizontal lines: a left boundary
/// point must exceed every node to its right on the same chord, and must be
/// at least the right boundary point of that chord.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryMonotonicityReport {
    pub pass: bool,
    pub rows_checked: usize,
    /// Smallest `u(left boundary) - u(x)` over all compared pairs.
    pub worst_margin: f64,
    /// Left boundary point and the point it failed against.
    pub witness: Option<(Point, Point)>,
}

/// Scan every grid row segment of `f` against its boundary trace.
pub fn boundary_monotonicity(f: &ScalarField) -> Result<BoundaryMonotonicityReport, SolverError> {
    let grid = f.grid();
    let trace = f.trace().ok_or(crate::fields::FieldError::MissingTrace)?;
    let tol = 1e-12 * (1.0 + f.max_abs());
    let mut report = BoundaryMonotonicityReport { pass: true, rows_checked: 0, worst_margin: f64::INFINITY, witness: None };
    let record = |report: &mut BoundaryMonotonicityReport, margin: f64, strict: bool, a: Point, b: Point| {
        let failed = if strict { margin <= 0.0 } else { margin < -tol };
        if margin < report.worst_margin {
            report.worst_margin = margin;
        }
        if failed && report.pass {
            report.pass = false;
            report.witness = Some((a, b));
        }
    };
    for j in 0..grid.n2() {
        let mut i = 0;
        while i < grid.n1() {
            if !grid.is_active(grid.index(i, j)) {
                i += 1;
                continue;
            }
            let start = i;
            while i < grid.n1() && grid.is_active(grid.index(i, j)) {
                i += 1;
            }
            let first = grid.index(start, j);
            let last = grid.index(i - 1, j);
            let left = grid.cut_point(first, Dir::West);
            let right = grid.cut_point(last, Dir::East);
            let tl = trace(left);
            report.rows_checked += 1;
            for k in start..i {
                let n = grid.index(k, j);
                record(&mut report, tl - f.value(n), true, left, grid.point(n));
            }
            record(&mut report, tl - trace(right), false, left, right);
        }
    }
    if report.rows_checked == 0 {
        report.worst_margin = 0.0;
    }
    Ok(report)
}
