use std::sync::Arc;

use rayon::prelude::*;

use crate::fields::{gradient, sample, trace_fn, NodeClass, ScalarField, UniformGrid};
use crate::geometry::{half_width_a, reflect, Point};

use super::MovingPlanesError;

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub lambda_count: usize,
    /// Nonpositivity tolerance; `None` means `10 h^2 (max|u| + max|v|)`.
    pub sign_tol: Option<f64>,
    /// Boundary standoff in grid cells for the monotonicity check.
    pub interior_margin: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { lambda_count: 64, sign_tol: None, interior_margin: 2.0 }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), MovingPlanesError> {
        if self.lambda_count < 2 {
            return Err(MovingPlanesError::InvalidConfig("lambda_count must be at least 2".into()));
        }
        if let Some(t) = self.sign_tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(MovingPlanesError::InvalidConfig("sign_tol must be positive".into()));
            }
        }
        if !(self.interior_margin >= 0.0 && self.interior_margin.is_finite()) {
            return Err(MovingPlanesError::InvalidConfig("interior_margin must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn resolved_sign_tol(&self, u: &ScalarField, v: &ScalarField) -> f64 {
        self.sign_tol.unwrap_or_else(|| {
            let h = u.grid().h();
            10.0 * h * h * (u.max_abs() + v.max_abs())
        })
    }
}

/// Values on the nodes of a cap region.
#[derive(Clone, Debug)]
pub struct CapField {
    pub lambda: f64,
    grid: Arc<UniformGrid>,
    pub nodes: Vec<usize>,
    pub values: Vec<f64>,
}

impl CapField {
    pub fn grid(&self) -> &Arc<UniformGrid> {
        &self.grid
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// Largest value and the node carrying it.
    pub fn max(&self) -> Option<(f64, usize)> {
        self.nodes
            .iter()
            .zip(&self.values)
            .fold(None, |best: Option<(f64, usize)>, (&n, &v)| match best {
                Some((b, _)) if b >= v => best,
                _ => Some((v, n)),
            })
    }

    /// Full-grid values with NaN off the cap (for rendering).
    pub fn to_grid_values(&self) -> Vec<f64> {
        let mut out = vec![f64::NAN; self.grid.len()];
        for (&n, &v) in self.nodes.iter().zip(&self.values) {
            out[n] = v;
        }
        out
    }
}

fn check_lambda(lambda: f64, a: f64) -> Result<(), MovingPlanesError> {
    if lambda > -a && lambda <= 0.0 {
        Ok(())
    } else {
        Err(MovingPlanesError::LambdaOutOfRange { lambda, a })
    }
}

/// `w(x^lambda) - w(x)` at the grid nodes strictly left of `x1 = lambda`.
pub fn reflect_difference(w: &ScalarField, lambda: f64) -> Result<CapField, MovingPlanesError> {
    let grid = w.grid();
    let a = half_width_a(grid.domain())?;
    check_lambda(lambda, a)?;
    reflect_difference_unchecked(w, lambda)
}

fn reflect_difference_unchecked(w: &ScalarField, lambda: f64) -> Result<CapField, MovingPlanesError> {
    let grid = w.grid();
    let nodes: Vec<usize> = grid.active_nodes().iter().copied().filter(|&n| grid.point(n).x1 < lambda).collect();
    let values = nodes
        .iter()
        .map(|&n| Ok(sample(w, reflect(grid.point(n), lambda))? - w.value(n)))
        .collect::<Result<Vec<f64>, MovingPlanesError>>()?;
    Ok(CapField { lambda, grid: grid.clone(), nodes, values })
}

/// The sweep planes: `lambda_count` values evenly spaced in `(x_left, 0]`,
/// where `x_left` is the abscissa of the leftmost active node, so that every
/// sampled cap contains at least one node.
pub fn lambda_samples(grid: &UniformGrid, count: usize) -> Vec<f64> {
    let x_left = grid.active_nodes().iter().map(|&n| grid.point(n).x1).fold(0.0, f64::min);
    (1..=count).map(|k| x_left - x_left * k as f64 / count as f64).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRecord {
    pub lambda: f64,
    pub cap_nodes: usize,
    pub max_u: f64,
    pub max_v: f64,
    pub argmax_u: Option<Point>,
    pub argmax_v: Option<Point>,
}

impl SweepRecord {
    /// Location of the larger of the two maxima.
    pub fn argmax(&self) -> Option<Point> {
        if self.max_u >= self.max_v {
            self.argmax_u
        } else {
            self.argmax_v
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonotonicityReport {
    pub pass: bool,
    pub checked: usize,
    /// Largest discrete `dw/dx1` over the checked nodes.
    pub max_derivative: f64,
    /// `threshold - max_derivative`; negative on failure.
    pub worst_margin: f64,
    pub threshold: f64,
    pub witness: Option<Point>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepReport {
    pub a: f64,
    pub sign_tol: f64,
    pub records: Vec<SweepRecord>,
    pub lambda_bar: f64,
    /// `(lambda, node, value, which)` with `which` 0 for U and 1 for V.
    pub violations: Vec<(f64, usize, f64, u8)>,
    pub symmetry_defect_u: f64,
    pub symmetry_defect_v: f64,
    pub monotonicity_u: MonotonicityReport,
    pub monotonicity_v: MonotonicityReport,
}

impl SweepReport {
    pub fn monotonicity_pass(&self) -> bool {
        self.monotonicity_u.pass && self.monotonicity_v.pass
    }

    pub fn worst_margin(&self) -> f64 {
        self.monotonicity_u.worst_margin.min(self.monotonicity_v.worst_margin)
    }

    /// Planes at which `U` or `V` exceeds the tolerance somewhere.
    pub fn violating_lambdas(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.violations.iter().map(|v| v.0).collect();
        out.dedup();
        out
    }

    pub fn all_planes_nonpositive(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn symmetric(&self) -> bool {
        self.symmetry_defect_u <= self.sign_tol && self.symmetry_defect_v <= self.sign_tol
    }
}

/// Largest `|w(x1, x2) - w(-x1, x2)|` over left-half nodes whose mirror
/// point lies in the closed domain.
pub fn symmetry_defect(w: &ScalarField) -> f64 {
    let grid = w.grid();
    grid.active_nodes()
        .par_iter()
        .filter_map(|&n| {
            let p = grid.point(n);
            if p.x1 >= 0.0 {
                return None;
            }
            sample(w, Point::new(-p.x1, p.x2)).ok().map(|m| (w.value(n) - m).abs())
        })
        .reduce(|| 0.0, f64::max)
}

/// Discrete `dw/dx1 < sign_tol / h` at every active node with `x1 <= -h`
/// lying at least `interior_margin` cells inside the domain.
pub fn monotonicity_check(w: &ScalarField, sign_tol: f64, config: &SweepConfig) -> Result<MonotonicityReport, MovingPlanesError> {
    let grid = w.grid();
    let h = grid.h();
    let threshold = sign_tol / h;
    let standoff = config.interior_margin * h;
    let mut rep = MonotonicityReport {
        pass: true,
        checked: 0,
        max_derivative: f64::NEG_INFINITY,
        worst_margin: f64::INFINITY,
        threshold,
        witness: None,
    };
    for &n in grid.active_nodes() {
        let p = grid.point(n);
        if p.x1 > -h * (1.0 - 1e-9) {
            continue;
        }
        if grid.class(n) == NodeClass::Exterior || -grid.domain().boundary_distance(p) < standoff {
            continue;
        }
        let d = gradient(w, n)?[0];
        rep.checked += 1;
        if d > rep.max_derivative {
            rep.max_derivative = d;
            rep.worst_margin = threshold - d;
            if !(d < threshold) {
                rep.witness = Some(p);
            }
        }
    }
    rep.pass = rep.max_derivative < threshold;
    if rep.checked == 0 {
        rep.max_derivative = 0.0;
        rep.worst_margin = threshold;
        rep.pass = true;
    }
    Ok(rep)
}

/// Sweep the plane across the left half of the domain, recording the
/// largest reflected differences of `u` and `v` on each cap.
pub fn sweep(u: &ScalarField, v: &ScalarField, config: &SweepConfig) -> Result<SweepReport, MovingPlanesError> {
    config.validate()?;
    let grid = u.grid();
    let a = half_width_a(grid.domain())?;
    let sign_tol = config.resolved_sign_tol(u, v);
    let lambdas = lambda_samples(grid, config.lambda_count);
    let per_plane: Vec<(SweepRecord, Vec<(f64, usize, f64, u8)>)> = lambdas
        .par_iter()
        .map(|&lambda| {
            let cu = reflect_difference_unchecked(u, lambda)?;
            let cv = reflect_difference_unchecked(v, lambda)?;
            let mu = cu.max();
            let mv = cv.max();
            let mut viol = Vec::new();
            for (which, cap) in [(0u8, &cu), (1u8, &cv)] {
                for (&n, &val) in cap.nodes.iter().zip(&cap.values) {
                    if val > sign_tol {
                        viol.push((lambda, n, val, which));
                    }
                }
            }
            let rec = SweepRecord {
                lambda,
                cap_nodes: cu.len(),
                max_u: mu.map_or(0.0, |m| m.0),
                max_v: mv.map_or(0.0, |m| m.0),
                argmax_u: mu.map(|m| grid.point(m.1)),
                argmax_v: mv.map(|m| grid.point(m.1)),
            };
            Ok((rec, viol))
        })
        .collect::<Result<_, MovingPlanesError>>()?;
    let mut records = Vec::with_capacity(per_plane.len());
    let mut violations = Vec::new();
    for (rec, viol) in per_plane {
        records.push(rec);
        violations.extend(viol);
    }
    let mut lambda_bar = -a;
    for r in &records {
        if r.max_u <= sign_tol && r.max_v <= sign_tol {
            lambda_bar = r.lambda;
        } else {
            break;
        }
    }
    Ok(SweepReport {
        a,
        sign_tol,
        records,
        lambda_bar,
        violations,
        symmetry_defect_u: symmetry_defect(u),
        symmetry_defect_v: symmetry_defect(v),
        monotonicity_u: monotonicity_check(u, sign_tol, config)?,
        monotonicity_v: monotonicity_check(v, sign_tol, config)?,
    })
}

/// The field `w = x1` with matching boundary data, increasing in `x1` and
/// therefore violating every moving-plane inequality.
pub fn anti_monotone_witness(grid: &Arc<UniformGrid>) -> ScalarField {
    ScalarField::from_exact(grid, |p| p.x1).with_trace(Some(trace_fn(|p: Point| p.x1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain2D;

    fn disk(h: f64) -> Arc<UniformGrid> {
        UniformGrid::new(&Domain2D::unit_disk(), h).unwrap()
    }

    #[test]
    fn reflected_difference_of_linear_and_quadratic() {
        let grid = disk(1.0 / 32.0);
        let w = anti_monotone_witness(&grid);
        let cap = reflect_difference(&w, -0.3).unwrap();
        for (&n, &val) in cap.nodes.iter().zip(&cap.values) {
            let x1 = grid.point(n).x1;
            assert!((val - 2.0 * (-0.3 - x1)).abs() < 1e-12);
            assert!(val > 0.0);
        }
        let q = ScalarField::from_exact(&grid, |p| 0.5 * p.norm_sq());
        let cap = reflect_difference(&q, -0.25).unwrap();
        let n = grid.node_at(Point::new(-0.5, 0.0)).unwrap();
        let k = cap.nodes.iter().position(|&m| m == n).unwrap();
        assert!((cap.values[k] + 0.125).abs() < 1e-12);
        assert!(reflect_difference(&q, 0.1).is_err());
        assert!(reflect_difference(&q, -1.0).is_err());
    }

    #[test]
    fn symmetric_field_has_small_sweep_maxima() {
        for h in [1.0 / 16.0, 1.0 / 32.0] {
            let grid = disk(h);
            let w = ScalarField::from_exact(&grid, |p| 0.5 * p.norm_sq() + 0.1 * p.x2);
            let rep = sweep(&w, &w, &SweepConfig::default()).unwrap();
            assert_eq!(rep.lambda_bar, 0.0);
            assert!(rep.violations.is_empty());
            assert!(rep.symmetry_defect_u < 1e-12);
            assert!(rep.monotonicity_pass());
        }
    }

    #[test]
    fn witness_violates_every_plane() {
        let grid = disk(1.0 / 32.0);
        let w = anti_monotone_witness(&grid);
        let q = ScalarField::from_exact(&grid, |p| 0.5 * p.norm_sq());
        let rep = sweep(&w, &q, &SweepConfig::default()).unwrap();
        assert_eq!(rep.violating_lambdas().len(), 64);
        assert_eq!(rep.lambda_bar, -rep.a);
        assert!(!rep.monotonicity_u.pass);
        assert!(rep.monotonicity_u.witness.is_some());
        assert!(rep.monotonicity_v.pass);
    }

    #[test]
    fn monotonicity_examples() {
        let grid = disk(1.0 / 32.0);
        let c = SweepConfig::default();
        let neg = ScalarField::from_exact(&grid, |p| -p.x1);
        assert!(monotonicity_check(&neg, 1e-6, &c).unwrap().pass);
        let q = ScalarField::from_exact(&grid, |p| 0.5 * p.norm_sq());
        assert!(monotonicity_check(&q, 1e-6, &c).unwrap().pass);
        let pos = ScalarField::from_exact(&grid, |p| p.x1);
        let r = monotonicity_check(&pos, 1e-6, &c).unwrap();
        assert!(!r.pass && r.worst_margin < 0.0);
    }

    #[test]
    fn lambda_bar_grows_with_tolerance() {
        let grid = disk(1.0 / 16.0);
        let w = ScalarField::from_exact(&grid, |p| 0.5 * p.norm_sq() + 0.05 * p.x1);
        let mut prev = f64::NEG_INFINITY;
        for tol in [1e-4, 1e-3, 1e-2, 1e-1, 1.0] {
            let cfg = SweepConfig { sign_tol: Some(tol), ..SweepConfig::default() };
            let rep = sweep(&w, &w, &cfg).unwrap();
            assert!(rep.lambda_bar >= prev);
            prev = rep.lambda_bar;
        }
        assert_eq!(prev, 0.0);
    }

    #[test]
    fn config_validation() {
        assert!(SweepConfig { lambda_count: 1, ..Default::default() }.validate().is_err());
        assert!(SweepConfig { sign_tol: Some(0.0), ..Default::default() }.validate().is_err());
    }
}
