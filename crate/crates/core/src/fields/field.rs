use std::fmt;
use std::sync::Arc;

use crate::geometry::Point;

use super::grid::{Dir, UniformGrid};
use super::{FieldError, Sym2};

/// Dirichlet data, evaluated at boundary cut points.
pub type Trace = Arc<dyn Fn(Point) -> f64 + Send + Sync>;

pub fn trace_fn(f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Trace {
    Arc::new(f)
}

/// Nodal values on a masked grid. Exterior nodes hold NaN.
#[derive(Clone)]
pub struct ScalarField {
    grid: Arc<UniformGrid>,
    values: Vec<f64>,
    trace: Option<Trace>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("nodes", &self.grid.active_nodes().len())
            .field("has_trace", &self.trace.is_some())
            .finish()
    }
}

impl ScalarField {
    pub fn from_fn(grid: &Arc<UniformGrid>, f: impl Fn(Point) -> f64, trace: Option<Trace>) -> Self {
        let mut values = vec![f64::NAN; grid.len()];
        for &n in grid.active_nodes() {
            values[n] = f(grid.point(n));
        }
        Self { grid: grid.clone(), values, trace }
    }

    /// Field whose nodal values and boundary data both come from `f`.
    pub fn from_exact(grid: &Arc<UniformGrid>, f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        let trace = trace_fn(f);
        let t = trace.clone();
        Self::from_fn(grid, move |p| t(p), Some(trace))
    }

    pub fn zeros(grid: &Arc<UniformGrid>, trace: Option<Trace>) -> Self {
        Self::from_fn(grid, |_| 0.0, trace)
    }

    pub fn from_values(grid: &Arc<UniformGrid>, values: Vec<f64>, trace: Option<Trace>) -> Result<Self, FieldError> {
        if values.len() != grid.len() {
            return Err(FieldError::LengthMismatch { expected: grid.len(), got: values.len() });
        }
        let mut values = values;
        for n in 0..grid.len() {
            if !grid.is_active(n) {
                values[n] = f64::NAN;
            } else if !values[n].is_finite() {
                return Err(FieldError::NonFinite(n));
            }
        }
        Ok(Self { grid: grid.clone(), values, trace })
    }

    pub fn grid(&self) -> &Arc<UniformGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn trace(&self) -> Option<&Trace> {
        self.trace.as_ref()
    }

    pub fn with_trace(mut self, trace: Option<Trace>) -> Self {
        self.trace = trace;
        self
    }

    pub fn value(&self, n: usize) -> f64 {
        self.values[n]
    }

    pub fn set_value(&mut self, n: usize, v: f64) {
        debug_assert!(self.grid.is_active(n));
        self.values[n] = v;
    }

    /// `self + t * dir` on active nodes, keeping this field's trace.
    pub fn axpy(&self, t: f64, dir: &ScalarField) -> ScalarField {
        let mut out = self.clone();
        for &n in self.grid.active_nodes() {
            out.values[n] += t * dir.values[n];
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.grid.active_nodes().iter().map(|&n| self.values[n].abs()).fold(0.0, f64::max)
    }

    /// (min, max) over active nodes.
    pub fn range(&self) -> (f64, f64) {
        self.grid
            .active_nodes()
            .iter()
            .map(|&n| self.values[n])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    }

    fn tr(&self) -> Option<&(dyn Fn(Point) -> f64 + Send + Sync)> {
        self.trace.as_deref()
    }
}

fn stencils_of(f: &ScalarField, node: usize) -> Result<&super::grid::NodeStencils, FieldError> {
    f.grid.stencils(node).ok_or(FieldError::ExteriorNode(node))
}

/// Discrete gradient: central differences, or the non-uniform three-point
/// formula through boundary cut points next to the boundary.
pub fn gradient(f: &ScalarField, node: usize) -> Result<[f64; 2], FieldError> {
    let st = stencils_of(f, node)?;
    Ok([st.d1.apply(&f.values, f.tr())?, st.d2.apply(&f.values, f.tr())?])
}

/// Discrete Hessian: Shortley-Weller second differences on each axis and
/// the 4-point cross difference (borrowed from the nearest node with a full
/// diagonal neighbourhood when the node's own is cut by the boundary).
pub fn hessian(f: &ScalarField, node: usize) -> Result<Sym2, FieldError> {
    let st = stencils_of(f, node)?;
    Ok(Sym2::new(
        st.d11.apply(&f.values, f.tr())?,
        st.d12.apply(&f.values, f.tr())?,
        st.d22.apply(&f.values, f.tr())?,
    ))
}

/// Value of the field at an arbitrary point of the closed domain.
///
/// Cells with four active corners use bilinear interpolation. Cells cut by
/// the boundary use a weighted least-squares affine fit through the active
/// corners, the boundary points on the cell edges and the boundary points
/// straight across from `p` (valued by the trace), topped up with nearby
/// active nodes when fewer than three data points are available.
pub fn sample(f: &ScalarField, p: Point) -> Result<f64, FieldError> {
    let g = &*f.grid;
    let dom = g.domain();
    let h = g.h();
    if !dom.inside(p) && dom.boundary_distance(p) > 1e-9 * (1.0 + h) {
        return Err(FieldError::OutsideDomain(p));
    }
    if let Some(n) = g.node_at(p) {
        if g.is_active(n) {
            return Ok(f.values[n]);
        }
    }
    let (i, j, s, t) = g.locate(p).ok_or(FieldError::OutsideDomain(p))?;
    let c = [g.index(i, j), g.index(i + 1, j), g.index(i, j + 1), g.index(i + 1, j + 1)];
    if c.iter().all(|&n| g.is_active(n)) {
        let v = &f.values;
        return Ok((1.0 - s) * (1.0 - t) * v[c[0]] + s * (1.0 - t) * v[c[1]] + (1.0 - s) * t * v[c[2]] + s * t * v[c[3]]);
    }
    let mut data: Vec<(Point, f64)> = Vec::with_capacity(16);
    for &n in &c {
        if g.is_active(n) {
            data.push((g.point(n), f.values[n]));
        }
    }
    if let Some(tr) = f.tr() {
        // edges with exactly one active end: boundary point on its arm
        let edges = [(c[0], c[1], Dir::East), (c[2], c[3], Dir::East), (c[0], c[2], Dir::North), (c[1], c[3], Dir::North)];
        for (a, b, d) in edges {
            match (g.is_active(a), g.is_active(b)) {
                (true, false) => {
                    let q = g.cut_point(a, d);
                    data.push((q, tr(q)));
                }
                (false, true) => {
                    let q = g.cut_point(b, d.opposite());
                    data.push((q, tr(q)));
                }
                _ => {}
            }
        }
        for d in Dir::ALL {
            let (di, dj) = d.offset();
            let far = Point::new(p.x1 + di as f64 * h, p.x2 + dj as f64 * h);
            if dom.inside(p) && !dom.inside(far) {
                let tc = dom.segment_crossing(p, far);
                let q = Point::new(p.x1 + tc * (far.x1 - p.x1), p.x2 + tc * (far.x2 - p.x2));
                data.push((q, tr(q)));
            }
        }
    }
    if data.len() < 4 {
        for dj in -1..=2isize {
            for di in -1..=2isize {
                if (0..=1).contains(&di) && (0..=1).contains(&dj) {
                    continue;
                }
                if let Some(n) = g.offset(c[0], di, dj) {
                    if g.is_active(n) {
                        data.push((g.point(n), f.values[n]));
                    }
                }
            }
        }
    }
    affine_fit(&data, p, h).ok_or(FieldError::OutsideDomain(p))
}

/// Weighted least-squares affine fit evaluated at `p`; weights favour data
/// close to `p`.
fn affine_fit(data: &[(Point, f64)], p: Point, h: f64) -> Option<f64> {
    if data.is_empty() {
        return None;
    }
    let mut m = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for &(q, v) in data {
        let dx = (q.x1 - p.x1) / h;
        let dy = (q.x2 - p.x2) / h;
        let w = 1.0 / (dx * dx + dy * dy + 0.01);
        let phi = [1.0, dx, dy];
        for r in 0..3 {
            rhs[r] += w * phi[r] * v;
            for k in 0..3 {
                m[r][k] += w * phi[r] * phi[k];
            }
        }
    }
    let det = |a: &[[f64; 3]; 3]| {
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    };
    let d = det(&m);
    let scale = m[0][0] * m[1][1] * m[2][2];
    if d.abs() <= 1e-10 * scale.abs() {
        // collinear data: weighted mean
        let (sw, swv) = data.iter().fold((0.0, 0.0), |(a, b), &(q, v)| {
            let w = 1.0 / (q.dist(p).powi(2) / (h * h) + 0.01);
            (a + w, b + w * v)
        });
        return Some(swv / sw);
    }
    // Cramer's rule for the constant coefficient
    let mut m0 = m;
    for r in 0..3 {
        m0[r][0] = rhs[r];
    }
    Some(det(&m0) / d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain2D;

    fn disk_grid(h: f64) -> Arc<UniformGrid> {
        UniformGrid::new(&Domain2D::unit_disk(), h).unwrap()
    }

    #[test]
    fn gradient_of_linear_is_exact() {
        let g = disk_grid(1.0 / 16.0);
        let f = ScalarField::from_exact(&g, |p| p.x1);
        for &n in g.active_nodes() {
            let gr = gradient(&f, n).unwrap();
            assert!((gr[0] - 1.0).abs() < 1e-12 && gr[1].abs() < 1e-12);
        }
    }

    #[test]
    fn quadratic_gradient_at_quarter() {
        let g = disk_grid(1.0 / 16.0);
        let f = ScalarField::from_exact(&g, |p| 0.5 * p.norm_sq());
        let n = g.node_at(Point::new(0.25, 0.0)).unwrap();
        let gr = gradient(&f, n).unwrap();
        assert!((gr[0] - 0.25).abs() < 1e-12 && gr[1].abs() < 1e-12);
    }

    #[test]
    fn hessians_of_quadratics_are_exact_everywhere() {
        let g = disk_grid(1.0 / 20.0);
        let f = ScalarField::from_exact(&g, |p| 0.5 * p.norm_sq());
        let xy = ScalarField::from_exact(&g, |p| p.x1 * p.x2);
        for &n in g.active_nodes() {
            let hs = hessian(&f, n).unwrap();
            assert!((hs.a11 - 1.0).abs() < 1e-9 && hs.a12.abs() < 1e-9 && (hs.a22 - 1.0).abs() < 1e-9, "{hs:?}");
            let hx = hessian(&xy, n).unwrap();
            assert!(hx.a11.abs() < 1e-9 && (hx.a12 - 1.0).abs() < 1e-9 && hx.a22.abs() < 1e-9, "{hx:?}");
        }
    }

    #[test]
    fn exterior_node_is_an_error() {
        let g = disk_grid(1.0 / 8.0);
        let f = ScalarField::zeros(&g, None);
        assert!(matches!(gradient(&f, 0), Err(FieldError::ExteriorNode(0))));
        assert!(matches!(hessian(&f, 0), Err(FieldError::ExteriorNode(0))));
    }

    #[test]
    fn missing_trace_near_boundary() {
        let g = disk_grid(1.0 / 8.0);
        let f = ScalarField::zeros(&g, None);
        let n = *g
            .active_nodes()
            .iter()
            .find(|&&n| g.class(n) == super::super::NodeClass::NearBoundary)
            .unwrap();
        assert!(matches!(hessian(&f, n), Err(FieldError::MissingTrace)));
    }

    #[test]
    fn sample_is_exact_at_nodes_and_for_linears() {
        let g = disk_grid(1.0 / 16.0);
        let lin = |p: Point| 0.3 + 2.0 * p.x1 - 0.7 * p.x2;
        let f = ScalarField::from_exact(&g, lin);
        for &n in g.active_nodes() {
            assert_eq!(sample(&f, g.point(n)).unwrap(), f.value(n));
        }
        for k in 0..400 {
            let r = 0.999 * ((k as f64 * 0.618).fract()).sqrt();
            let th = k as f64 * 2.399;
            let p = Point::new(r * th.cos(), r * th.sin());
            assert!((sample(&f, p).unwrap() - lin(p)).abs() < 1e-12, "{p}");
        }
    }

    #[test]
    fn sample_outside_is_an_error() {
        let g = disk_grid(1.0 / 16.0);
        let f = ScalarField::from_exact(&g, |p| p.x1);
        assert!(matches!(sample(&f, Point::new(1.2, 0.0)), Err(FieldError::OutsideDomain(_))));
    }
}
