//! Planar domains convex in the x1 direction, reflections across vertical
//! lines, and the cap regions swept by the moving-plane diagnostics.

use std::fmt;
use std::sync::{Arc, OnceLock};

use thiserror::Error;

use crate::fields::UniformGrid;
use crate::sampling::{lerp, ShiftedHalton};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("domain {0}: infimum of x1 is not negative (origin must lie inside)")]
    NonPositiveA(String),
    #[error("lambda {lambda} outside (-{a}, 0]")]
    LambdaOutOfRange { lambda: f64, a: f64 },
    #[error("unknown domain name {0:?}")]
    UnknownDomain(String),
    #[error("invalid domain parameters: {0}")]
    InvalidParameters(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Point {
    pub x1: f64,
    pub x2: f64,
}

impl Point {
    pub const fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }

    pub fn norm_sq(self) -> f64 {
        self.x1 * self.x1 + self.x2 * self.x2
    }

    pub fn dist(self, other: Point) -> f64 {
        ((self.x1 - other.x1).powi(2) + (self.x2 - other.x2).powi(2)).sqrt()
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x1, self.x2)
    }
}

/// Axis-aligned bounding box `[x1_min, x1_max] x [x2_min, x2_max]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BBox {
    pub x1_min: f64,
    pub x1_max: f64,
    pub x2_min: f64,
    pub x2_max: f64,
}

impl BBox {
    pub fn contains(&self, p: Point) -> bool {
        p.x1 >= self.x1_min && p.x1 <= self.x1_max && p.x2 >= self.x2_min && p.x2 <= self.x2_max
    }
}

/// Parameters of a user-defined superellipse
/// `|xi1|^n + |xi2|^n < 1` with `xi = (x - center) / semi_axes`, where the
/// x1 semi-axis is stretched by `1 + skew` on the right of the center.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Superellipse {
    pub center: Point,
    pub semi_axes: (f64, f64),
    pub exponent: f64,
    pub skew: f64,
}

impl Default for Superellipse {
    /// The unit circle.
    fn default() -> Self {
        Self { center: Point::new(0.0, 0.0), semi_axes: (1.0, 1.0), exponent: 2.0, skew: 0.0 }
    }
}

impl Superellipse {
    fn level(&self, p: Point) -> f64 {
        let d1 = p.x1 - self.center.x1;
        let a1 = if d1 > 0.0 { self.semi_axes.0 * (1.0 + self.skew) } else { self.semi_axes.0 };
        let xi1 = (d1 / a1).abs();
        let xi2 = ((p.x2 - self.center.x2) / self.semi_axes.1).abs();
        (xi1.powf(self.exponent) + xi2.powf(self.exponent)).powf(1.0 / self.exponent) - 1.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    Disk { radius: f64 },
    Ellipse { semi1: f64, semi2: f64 },
    Rect { half1: f64, half2: f64 },
    /// Points within `radius` of the segment `[-half_len, half_len] x {0}`.
    Stadium { half_len: f64, radius: f64 },
    Egg,
    /// Unit disk minus the disk of radius 0.5 centred at (0, 0.6); not
    /// convex in x1.
    Crescent,
    Superellipse(Superellipse),
}

const EGG_LEVEL: f64 = 0.64;

fn egg_level(p: Point) -> f64 {
    let c1 = p.x1.clamp(0.0, 1.0);
    let c2 = p.x1.clamp(-1.0, 1.0);
    p.x1 * p.x1 * (1.0 - 0.35 * c1) + p.x2 * p.x2 * (1.0 - 0.2 * c2) - EGG_LEVEL
}

impl Shape {
    fn level(&self, p: Point) -> f64 {
        match *self {
            Shape::Disk { radius } => p.norm_sq().sqrt() - radius,
            Shape::Ellipse { semi1, semi2 } => {
                (p.x1 / semi1).powi(2) + (p.x2 / semi2).powi(2) - 1.0
            }
            Shape::Rect { half1, half2 } => {
                let q1 = p.x1.abs() - half1;
                let q2 = p.x2.abs() - half2;
                let outside = (q1.max(0.0).powi(2) + q2.max(0.0).powi(2)).sqrt();
                outside + q1.max(q2).min(0.0)
            }
            Shape::Stadium { half_len, radius } => {
                let c = p.x1.clamp(-half_len, half_len);
                Point::new(p.x1 - c, p.x2).norm_sq().sqrt() - radius
            }
            Shape::Egg => egg_level(p),
            Shape::Crescent => {
                let outer = p.norm_sq().sqrt() - 1.0;
                let hole = 0.5 - Point::new(p.x1, p.x2 - 0.6).norm_sq().sqrt();
                outer.max(hole)
            }
            Shape::Superellipse(s) => s.level(p),
        }
    }

    fn has_exact_distance(&self) -> bool {
        matches!(
            self,
            Shape::Disk { .. } | Shape::Rect { .. } | Shape::Stadium { .. } | Shape::Crescent
        )
    }

    fn bbox(&self) -> BBox {
        match *self {
            Shape::Disk { radius } => BBox { x1_min: -radius, x1_max: radius, x2_min: -radius, x2_max: radius },
            Shape::Ellipse { semi1, semi2 } => BBox { x1_min: -semi1, x1_max: semi1, x2_min: -semi2, x2_max: semi2 },
            Shape::Rect { half1, half2 } => BBox { x1_min: -half1, x1_max: half1, x2_min: -half2, x2_max: half2 },
            Shape::Stadium { half_len, radius } => BBox {
                x1_min: -half_len - radius,
                x1_max: half_len + radius,
                x2_min: -radius,
                x2_max: radius,
            },
            // left extent 0.8, right extent below 1 (0.65 x1^2 >= 0.64 past x1 = 0.993)
            Shape::Egg => BBox { x1_min: -0.8, x1_max: 1.0, x2_min: -0.81, x2_max: 0.81 },
            Shape::Crescent => BBox { x1_min: -1.0, x1_max: 1.0, x2_min: -1.0, x2_max: 1.0 },
            Shape::Superellipse(s) => BBox {
                x1_min: s.center.x1 - s.semi_axes.0,
                x1_max: s.center.x1 + s.semi_axes.0 * (1.0 + s.skew),
                x2_min: s.center.x2 - s.semi_axes.1,
                x2_max: s.center.x2 + s.semi_axes.1,
            },
        }
    }
}

/// Bounded planar region given by an inside test, a signed boundary
/// distance (negative inside) and a bounding box.
#[derive(Clone)]
pub struct Domain2D {
    name: String,
    shape: Shape,
    bbox: BBox,
    half_width: Arc<OnceLock<Result<f64, GeometryError>>>,
}

impl fmt::Debug for Domain2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Domain2D").field("name", &self.name).field("shape", &self.shape).finish()
    }
}

pub const BUILTIN_DOMAINS: [&str; 5] = ["disk", "ellipse", "rect", "stadium", "egg"];

impl Domain2D {
    pub fn new(name: impl Into<String>, shape: Shape) -> Self {
        let bbox = shape.bbox();
        // pad so that boundary points sit strictly inside the box
        let pad = 1e-9 * (1.0 + bbox.x1_max - bbox.x1_min + bbox.x2_max - bbox.x2_min);
        let bbox = BBox {
            x1_min: bbox.x1_min - pad,
            x1_max: bbox.x1_max + pad,
            x2_min: bbox.x2_min - pad,
            x2_max: bbox.x2_max + pad,
        };
        Self { name: name.into(), shape, bbox, half_width: Arc::new(OnceLock::new()) }
    }

    pub fn builtin(name: &str) -> Result<Self, GeometryError> {
        let shape = match name {
            "disk" => Shape::Disk { radius: 1.0 },
            "ellipse" => Shape::Ellipse { semi1: 2.0, semi2: 1.0 },
            "rect" => Shape::Rect { half1: 1.0, half2: 0.6 },
            "stadium" => Shape::Stadium { half_len: 0.5, radius: 0.5 },
            "egg" => Shape::Egg,
            "crescent" => Shape::Crescent,
            other => return Err(GeometryError::UnknownDomain(other.to_string())),
        };
        Ok(Self::new(name, shape))
    }

    pub fn unit_disk() -> Self {
        Self::new("disk", Shape::Disk { radius: 1.0 })
    }

    pub fn superellipse(params: Superellipse) -> Result<Self, GeometryError> {
        let Superellipse { semi_axes, exponent, skew, .. } = params;
        if !(semi_axes.0 > 0.0 && semi_axes.1 > 0.0) {
            return Err(GeometryError::InvalidParameters("semi-axes must be positive".into()));
        }
        if !(exponent >= 1.0) {
            return Err(GeometryError::InvalidParameters("exponent must be >= 1".into()));
        }
        if !(skew > -1.0) {
            return Err(GeometryError::InvalidParameters("skew must exceed -1".into()));
        }
        Ok(Self::new("superellipse", Shape::Superellipse(params)))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn bbox(&self) -> BBox {
        self.bbox
    }

    pub fn inside(&self, p: Point) -> bool {
        self.shape.level(p) < 0.0
    }

    /// Signed distance to the boundary, negative inside. Exact for the disk,
    /// rectangle, stadium and crescent; first-order level-set normalisation
    /// `F / |grad F|` elsewhere (exact zero set, accurate near the boundary).
    pub fn boundary_distance(&self, p: Point) -> f64 {
        let f = self.shape.level(p);
        if self.shape.has_exact_distance() {
            return f;
        }
        let d = 1e-6;
        let g1 = (self.shape.level(Point::new(p.x1 + d, p.x2)) - self.shape.level(Point::new(p.x1 - d, p.x2))) / (2.0 * d);
        let g2 = (self.shape.level(Point::new(p.x1, p.x2 + d)) - self.shape.level(Point::new(p.x1, p.x2 - d))) / (2.0 * d);
        let gn = (g1 * g1 + g2 * g2).sqrt();
        if gn < 1e-12 {
            f
        } else {
            f / gn
        }
    }

    /// Domains mirror-symmetric about x1 = 0.
    pub fn is_x1_symmetric(&self) -> bool {
        match &self.shape {
            Shape::Disk { .. } | Shape::Ellipse { .. } | Shape::Rect { .. } | Shape::Stadium { .. } => true,
            Shape::Crescent => true,
            Shape::Egg => false,
            Shape::Superellipse(s) => s.center.x1 == 0.0 && s.skew == 0.0,
        }
    }

    /// Builtin domains with corners, where smoothness of the boundary fails.
    pub fn has_corners(&self) -> bool {
        matches!(self.shape, Shape::Rect { .. })
    }

    /// Crossing of the boundary on the segment from `inside_pt` (inside) to
    /// `outside_pt` (outside), returned as the fraction along the segment.
    pub fn segment_crossing(&self, inside_pt: Point, outside_pt: Point) -> f64 {
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        let at = |t: f64| {
            Point::new(
                inside_pt.x1 + t * (outside_pt.x1 - inside_pt.x1),
                inside_pt.x2 + t * (outside_pt.x2 - inside_pt.x2),
            )
        };
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.inside(at(mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    /// Left end of the horizontal chord at height `x2`, if the row meets
    /// the domain.
    fn chord_left_end(&self, x2: f64, scan: usize) -> Option<f64> {
        let b = self.bbox;
        let step = (b.x1_max - b.x1_min) / scan as f64;
        let mut prev = b.x1_min;
        for k in 1..=scan {
            let x1 = b.x1_min + k as f64 * step;
            if self.inside(Point::new(x1, x2)) {
                let t = self.segment_crossing(Point::new(x1, x2), Point::new(prev, x2));
                return Some(x1 + t * (prev - x1));
            }
            prev = x1;
        }
        None
    }
}

/// `a = -inf { x1 : (x1, x2) in domain }`, the distance from the origin
/// plane to the leftmost point of the domain.
pub fn half_width_a(domain: &Domain2D) -> Result<f64, GeometryError> {
    domain
        .half_width
        .get_or_init(|| compute_half_width(domain))
        .clone()
}

fn compute_half_width(domain: &Domain2D) -> Result<f64, GeometryError> {
    if !domain.inside(Point::new(0.0, 0.0)) {
        return Err(GeometryError::NonPositiveA(domain.name.clone()));
    }
    const ROWS: usize = 2048;
    const SCAN: usize = 512;
    let b = domain.bbox;
    let dy = (b.x2_max - b.x2_min) / ROWS as f64;
    let mut best: Option<(usize, f64)> = None;
    for r in 1..ROWS {
        let x2 = b.x2_min + r as f64 * dy;
        if let Some(x1) = domain.chord_left_end(x2, SCAN) {
            if best.is_none_or(|(_, v)| x1 < v) {
                best = Some((r, x1));
            }
        }
    }
    let (r, mut inf) = best.ok_or_else(|| GeometryError::NonPositiveA(domain.name.clone()))?;
    // golden-section refinement of the chord's left end around the best row
    let left_end = |x2: f64| domain.chord_left_end(x2, SCAN * 4).unwrap_or(f64::INFINITY);
    let (mut lo, mut hi) = (b.x2_min + (r as f64 - 1.0) * dy, b.x2_min + (r as f64 + 1.0) * dy);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = hi - phi * (hi - lo);
    let mut d = lo + phi * (hi - lo);
    let (mut fc, mut fd) = (left_end(c), left_end(d));
    for _ in 0..80 {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - phi * (hi - lo);
            fc = left_end(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + phi * (hi - lo);
            fd = left_end(d);
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    inf = inf.min(fc).min(fd);
    if inf >= 0.0 {
        return Err(GeometryError::NonPositiveA(domain.name.clone()));
    }
    Ok(-inf)
}

/// Mirror image of `p` across the vertical line `x1 = lambda`.
#[inline]
pub fn reflect(p: Point, lambda: f64) -> Point {
    Point::new(2.0 * lambda - p.x1, p.x2)
}

/// Grid nodes of the domain strictly left of the plane `x1 = lambda`.
#[derive(Clone, Debug, PartialEq)]
pub struct CapRegion {
    pub lambda: f64,
    pub node_indices: Vec<usize>,
}

impl CapRegion {
    pub fn is_empty(&self) -> bool {
        self.node_indices.is_empty()
    }

    pub fn len(&self) -> usize {
        self.node_indices.len()
    }
}

pub fn cap_region(domain: &Domain2D, grid: &UniformGrid, lambda: f64) -> Result<CapRegion, GeometryError> {
    let a = half_width_a(domain)?;
    if !(lambda >= -a && lambda <= 0.0) {
        return Err(GeometryError::LambdaOutOfRange { lambda, a });
    }
    let node_indices = grid
        .active_nodes()
        .iter()
        .copied()
        .filter(|&n| grid.point(n).x1 < lambda)
        .collect();
    Ok(CapRegion { lambda, node_indices })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContainmentReport {
    pub pass: bool,
    pub tested: usize,
    /// Sampled point with x1 < 0 and the first intermediate point
    /// `(x1', x2)`, `x1 < x1' < -x1`, found outside the domain.
    pub witness: Option<(Point, Point)>,
}

/// Probe the reflection containment property: for interior points with
/// `x1 < 0`, every `(x1', x2)` with `x1 < x1' < -x1` must be inside.
pub fn check_reflection_containment(domain: &Domain2D, samples: usize, seed: u64) -> ContainmentReport {
    const CHORD_STEPS: usize = 64;
    let b = domain.bbox;
    let mut seq = ShiftedHalton::new(2, seed);
    let mut tested = 0;
    let mut draws = 0usize;
    let max_draws = samples.saturating_mul(1000).max(1000);
    while tested < samples && draws < max_draws {
        draws += 1;
        let t = seq.next_point();
        let p = Point::new(lerp((b.x1_min, 0.0), t[0]), lerp((b.x2_min, b.x2_max), t[1]));
        if !(p.x1 < 0.0 && domain.inside(p)) {
            continue;
        }
        tested += 1;
        for k in 1..=CHORD_STEPS {
            let x1p = p.x1 + (k as f64 / (CHORD_STEPS + 1) as f64) * (-2.0 * p.x1);
            let q = Point::new(x1p, p.x2);
            if !domain.inside(q) {
                return ContainmentReport { pass: false, tested, witness: Some((p, q)) };
            }
        }
    }
    ContainmentReport { pass: true, tested, witness: None }
}
