//! Uniform node lattice masked to a domain, with Shortley-Weller arms at
//! nodes next to the boundary and the derivative stencils built on them.

use std::sync::Arc;

use crate::geometry::{Domain2D, Point};

use super::FieldError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeClass {
    Interior,
    NearBoundary,
    Exterior,
}

/// Axis directions in arm order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dir {
    East = 0,
    West = 1,
    North = 2,
    South = 3,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::East, Dir::West, Dir::North, Dir::South];

    pub fn offset(self) -> (isize, isize) {
        match self {
            Dir::East => (1, 0),
            Dir::West => (-1, 0),
            Dir::North => (0, 1),
            Dir::South => (0, -1),
        }
    }

    pub fn opposite(self) -> Dir {
        match self {
            Dir::East => Dir::West,
            Dir::West => Dir::East,
            Dir::North => Dir::South,
            Dir::South => Dir::North,
        }
    }
}

/// Arms shorter than this fraction of `h` make a node "pinned": its equation
/// becomes a quadratic interpolation along that axis instead of the PDE,
/// which keeps the discrete operator's row scale bounded.
pub const PIN_ARM: f64 = 0.05;

/// Linear functional over nodal values and boundary-trace values.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Stencil {
    pub nodes: Vec<(usize, f64)>,
    pub cuts: Vec<(Point, f64)>,
}

impl Stencil {
    fn push_node(&mut self, n: usize, w: f64) {
        if let Some(e) = self.nodes.iter_mut().find(|e| e.0 == n) {
            e.1 += w;
        } else {
            self.nodes.push((n, w));
        }
    }

    /// Homogeneous part applied to nodal values (boundary data taken as zero).
    pub fn apply_nodes(&self, values: &[f64]) -> f64 {
        self.nodes.iter().map(|&(n, w)| w * values[n]).sum()
    }

    pub fn apply(&self, values: &[f64], trace: Option<&(dyn Fn(Point) -> f64 + Send + Sync)>) -> Result<f64, FieldError> {
        let mut acc = self.apply_nodes(values);
        if !self.cuts.is_empty() {
            let tr = trace.ok_or(FieldError::MissingTrace)?;
            acc += self.cuts.iter().map(|&(p, w)| w * tr(p)).sum::<f64>();
        }
        Ok(acc)
    }
}

/// Per-node difference operators, all second-order and exact on quadratics.
#[derive(Clone, Debug, Default)]
pub struct NodeStencils {
    pub d1: Stencil,
    pub d2: Stencil,
    pub d11: Stencil,
    pub d22: Stencil,
    pub d12: Stencil,
    /// Node whose 4-point cross stencil supplies `d12`.
    pub cross_center: usize,
    /// For pinned nodes, the interpolated value the node is tied to.
    pub pin: Option<Stencil>,
}

#[derive(Debug)]
pub struct UniformGrid {
    domain: Domain2D,
    h: f64,
    n1: usize,
    n2: usize,
    /// Lattice indices of the node at the origin.
    i0: usize,
    j0: usize,
    class: Vec<NodeClass>,
    arms: Vec<[f64; 4]>,
    active: Vec<usize>,
    active_index: Vec<usize>,
    stencils: Vec<NodeStencils>,
    cross_fallbacks: usize,
    pinned: usize,
}

impl UniformGrid {
    pub fn new(domain: &Domain2D, h: f64) -> Result<Arc<Self>, FieldError> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(FieldError::InvalidSpacing(h));
        }
        let b = domain.bbox();
        let i0 = (-b.x1_min / h).ceil().max(0.0) as usize + 2;
        let j0 = (-b.x2_min / h).ceil().max(0.0) as usize + 2;
        let n1 = i0 + (b.x1_max / h).ceil().max(0.0) as usize + 3;
        let n2 = j0 + (b.x2_max / h).ceil().max(0.0) as usize + 3;
        let total = n1 * n2;
        if total > 50_000_000 {
            return Err(FieldError::InvalidSpacing(h));
        }
        let mut grid = UniformGrid {
            domain: domain.clone(),
            h,
            n1,
            n2,
            i0,
            j0,
            class: vec![NodeClass::Exterior; total],
            arms: vec![[1.0; 4]; total],
            active: Vec::new(),
            active_index: vec![usize::MAX; total],
            stencils: Vec::new(),
            cross_fallbacks: 0,
            pinned: 0,
        };
        let inside: Vec<bool> = (0..total).map(|n| domain.inside(grid.point(n))).collect();
        for n in 0..total {
            if !inside[n] {
                continue;
            }
            let p = grid.point(n);
            let mut arms = [1.0; 4];
            for d in Dir::ALL {
                let nb = grid.neighbor(n, d).ok_or(FieldError::GridTooCoarse)?;
                if !inside[nb] {
                    arms[d as usize] = domain.segment_crossing(p, grid.point(nb));
                }
            }
            grid.arms[n] = arms;
            grid.class[n] = if arms.iter().all(|&a| a == 1.0) {
                NodeClass::Interior
            } else {
                NodeClass::NearBoundary
            };
            grid.active_index[n] = grid.active.len();
            grid.active.push(n);
        }
        if grid.active.is_empty() {
            return Err(FieldError::GridTooCoarse);
        }
        grid.build_stencils()?;
        Ok(Arc::new(grid))
    }

    pub fn domain(&self) -> &Domain2D {
        &self.domain
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinates of lattice node (0, 0).
    pub fn origin_offset(&self) -> Point {
        Point::new(-(self.i0 as f64) * self.h, -(self.j0 as f64) * self.h)
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n1 + i
    }

    pub fn ij(&self, n: usize) -> (usize, usize) {
        (n % self.n1, n / self.n1)
    }

    /// Node coordinates; mirror-symmetric lattices give exactly negated x1.
    pub fn point(&self, n: usize) -> Point {
        let (i, j) = self.ij(n);
        Point::new(
            (i as i64 - self.i0 as i64) as f64 * self.h,
            (j as i64 - self.j0 as i64) as f64 * self.h,
        )
    }

    /// Lattice cell containing `p` and the fractional offsets within it.
    pub fn locate(&self, p: Point) -> Option<(usize, usize, f64, f64)> {
        let fx = p.x1 / self.h + self.i0 as f64;
        let fy = p.x2 / self.h + self.j0 as f64;
        let (ci, cj) = (fx.floor(), fy.floor());
        if ci < 0.0 || cj < 0.0 || ci as usize + 1 >= self.n1 || cj as usize + 1 >= self.n2 {
            return None;
        }
        Some((ci as usize, cj as usize, fx - ci, fy - cj))
    }

    /// Node whose coordinates equal `p` exactly, if any.
    pub fn node_at(&self, p: Point) -> Option<usize> {
        let i = (p.x1 / self.h).round() as i64 + self.i0 as i64;
        let j = (p.x2 / self.h).round() as i64 + self.j0 as i64;
        if i < 0 || j < 0 || i as usize >= self.n1 || j as usize >= self.n2 {
            return None;
        }
        let n = self.index(i as usize, j as usize);
        (self.point(n) == p).then_some(n)
    }

    pub fn neighbor(&self, n: usize, d: Dir) -> Option<usize> {
        self.offset(n, d.offset().0, d.offset().1)
    }

    pub fn offset(&self, n: usize, di: isize, dj: isize) -> Option<usize> {
        let (i, j) = self.ij(n);
        let (ni, nj) = (i as isize + di, j as isize + dj);
        if ni < 0 || nj < 0 || ni as usize >= self.n1 || nj as usize >= self.n2 {
            None
        } else {
            Some(self.index(ni as usize, nj as usize))
        }
    }

    pub fn class(&self, n: usize) -> NodeClass {
        self.class[n]
    }

    pub fn is_active(&self, n: usize) -> bool {
        self.class[n] != NodeClass::Exterior
    }

    /// Fractional arm lengths (east, west, north, south), each in (0, 1].
    pub fn arms(&self, n: usize) -> [f64; 4] {
        self.arms[n]
    }

    /// Boundary point at the end of a shortened arm.
    pub fn cut_point(&self, n: usize, d: Dir) -> Point {
        let p = self.point(n);
        let (di, dj) = d.offset();
        let t = self.arms[n][d as usize] * self.h;
        Point::new(p.x1 + di as f64 * t, p.x2 + dj as f64 * t)
    }

    /// Non-exterior nodes in lattice order.
    pub fn active_nodes(&self) -> &[usize] {
        &self.active
    }

    pub fn active_index(&self, n: usize) -> Option<usize> {
        let k = self.active_index[n];
        (k != usize::MAX).then_some(k)
    }

    pub fn stencils(&self, n: usize) -> Option<&NodeStencils> {
        self.active_index(n).map(|k| &self.stencils[k])
    }

    pub fn is_pinned(&self, n: usize) -> bool {
        self.stencils(n).is_some_and(|s| s.pin.is_some())
    }

    pub fn pinned_count(&self) -> usize {
        self.pinned
    }

    /// Near-boundary nodes whose cross derivative borrows another node's
    /// 4-point stencil.
    pub fn cross_fallback_count(&self) -> usize {
        self.cross_fallbacks
    }

    fn has_cross_stencil(&self, n: usize) -> bool {
        [(1, 1), (1, -1), (-1, 1), (-1, -1)]
            .iter()
            .all(|&(di, dj)| self.offset(n, di, dj).is_some_and(|m| self.is_active(m)))
    }

    fn nearest_cross_center(&self, n: usize) -> Option<usize> {
        let p = self.point(n);
        for radius in 1..=6isize {
            let mut best: Option<(f64, usize)> = None;
            for dj in -radius..=radius {
                for di in -radius..=radius {
                    if di.abs().max(dj.abs()) != radius {
                        continue;
                    }
                    let Some(m) = self.offset(n, di, dj) else { continue };
                    if self.is_active(m) && self.has_cross_stencil(m) {
                        let d = p.dist(self.point(m));
                        if best.is_none_or(|(bd, bm)| d < bd || (d == bd && m < bm)) {
                            best = Some((d, m));
                        }
                    }
                }
            }
            if let Some((_, m)) = best {
                return Some(m);
            }
        }
        None
    }

    /// Value source one arm away along `d`: a node, or a boundary cut point.
    fn arm_end(&self, n: usize, d: Dir) -> ArmEnd {
        let a = self.arms[n][d as usize];
        if a == 1.0 {
            ArmEnd::Node(self.neighbor(n, d).expect("active node has in-grid neighbours"), self.h)
        } else {
            ArmEnd::Cut(self.cut_point(n, d), a * self.h)
        }
    }

    fn axis_stencils(&self, n: usize, plus: Dir, minus: Dir) -> (Stencil, Stencil) {
        let (ep, hp) = self.arm_end(n, plus).split();
        let (em, hm) = self.arm_end(n, minus).split();
        let mut d1 = Stencil::default();
        let mut d11 = Stencil::default();
        let den1 = hp * hm * (hp + hm);
        add_end(&mut d1, ep, hm * hm / den1);
        add_end(&mut d1, em, -hp * hp / den1);
        d1.push_node(n, (hp * hp - hm * hm) / den1);
        let s = 2.0 / (hp + hm);
        add_end(&mut d11, ep, s / hp);
        add_end(&mut d11, em, s / hm);
        d11.push_node(n, -s / hp - s / hm);
        (d1, d11)
    }

    fn pin_stencil(&self, n: usize) -> Option<Stencil> {
        let arms = self.arms[n];
        let (dmin, amin) = Dir::ALL
            .iter()
            .map(|&d| (d, arms[d as usize]))
            .min_by(|x, y| x.1.total_cmp(&y.1))?;
        if amin >= PIN_ARM {
            return None;
        }
        // positions along the axis in units of h, the short arm at +amin
        let mut pts: Vec<(End, f64)> = vec![(End::Cut(self.cut_point(n, dmin)), amin)];
        let back = dmin.opposite();
        match self.arm_end(n, back) {
            ArmEnd::Cut(p, len) => pts.push((End::Cut(p), -len / self.h)),
            ArmEnd::Node(m, _) => {
                pts.push((End::Node(m), -1.0));
                match self.arm_end(m, back) {
                    ArmEnd::Cut(p, len) => pts.push((End::Cut(p), -1.0 - len / self.h)),
                    ArmEnd::Node(m2, _) => pts.push((End::Node(m2), -2.0)),
                }
            }
        }
        let mut st = Stencil::default();
        for (k, (end, xk)) in pts.iter().enumerate() {
            let w: f64 = pts
                .iter()
                .enumerate()
                .filter(|&(l, _)| l != k)
                .map(|(_, (_, xl))| (0.0 - xl) / (xk - xl))
                .product();
            add_end(&mut st, *end, w);
        }
        Some(st)
    }

    fn build_stencils(&mut self) -> Result<(), FieldError> {
        let h2 = self.h * self.h;
        let mut out = Vec::with_capacity(self.active.len());
        let mut fallbacks = 0;
        let mut pinned = 0;
        for &n in &self.active {
            let (d1, d11) = self.axis_stencils(n, Dir::East, Dir::West);
            let (d2, d22) = self.axis_stencils(n, Dir::North, Dir::South);
            let cross_center = if self.has_cross_stencil(n) {
                n
            } else {
                fallbacks += 1;
                self.nearest_cross_center(n).ok_or(FieldError::GridTooCoarse)?
            };
            let mut d12 = Stencil::default();
            for (di, dj, w) in [(1, 1, 1.0), (1, -1, -1.0), (-1, 1, -1.0), (-1, -1, 1.0)] {
                let m = self.offset(cross_center, di, dj).expect("cross stencil checked");
                d12.push_node(m, w / (4.0 * h2));
            }
            let pin = self.pin_stencil(n);
            pinned += pin.is_some() as usize;
            out.push(NodeStencils { d1, d2, d11, d22, d12, cross_center, pin });
        }
        self.stencils = out;
        self.cross_fallbacks = fallbacks;
        self.pinned = pinned;
        Ok(())
    }
}

#[derive(Clone, Copy)]
enum End {
    Node(usize),
    Cut(Point),
}

enum ArmEnd {
    Node(usize, f64),
    Cut(Point, f64),
}

impl ArmEnd {
    fn split(self) -> (End, f64) {
        match self {
            ArmEnd::Node(m, len) => (End::Node(m), len),
            ArmEnd::Cut(p, len) => (End::Cut(p), len),
        }
    }
}

fn add_end(st: &mut Stencil, e: End, w: f64) {
    match e {
        End::Node(m) => st.push_node(m, w),
        End::Cut(p) => st.cuts.push((p, w)),
    }
}
