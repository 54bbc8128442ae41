//! The coupling pair `(g, f)`: evaluation, partial derivatives and sampled
//! checks of the structural hypotheses the symmetry results rely on.
//!
//! * p1-symmetry: `g(u, v, p1, p2) >= g(u, v, -p1, p2)` for `p1 < 0`, and the
//!   same for `f`; equality everywhere is the symmetric variant.
//! * cross-monotonicity: `dg/dv > 0` and `df/du > 0`.
//!
//! Both are checked on a box by quasi-random sampling; a failed check comes
//! with the witness that broke it.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::sampling::{lerp, ShiftedHalton};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RhsError {
    #[error("{which} evaluated to a non-finite value at {args:?}")]
    NonFiniteResult { which: Which, args: RhsArgs },
    #[error("unknown coupling {0:?}")]
    UnknownRhs(String),
    #[error("invalid sampling box: {0}")]
    InvalidBox(String),
}

/// Arguments `(u, v, p1, p2)`; `p` is the gradient of the equation's own
/// unknown (`grad u` for `g`, `grad v` for `f`).
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct RhsArgs {
    pub u: f64,
    pub v: f64,
    pub p1: f64,
    pub p2: f64,
}

impl RhsArgs {
    pub const fn new(u: f64, v: f64, p1: f64, p2: f64) -> Self {
        Self { u, v, p1, p2 }
    }

    fn get(&self, k: usize) -> f64 {
        [self.u, self.v, self.p1, self.p2][k]
    }

    fn with(mut self, k: usize, x: f64) -> Self {
        match k {
            0 => self.u = x,
            1 => self.v = x,
            2 => self.p1 = x,
            _ => self.p2 = x,
        }
        self
    }

    fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite() && self.p1.is_finite() && self.p2.is_finite()
    }
}

impl fmt::Display for RhsArgs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(u={:.6e}, v={:.6e}, p1={:.6e}, p2={:.6e})", self.u, self.v, self.p1, self.p2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Which {
    G,
    F,
}

impl fmt::Display for Which {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Which::G => "g",
            Which::F => "f",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DerivativeMode {
    ClosedForm,
    FiniteDifference(f64),
}

pub const FD_STEP: f64 = 1e-6;

/// Value and partials `(d/du, d/dv, d/dp1, d/dp2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub partials: [f64; 4],
}

pub type ValueFn = Arc<dyn Fn(RhsArgs) -> f64 + Send + Sync>;
pub type PartialsFn = Arc<dyn Fn(RhsArgs) -> [f64; 4] + Send + Sync>;

#[derive(Clone)]
pub struct CoupledRhs {
    name: String,
    g: ValueFn,
    f: ValueFn,
    g_partials: Option<PartialsFn>,
    f_partials: Option<PartialsFn>,
    mode: DerivativeMode,
}

impl fmt::Debug for CoupledRhs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoupledRhs").field("name", &self.name).field("mode", &self.mode).finish()
    }
}

pub const BUILTIN_RHS: [&str; 4] = ["linear", "exp", "constant", "negexp"];

impl CoupledRhs {
    /// Pair with derivatives taken by central finite differences.
    pub fn new(
        name: impl Into<String>,
        g: impl Fn(RhsArgs) -> f64 + Send + Sync + 'static,
        f: impl Fn(RhsArgs) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            g: Arc::new(g),
            f: Arc::new(f),
            g_partials: None,
            f_partials: None,
            mode: DerivativeMode::FiniteDifference(FD_STEP),
        }
    }

    pub fn with_partials(
        mut self,
        gp: impl Fn(RhsArgs) -> [f64; 4] + Send + Sync + 'static,
        fp: impl Fn(RhsArgs) -> [f64; 4] + Send + Sync + 'static,
    ) -> Self {
        self.g_partials = Some(Arc::new(gp));
        self.f_partials = Some(Arc::new(fp));
        self.mode = DerivativeMode::ClosedForm;
        self
    }

    /// Force finite-difference partials even when closed forms exist.
    pub fn with_mode(mut self, mode: DerivativeMode) -> Self {
        if mode == DerivativeMode::ClosedForm && self.g_partials.is_none() {
            return self;
        }
        self.mode = mode;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn mode(&self) -> DerivativeMode {
        self.mode
    }

    /// Builtin pairs: `linear` (g = v-u-1, f = u-v-1), `exp` (g = -e^{-v},
    /// f = -e^{-u}), `constant` (g = f = -1), `negexp` (g = -e^{v},
    /// f = -e^{u}, violates cross-monotonicity), and `coupled-exp`
    /// (g = v-u-1+(e^{v-u}-1), f symmetric).
    pub fn builtin(name: &str) -> Result<Self, RhsError> {
        let rhs = match name {
            "linear" => Self::new(name, |a| a.v - a.u - 1.0, |a| a.u - a.v - 1.0)
                .with_partials(|_| [-1.0, 1.0, 0.0, 0.0], |_| [1.0, -1.0, 0.0, 0.0]),
            "exp" => Self::new(name, |a| -(-a.v).exp(), |a| -(-a.u).exp())
                .with_partials(|a| [0.0, (-a.v).exp(), 0.0, 0.0], |a| [(-a.u).exp(), 0.0, 0.0, 0.0]),
            "constant" => Self::new(name, |_| -1.0, |_| -1.0).with_partials(|_| [0.0; 4], |_| [0.0; 4]),
            "negexp" => Self::new(name, |a| -a.v.exp(), |a| -a.u.exp())
                .with_partials(|a| [0.0, -a.v.exp(), 0.0, 0.0], |a| [-a.u.exp(), 0.0, 0.0, 0.0]),
            "coupled-exp" => Self::new(
                name,
                |a| a.v - a.u - 1.0 + ((a.v - a.u).exp() - 1.0),
                |a| a.u - a.v - 1.0 + ((a.u - a.v).exp() - 1.0),
            )
            .with_partials(
                |a| {
                    let e = (a.v - a.u).exp();
                    [-1.0 - e, 1.0 + e, 0.0, 0.0]
                },
                |a| {
                    let e = (a.u - a.v).exp();
                    [1.0 + e, -1.0 - e, 0.0, 0.0]
                },
            ),
            // det D^2 u = u^2 + |grad u|^2 for u = exp(|x|^2 / 2)
            "gradient-exp" => Self::new(
                name,
                |a| (a.v - a.u) - a.u * a.u - a.p1 * a.p1 - a.p2 * a.p2,
                |a| (a.u - a.v) - a.v * a.v - a.p1 * a.p1 - a.p2 * a.p2,
            )
            .with_partials(
                |a| [-1.0 - 2.0 * a.u, 1.0, -2.0 * a.p1, -2.0 * a.p2],
                |a| [1.0, -1.0 - 2.0 * a.v, -2.0 * a.p1, -2.0 * a.p2],
            ),
            other => return Err(RhsError::UnknownRhs(other.to_string())),
        };
        Ok(rhs)
    }

    /// The family `g = c0 + c1 u + c2 v + c3 e^{-v} + c4 |p|^2` with the
    /// mirrored `f = c0 + c1 v + c2 u + c3 e^{-u} + c4 |p|^2`.
    pub fn from_coefficients(c: [f64; 5]) -> Self {
        Self::new(
            format!("custom[{},{},{},{},{}]", c[0], c[1], c[2], c[3], c[4]),
            move |a| c[0] + c[1] * a.u + c[2] * a.v + c[3] * (-a.v).exp() + c[4] * (a.p1 * a.p1 + a.p2 * a.p2),
            move |a| c[0] + c[1] * a.v + c[2] * a.u + c[3] * (-a.u).exp() + c[4] * (a.p1 * a.p1 + a.p2 * a.p2),
        )
        .with_partials(
            move |a| [c[1], c[2] - c[3] * (-a.v).exp(), 2.0 * c[4] * a.p1, 2.0 * c[4] * a.p2],
            move |a| [c[2] - c[3] * (-a.u).exp(), c[1], 2.0 * c[4] * a.p1, 2.0 * c[4] * a.p2],
        )
    }

    pub fn value(&self, which: Which, args: RhsArgs) -> f64 {
        match which {
            Which::G => (self.g)(args),
            Which::F => (self.f)(args),
        }
    }

    fn fd_partials(&self, which: Which, args: RhsArgs, step: f64) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (k, o) in out.iter_mut().enumerate() {
            let x = args.get(k);
            let d = step * x.abs().max(1.0);
            *o = (self.value(which, args.with(k, x + d)) - self.value(which, args.with(k, x - d))) / (2.0 * d);
        }
        out
    }

    /// Partials by central differences regardless of mode.
    pub fn finite_difference_partials(&self, which: Which, args: RhsArgs) -> [f64; 4] {
        self.fd_partials(which, args, FD_STEP)
    }

    pub fn eval(&self, which: Which, args: RhsArgs) -> Result<Evaluation, RhsError> {
        let value = self.value(which, args);
        let partials = match (self.mode, which) {
            (DerivativeMode::ClosedForm, Which::G) => self.g_partials.as_ref().map(|p| p(args)),
            (DerivativeMode::ClosedForm, Which::F) => self.f_partials.as_ref().map(|p| p(args)),
            _ => None,
        };
        let partials = match (partials, self.mode) {
            (Some(p), _) => p,
            (None, DerivativeMode::FiniteDifference(step)) => self.fd_partials(which, args, step),
            (None, DerivativeMode::ClosedForm) => self.fd_partials(which, args, FD_STEP),
        };
        if !value.is_finite() || partials.iter().any(|p| !p.is_finite()) {
            return Err(RhsError::NonFiniteResult { which, args });
        }
        Ok(Evaluation { value, partials })
    }
}

/// Ranges for `(u, v, p1, p2)`; `p1` must lie in negative numbers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplingBox {
    pub u: (f64, f64),
    pub v: (f64, f64),
    pub p1: (f64, f64),
    pub p2: (f64, f64),
}

impl Default for SamplingBox {
    fn default() -> Self {
        Self { u: (-1.0, 1.0), v: (-1.0, 1.0), p1: (-1.0, 0.0), p2: (-1.0, 1.0) }
    }
}

fn inflate(r: (f64, f64)) -> (f64, f64) {
    let w = r.1 - r.0;
    let pad = if w > 0.0 { 0.05 * w } else { 0.05 * r.0.abs().max(r.1.abs()).max(1.0) };
    (r.0 - pad, r.1 + pad)
}

impl SamplingBox {
    /// Box spanned by attained values, widened by 10% (5% on each side);
    /// the p1 range is `(-1.1 max|p1|, 0)`.
    pub fn from_attained(u: (f64, f64), v: (f64, f64), p1: (f64, f64), p2: (f64, f64)) -> Self {
        let p1_mag = p1.0.abs().max(p1.1.abs()).max(1e-3);
        Self { u: inflate(u), v: inflate(v), p1: (-1.1 * p1_mag, 0.0), p2: inflate(p2) }
    }

    fn validate(&self) -> Result<(), RhsError> {
        for (name, r) in [("u", self.u), ("v", self.v), ("p1", self.p1), ("p2", self.p2)] {
            if !(r.0.is_finite() && r.1.is_finite() && r.0 <= r.1) {
                return Err(RhsError::InvalidBox(format!("{name} range {r:?}")));
            }
        }
        if !(self.p1.0 < 0.0) {
            return Err(RhsError::InvalidBox("p1 range must contain negative values".into()));
        }
        Ok(())
    }

    fn point(&self, t: &[f64]) -> RhsArgs {
        let p1_hi = self.p1.1.min(0.0);
        RhsArgs::new(lerp(self.u, t[0]), lerp(self.v, t[1]), lerp((self.p1.0, p1_hi), t[2]), lerp(self.p2, t[3]))
    }
}

impl fmt::Display for SamplingBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "u in [{}, {}], v in [{}, {}], p1 in [{}, {}), p2 in [{}, {}]",
            self.u.0, self.u.1, self.v.0, self.v.1, self.p1.0, self.p1.1.min(0.0), self.p2.0, self.p2.1
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymmetryReport {
    pub pass: bool,
    /// `g(p1) = g(-p1)` and `f(p1) = f(-p1)` at every sample.
    pub equality: bool,
    /// Smallest `value(p1) - value(-p1)` seen.
    pub worst_margin: f64,
    pub witness: Option<(Which, RhsArgs)>,
    pub samples: usize,
    pub certified_box: SamplingBox,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrossMonotonicityReport {
    pub pass: bool,
    /// Minimum observed `dg/dv`.
    pub g_v_min: f64,
    /// Minimum observed `df/du`.
    pub f_u_min: f64,
    /// Supremum observed `dg/dv`.
    pub g_max: f64,
    /// Supremum observed `df/du`.
    pub f_max: f64,
    pub witness: Option<(Which, RhsArgs)>,
    pub samples: usize,
    pub certified_box: SamplingBox,
}

fn sample_points(bx: &SamplingBox, n: usize, seed: u64) -> Result<Vec<RhsArgs>, RhsError> {
    if n == 0 {
        return Err(RhsError::InvalidBox("sample count must be positive".into()));
    }
    bx.validate()?;
    let mut seq = ShiftedHalton::new(4, seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let a = bx.point(&seq.next_point());
        if a.p1 < 0.0 && a.is_finite() {
            out.push(a);
        }
    }
    Ok(out)
}

pub fn check_p1_symmetry(rhs: &CoupledRhs, bx: &SamplingBox, n: usize, seed: u64) -> Result<SymmetryReport, RhsError> {
    let pts = sample_points(bx, n, seed)?;
    let mut worst = f64::INFINITY;
    let mut worst_at = None;
    let mut equality = true;
    for a in &pts {
        let mirrored = RhsArgs { p1: -a.p1, ..*a };
        for which in [Which::G, Which::F] {
            let lhs = rhs.value(which, *a);
            let rhs_v = rhs.value(which, mirrored);
            if !lhs.is_finite() || !rhs_v.is_finite() {
                return Err(RhsError::NonFiniteResult { which, args: *a });
            }
            let margin = lhs - rhs_v;
            let tol = 1e-12 * (1.0 + lhs.abs() + rhs_v.abs());
            if margin.abs() > tol {
                equality = false;
            }
            if margin < worst {
                worst = margin;
                worst_at = Some((which, *a, tol));
            }
        }
    }
    let (which, args, tol) = worst_at.expect("at least one sample");
    let pass = worst >= -tol;
    Ok(SymmetryReport {
        pass,
        equality,
        worst_margin: worst,
        witness: (!pass).then_some((which, args)),
        samples: pts.len(),
        certified_box: *bx,
    })
}

pub fn check_cross_monotonicity(
    rhs: &CoupledRhs,
    bx: &SamplingBox,
    n: usize,
    seed: u64,
) -> Result<CrossMonotonicityReport, RhsError> {
    let pts = sample_points(bx, n, seed)?;
    let (mut g_min, mut f_min) = (f64::INFINITY, f64::INFINITY);
    let (mut g_max, mut f_max) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let (mut g_at, mut f_at) = (pts[0], pts[0]);
    for a in &pts {
        let gv = rhs.eval(Which::G, *a)?.partials[1];
        let fu = rhs.eval(Which::F, *a)?.partials[0];
        if gv < g_min {
            g_min = gv;
            g_at = *a;
        }
        if fu < f_min {
            f_min = fu;
            f_at = *a;
        }
        g_max = g_max.max(gv);
        f_max = f_max.max(fu);
    }
    let pass = g_min > 0.0 && f_min > 0.0;
    let witness = if g_min <= 0.0 {
        Some((Which::G, g_at))
    } else if f_min <= 0.0 {
        Some((Which::F, f_at))
    } else {
        None
    };
    Ok(CrossMonotonicityReport {
        pass,
        g_v_min: g_min,
        f_u_min: f_min,
        g_max,
        f_max,
        witness,
        samples: pts.len(),
        certified_box: *bx,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_examples() {
        let lin = CoupledRhs::builtin("linear").unwrap();
        let e = lin.eval(Which::G, RhsArgs::new(0.5, 0.5, 0.0, 0.0)).unwrap();
        assert_eq!(e.value, -1.0);
        assert_eq!(e.partials, [-1.0, 1.0, 0.0, 0.0]);
        let ex = CoupledRhs::builtin("exp").unwrap();
        let e = ex.eval(Which::F, RhsArgs::new(0.0, 0.0, 0.0, 0.0)).unwrap();
        assert_eq!(e.value, -1.0);
        assert_eq!(e.partials, [1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn non_finite_is_reported() {
        let r = CoupledRhs::new("blowup", |a| 1.0 / a.u, |_| 0.0);
        assert!(matches!(
            r.eval(Which::G, RhsArgs::new(0.0, 0.0, 0.0, 0.0)),
            Err(RhsError::NonFiniteResult { which: Which::G, .. })
        ));
    }

    #[test]
    fn symmetry_examples() {
        let bx = SamplingBox::default();
        let r = check_p1_symmetry(&CoupledRhs::builtin("linear").unwrap(), &bx, 1000, 1).unwrap();
        assert!(r.pass && r.equality);
        let odd = CoupledRhs::new("odd", |a| -(-a.v).exp() + a.p1 * a.p1.abs(), |a| -(-a.u).exp());
        let r = check_p1_symmetry(&odd, &bx, 1000, 1).unwrap();
        assert!(!r.pass);
        let (which, w) = r.witness.unwrap();
        assert_eq!(which, Which::G);
        assert!(w.p1 < 0.0);
        let even = CoupledRhs::new("even", |a| -(-a.v).exp() + a.p1.cos(), |a| -(-a.u).exp() + a.p1.cos());
        let r = check_p1_symmetry(&even, &bx, 1000, 1).unwrap();
        assert!(r.pass && r.equality);
    }

    #[test]
    fn strict_one_sided_symmetry_passes_without_equality() {
        // g(p1) - g(-p1) = -2 p1 > 0 for p1 < 0
        let r = CoupledRhs::new("tilt", |a| a.v - a.u - a.p1, |a| a.u - a.v - a.p1);
        let rep = check_p1_symmetry(&r, &SamplingBox::default(), 500, 2).unwrap();
        assert!(rep.pass && !rep.equality && rep.worst_margin > 0.0);
    }

    #[test]
    fn cross_monotonicity_examples() {
        let bx = SamplingBox::default();
        let r = check_cross_monotonicity(&CoupledRhs::builtin("linear").unwrap(), &bx, 500, 1).unwrap();
        assert!(r.pass);
        assert_eq!((r.g_max, r.f_max), (1.0, 1.0));
        let r = check_cross_monotonicity(&CoupledRhs::builtin("exp").unwrap(), &bx, 500, 1).unwrap();
        assert!(r.pass && r.g_v_min > 0.0);
        let r = check_cross_monotonicity(&CoupledRhs::builtin("negexp").unwrap(), &bx, 500, 1).unwrap();
        assert!(!r.pass);
        let (which, w) = r.witness.unwrap();
        assert_eq!(which, Which::G);
        assert!(CoupledRhs::builtin("negexp").unwrap().eval(Which::G, w).unwrap().partials[1] < 0.0);
    }

    #[test]
    fn bad_boxes_are_rejected() {
        let r = CoupledRhs::builtin("linear").unwrap();
        let bx = SamplingBox { p1: (0.0, 1.0), ..SamplingBox::default() };
        assert!(check_p1_symmetry(&r, &bx, 10, 0).is_err());
        assert!(check_cross_monotonicity(&r, &SamplingBox::default(), 0, 0).is_err());
    }

    #[test]
    fn attained_box_keeps_p1_negative() {
        let bx = SamplingBox::from_attained((0.0, 0.5), (0.0, 0.5), (-1.0, 1.0), (-1.0, 1.0));
        assert_eq!(bx.p1, (-1.1, 0.0));
        assert!((bx.u.0 + 0.025).abs() < 1e-15 && (bx.u.1 - 0.525).abs() < 1e-15);
    }
}
