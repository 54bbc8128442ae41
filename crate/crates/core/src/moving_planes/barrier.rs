use std::f64::consts::E;

use crate::sampling::{lerp, ShiftedHalton};

use super::MovingPlanesError;

/// Value of the barrier at the left end of the strip, `e - 1`.
pub const PSI_MAX: f64 = E - 1.0;

/// Value of the barrier at the right end of the strip, `e - e^{1/2}`.
pub fn psi_min() -> f64 {
    E - 0.5f64.exp()
}

/// `e - e^{1/2}` as a constant.
pub const PSI_MIN: f64 = 1.069_560_557_758_917;

/// Constants for the narrow-strip barrier `psi = e - exp((x1 + a) / (2 eps))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BarrierParams {
    /// Ellipticity lower bound: `A11 >= m^2`.
    pub m: f64,
    /// Bound on the first- and zeroth-order coefficients.
    pub c0: f64,
    /// Half-width of the domain.
    pub a: f64,
    /// Strip width.
    pub epsilon: f64,
    /// Bounds on `dg/dv` and `df/du`.
    pub g_max: f64,
    pub f_max: f64,
}

impl BarrierParams {
    pub fn validate(&self) -> Result<(), MovingPlanesError> {
        let pos = |x: f64| x > 0.0 && x.is_finite();
        if !(pos(self.m) && pos(self.c0) && pos(self.a) && pos(self.g_max) && pos(self.f_max)) {
            return Err(MovingPlanesError::InvalidConfig("m, c0, a, g_max, f_max must be positive".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= self.a) {
            return Err(MovingPlanesError::InvalidConfig("epsilon must lie in (0, a]".into()));
        }
        Ok(())
    }

    /// Threshold every ratio must stay below: both `< -1` and, squared,
    /// above `g_max * f_max`.
    pub fn threshold(&self) -> f64 {
        (-1.0f64).min(-(self.g_max * self.f_max).sqrt())
    }
}

pub fn barrier_psi(x1: f64, params: &BarrierParams) -> Result<f64, MovingPlanesError> {
    let (lo, hi) = (-params.a, -params.a + params.epsilon);
    let slack = 1e-12 * (1.0 + params.a);
    if !(x1 >= lo - slack && x1 <= hi + slack) {
        return Err(MovingPlanesError::DomainError { x1, lo, hi });
    }
    Ok(E - ((x1 + params.a) / (2.0 * params.epsilon)).exp())
}

fn numerator(m: f64, c0: f64, eps: f64) -> f64 {
    -(m * m / (4.0 * eps * eps) - c0 / (2.0 * eps) - c0) + c0 * E
}

/// Upper estimate of `L psi / psi` over the strip for coefficients with
/// `A11 >= m^2`, `|B1| <= c0`, `|C| <= c0`; `+inf` when the estimate's
/// numerator is nonnegative and no bound follows.
pub fn barrier_ratio_bound(params: &BarrierParams) -> f64 {
    let num = numerator(params.m, params.c0, params.epsilon);
    if num >= 0.0 {
        f64::INFINITY
    } else {
        num / psi_min()
    }
}

/// Largest strip width such that every narrower strip keeps the ratio bound
/// at or below `min(-1, -sqrt(g_max f_max))`.
pub fn barrier_epsilon0(m: f64, c0: f64, g_max: f64, f_max: f64) -> Result<f64, MovingPlanesError> {
    let pos = |x: f64| x > 0.0 && x.is_finite();
    if !(pos(m) && pos(c0) && pos(g_max) && pos(f_max)) {
        return Err(MovingPlanesError::InvalidConfig("barrier inputs must be positive".into()));
    }
    let threshold = (-1.0f64).min(-(g_max * f_max).sqrt());
    let ok = |eps: f64| {
        let num = numerator(m, c0, eps);
        num < 0.0 && num / psi_min() <= threshold
    };
    // the numerator increases on (0, m^2 / c0] and is positive at its right end
    let (mut lo, mut hi) = (1e-12, m * m / c0);
    if !ok(lo) {
        return Err(MovingPlanesError::NoEpsilonFound);
    }
    while (hi - lo) > 1e-8 * lo {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// `L psi / psi` for the operator `A11 D11 + B1 D1 + C` at `x1 = -a + s * 2 eps`
/// (`s` in `[0, 1/2]`).
pub fn exact_ratio(s: f64, eps: f64, a11: f64, b1: f64, c: f64) -> f64 {
    let es = s.exp();
    let psi = E - es;
    (-a11 * es / (4.0 * eps * eps) - b1 * es / (2.0 * eps) + c * psi) / psi
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BarrierVerification {
    pub epsilon: f64,
    pub evaluations: usize,
    /// Largest sampled ratio (must stay below -1).
    pub max_ratio: f64,
    /// Smallest product of two sampled ratios (must exceed `g_max f_max`).
    pub min_product: f64,
    pub pass: bool,
}

/// Evaluate the exact ratio at `points` strip points against `draws`
/// coefficient triples (plus the worst corner `A11 = m^2, B1 = -c0, C = c0`).
pub fn verify_barrier(
    m: f64,
    c0: f64,
    g_max: f64,
    f_max: f64,
    epsilon: f64,
    points: usize,
    draws: usize,
    seed: u64,
) -> BarrierVerification {
    let mut seq = ShiftedHalton::new(4, seed);
    let mut strip: Vec<f64> = vec![0.0, 0.5];
    let mut coeffs: Vec<(f64, f64, f64)> = vec![(m * m, -c0, c0)];
    for _ in 0..points.max(draws) {
        let t = seq.next_point();
        if strip.len() < points + 2 {
            strip.push(0.5 * t[0]);
        }
        if coeffs.len() < draws + 1 {
            coeffs.push((lerp((m * m, m * m + c0), t[1]), lerp((-c0, c0), t[2]), lerp((-c0, c0), t[3])));
        }
    }
    let mut max_ratio = f64::NEG_INFINITY;
    let mut evaluations = 0;
    for &s in &strip {
        for &(a11, b1, c) in &coeffs {
            max_ratio = max_ratio.max(exact_ratio(s, epsilon, a11, b1, c));
            evaluations += 1;
        }
    }
    // with every ratio negative, the smallest pairwise product is the square
    // of the ratio closest to zero
    let min_product = if max_ratio < 0.0 { max_ratio * max_ratio } else { f64::NEG_INFINITY };
    let pass = max_ratio < -1.0 && min_product > g_max * f_max;
    BarrierVerification { epsilon, evaluations, max_ratio, min_product, pass }
}
