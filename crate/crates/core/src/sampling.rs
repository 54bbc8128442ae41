//! Low-discrepancy point sets with a seeded random shift.
//!
//! Hypothesis checks and domain probes draw their samples from a Halton
//! sequence shifted modulo 1 (Cranley-Patterson rotation). The shift comes
//! from a ChaCha stream keyed by the run seed, so every verdict is
//! reproducible from the seed alone.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv_base = 1.0 / base as f64;
    let mut scale = inv_base;
    let mut acc = 0.0;
    while index > 0 {
        acc += (index % base) as f64 * scale;
        index /= base;
        scale *= inv_base;
    }
    acc
}

/// Shifted Halton sequence in the unit cube of dimension `dim` (at most 8).
#[derive(Debug, Clone)]
pub struct ShiftedHalton {
    shift: Vec<f64>,
    next: u64,
}

impl ShiftedHalton {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim >= 1 && dim <= PRIMES.len(), "Halton dimension out of range");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift = (0..dim).map(|_| rng.random::<f64>()).collect();
        // index 0 maps to the origin of every axis; start at 1
        Self { shift, next: 1 }
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    /// Next point, every coordinate in the open interval (0, 1).
    pub fn next_point(&mut self) -> Vec<f64> {
        loop {
            let idx = self.next;
            self.next += 1;
            let pt: Vec<f64> = self
                .shift
                .iter()
                .zip(PRIMES)
                .map(|(s, b)| (radical_inverse(idx, b) + s).fract())
                .collect();
            if pt.iter().all(|&t| t > 0.0 && t < 1.0) {
                return pt;
            }
        }
    }
}

/// Map `t` in (0, 1) onto the interval `[lo, hi]`.
pub fn lerp(range: (f64, f64), t: f64) -> f64 {
    range.0 + t * (range.1 - range.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse_base_two() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(2, 2), 0.25);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert_eq!(radical_inverse(5, 3), 2.0 / 3.0 + 1.0 / 9.0);
    }

    #[test]
    fn same_seed_same_points() {
        let mut a = ShiftedHalton::new(4, 7);
        let mut b = ShiftedHalton::new(4, 7);
        for _ in 0..100 {
            assert_eq!(a.next_point(), b.next_point());
        }
        let mut c = ShiftedHalton::new(4, 8);
        assert_ne!(a.next_point(), c.next_point());
    }

    #[test]
    fn points_fill_unit_square() {
        let mut h = ShiftedHalton::new(2, 1);
        let mut counts = [0usize; 4];
        for _ in 0..4000 {
            let p = h.next_point();
            let q = (p[0] >= 0.5) as usize + 2 * (p[1] >= 0.5) as usize;
            counts[q] += 1;
        }
        for c in counts {
            assert!((c as i64 - 1000).abs() < 20, "{counts:?}");
        }
    }
}
