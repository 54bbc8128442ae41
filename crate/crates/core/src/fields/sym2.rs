use std::ops::{Add, Mul, Sub};

/// Symmetric 2x2 matrix `[[a11, a12], [a12, a22]]`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Sym2 {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

impl Sym2 {
    pub const IDENTITY: Sym2 = Sym2 { a11: 1.0, a12: 0.0, a22: 1.0 };

    pub const fn new(a11: f64, a12: f64, a22: f64) -> Self {
        Self { a11, a12, a22 }
    }

    pub fn det(&self) -> f64 {
        det2(*self)
    }

    pub fn cof(&self) -> Sym2 {
        cof2(*self)
    }

    /// Contraction `sum_ij a_ij b_ij`; the off-diagonal pair enters twice.
    pub fn pair(&self, other: &Sym2) -> f64 {
        self.a11 * other.a11 + 2.0 * self.a12 * other.a12 + self.a22 * other.a22
    }

    /// Ordinary matrix product (not symmetric in general), row-major.
    pub fn matmul(&self, other: &Sym2) -> [[f64; 2]; 2] {
        [
            [
                self.a11 * other.a11 + self.a12 * other.a12,
                self.a11 * other.a12 + self.a12 * other.a22,
            ],
            [
                self.a12 * other.a11 + self.a22 * other.a12,
                self.a12 * other.a12 + self.a22 * other.a22,
            ],
        ]
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let mean = 0.5 * (self.a11 + self.a22);
        let half_diff = 0.5 * (self.a11 - self.a22);
        let r = half_diff.hypot(self.a12);
        (mean - r, mean + r)
    }

    pub fn max_abs(&self) -> f64 {
        self.a11.abs().max(self.a12.abs()).max(self.a22.abs())
    }
}

impl Add for Sym2 {
    type Output = Sym2;
    fn add(self, o: Sym2) -> Sym2 {
        Sym2::new(self.a11 + o.a11, self.a12 + o.a12, self.a22 + o.a22)
    }
}

impl Sub for Sym2 {
    type Output = Sym2;
    fn sub(self, o: Sym2) -> Sym2 {
        Sym2::new(self.a11 - o.a11, self.a12 - o.a12, self.a22 - o.a22)
    }
}

impl Mul<Sym2> for f64 {
    type Output = Sym2;
    fn mul(self, m: Sym2) -> Sym2 {
        Sym2::new(self * m.a11, self * m.a12, self * m.a22)
    }
}

pub fn det2(m: Sym2) -> f64 {
    m.a11 * m.a22 - m.a12 * m.a12
}

/// Adjugate `det(m) m^{-1}`; linear in `m`, defined for singular `m`.
pub fn cof2(m: Sym2) -> Sym2 {
    Sym2::new(m.a22, -m.a12, m.a11)
}

/// Coefficients `c = (cof a + cof b) / 2` of the exact planar identity
/// `det a - det b = <c, a - b>`.
pub fn det_diff_coeffs(a: Sym2, b: Sym2) -> Sym2 {
    0.5 * (cof2(a) + cof2(b))
}

pub fn is_spd(m: Sym2) -> bool {
    m.a11 > 0.0 && det2(m) > 0.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_and_singular() {
        let m = Sym2::new(2.0, 0.0, 2.0);
        assert_eq!(det2(m), 4.0);
        assert_eq!(cof2(m), m);
        let s = Sym2::new(1.0, 1.0, 1.0);
        assert_eq!(det2(s), 0.0);
        assert_eq!(cof2(s), Sym2::new(1.0, -1.0, 1.0));
    }

    #[test]
    fn det_diff_small_cases() {
        let a = Sym2::new(2.0, 0.0, 2.0);
        let c = det_diff_coeffs(a, Sym2::IDENTITY);
        assert_eq!(c, Sym2::new(1.5, 0.0, 1.5));
        assert_eq!(c.pair(&(a - Sym2::IDENTITY)), 3.0);
        assert_eq!(det2(a) - det2(Sym2::IDENTITY), 3.0);
        let c = det_diff_coeffs(a, a);
        assert_eq!(c.pair(&(a - a)), 0.0);
    }

    #[test]
    fn spd_examples() {
        assert!(is_spd(Sym2::new(1.0, 0.0, 1.0)));
        assert!(!is_spd(Sym2::new(1.0, 2.0, 1.0)));
        assert_eq!(det2(Sym2::new(1.0, 2.0, 1.0)), -3.0);
        assert!(!is_spd(Sym2::new(-1.0, 0.0, -1.0)));
    }

    #[test]
    fn eigenvalues_of_diagonal() {
        let (lo, hi) = Sym2::new(3.0, 0.0, -1.0).eigenvalues();
        assert_eq!((lo, hi), (-1.0, 3.0));
    }
}
