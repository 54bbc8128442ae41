//! Randomized invariants of the algebra, reflections and the plane sweep.

use proptest::prelude::*;

use ma_core::fields::{det2, det_diff_coeffs, is_spd, ScalarField, Sym2, UniformGrid};
use ma_core::geometry::{reflect, Domain2D, Point};
use ma_core::moving_planes::{reflect_difference, sweep, SweepConfig};

fn sym() -> impl Strategy<Value = Sym2> {
    (-10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64).prop_map(|(a, b, c)| Sym2::new(a, b, c))
}

fn spd() -> impl Strategy<Value = Sym2> {
    (0.05..5.0f64, -5.0..5.0f64, 0.05..5.0f64).prop_map(|(l11, l21, l22)| Sym2::new(l11 * l11, l11 * l21, l21 * l21 + l22 * l22))
}

proptest! {
    #[test]
    fn determinant_difference_is_exact(a in sym(), b in sym()) {
        let r = det2(a) - det2(b) - det_diff_coeffs(a, b).pair(&(a - b));
        prop_assert!(r.abs() <= 1e-10 * (1.0 + det2(a).abs() + det2(b).abs()));
    }

    #[test]
    fn coefficients_of_spd_pairs_are_spd(a in spd(), b in spd()) {
        prop_assert!(is_spd(det_diff_coeffs(a, b)));
    }

    #[test]
    fn coefficients_are_symmetric_in_arguments(a in sym(), b in sym()) {
        prop_assert_eq!(det_diff_coeffs(a, b), det_diff_coeffs(b, a));
    }

    #[test]
    fn reflection_is_an_involution(x1 in -2.0..2.0f64, x2 in -2.0..2.0f64, lambda in -1.0..0.0f64) {
        let p = Point::new(x1, x2);
        let q = reflect(reflect(p, lambda), lambda);
        prop_assert!((q.x1 - p.x1).abs() < 1e-14 && q.x2 == p.x2);
    }

    #[test]
    fn caps_grow_with_lambda(l1 in -0.99..0.0f64, l2 in -0.99..0.0f64) {
        let grid = UniformGrid::new(&Domain2D::unit_disk(), 1.0 / 16.0).unwrap();
        let w = ScalarField::from_exact(&grid, |p| 0.5 * p.norm_sq());
        let (lo, hi) = if l1 <= l2 { (l1, l2) } else { (l2, l1) };
        let (a, b) = (reflect_difference(&w, lo).unwrap(), reflect_difference(&w, hi).unwrap());
        prop_assert!(a.nodes.iter().all(|n| b.nodes.contains(n)));
    }
}

#[test]
fn lambda_bar_is_monotone_in_sign_tol() {
    let grid = UniformGrid::new(&Domain2D::unit_disk(), 1.0 / 16.0).unwrap();
    // tilted quadratic: reflected differences grow positive as lambda -> 0
    let u = ScalarField::from_exact(&grid, |p| 0.5 * p.norm_sq() + 0.3 * p.x1);
    let mut prev = f64::NEG_INFINITY;
    for tol in [1e-6, 1e-3, 1e-2, 5e-2, 1e-1, 1.0] {
        let rep = sweep(&u, &u, &SweepConfig { sign_tol: Some(tol), ..SweepConfig::default() }).unwrap();
        assert!(rep.lambda_bar >= prev, "{tol}: {} < {prev}", rep.lambda_bar);
        prev = rep.lambda_bar;
    }
    assert_eq!(prev, 0.0);
}
