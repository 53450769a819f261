use approx::assert_relative_eq;
use proptest::prelude::*;
use relboltz_core::distributions::{
    bessel_k2, bessel_k2_scaled, chi1, chi2, invariant_identity_residual, juttner, ln_weight_newt, ln_weight_rel,
    maxwellian, sharp_asymp_check, weight_rel, WeightParams,
};
use relboltz_core::frames::Frame;
use relboltz_core::MomentumVec;
use std::f64::consts::PI;

/// `K2(x) = int_0^inf e^{-x cosh t} cosh(2t) dt` by the trapezoid rule.
fn k2_integral(x: f64) -> f64 {
    let h = 1e-3;
    let mut sum = 0.5 * (-x).exp();
    let mut t: f64 = h;
    while t < 50.0 {
        let term = (-x * t.cosh()).exp() * (2.0 * t).cosh();
        if term < 1e-300 {
            break;
        }
        sum += term;
        t += h;
    }
    sum * h
}

/// `int_0^R w(r) dr` by composite Simpson.
fn simpson(w: impl Fn(f64) -> f64, r: f64, n: usize) -> f64 {
    let h = r / n as f64;
    let mut s = w(0.0) + w(r);
    for k in 1..n {
        s += w(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn k2_matches_reference_values() {
    assert_relative_eq!(bessel_k2(1.0).unwrap(), 1.624_838_898_635_177_4, max_relative = 1e-12);
    assert_relative_eq!(bessel_k2(2.0).unwrap(), 0.253_759_754_566_055_9, max_relative = 1e-12);
}

#[test]
fn k2_matches_integral_representation() {
    for x in [0.1, 0.5, 3.0, 10.0, 40.0] {
        assert_relative_eq!(bessel_k2(x).unwrap(), k2_integral(x), max_relative = 1e-9);
    }
    let big = 1e4;
    assert!(bessel_k2(big).unwrap() == 0.0 || bessel_k2(big).unwrap().is_finite());
    assert_relative_eq!(bessel_k2_scaled(big).unwrap(), (PI / (2.0 * big)).sqrt() * (1.0 + 15.0 / (8.0 * big)), max_relative = 1e-6);
}

#[test]
fn juttner_is_normalised_in_three_dimensions() {
    for c in [1.0_f64, 2.0, 5.0, 10.0] {
        let r = (40.0 / c).max(12.0);
        let mass = 4.0 * PI * simpson(|r| r * r * juttner(&MomentumVec::new3(r, 0.0, 0.0), c, 3).unwrap(), r, 20_000);
        assert_relative_eq!(mass, 1.0, max_relative = 1e-9);
    }
}

#[test]
fn juttner_is_normalised_in_two_dimensions() {
    for c in [1.0_f64, 3.0, 20.0] {
        let r = (40.0 / c).max(12.0);
        let mass = 2.0 * PI * simpson(|r| r * juttner(&MomentumVec::new2(r, 0.0), c, 2).unwrap(), r, 20_000);
        assert_relative_eq!(mass, 1.0, max_relative = 1e-9);
    }
}

#[test]
fn juttner_approaches_maxwellian_quadratically() {
    let p = MomentumVec::new3(1.0, -0.5, 0.25);
    let err = |c: f64| (juttner(&p, c, 3).unwrap() - maxwellian(&p, 3).unwrap()).abs();
    let ratio = err(50.0) / err(100.0);
    assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
}

#[test]
fn juttner_rejects_dimension_mismatch() {
    assert!(juttner(&MomentumVec::new2(0.0, 0.0), 1.0, 3).is_err());
    assert!(maxwellian(&MomentumVec::new2(0.0, 0.0), 4).is_err());
}

#[test]
fn weights_tend_to_newtonian_weight() {
    let params = WeightParams::new(0.7, 1.3).unwrap();
    let x = MomentumVec::new2(0.4, -1.0);
    let p = MomentumVec::new2(1.2, 0.3);
    let gap = |c: f64| (ln_weight_rel(&x, &p, c, &params).unwrap() - ln_weight_newt(&x, &p, &params)).abs();
    assert!(gap(1e3) < 1e-4);
    assert!(gap(1e3) < gap(1e2) / 50.0);
    assert_relative_eq!(
        weight_rel(&x, &p, 2.0, &params).unwrap(),
        (-0.7 * (4.0 + p.norm_sq()).sqrt() * x.norm_sq() / 2.0).exp() * juttner(&p, 2.0, 2).unwrap().powf(1.3),
        max_relative = 1e-12
    );
}

#[test]
fn gaussian_ratio_is_bounded_at_sqrt_c() {
    let ratios: Vec<f64> = [4.0_f64, 16.0, 64.0, 256.0]
        .iter()
        .map(|&c| sharp_asymp_check(c.sqrt(), c, 3, 1.0).unwrap().ratio)
        .collect();
    let m = (2.0 * PI).powf(-1.5);
    for r in ratios {
        assert!(r > 0.5 * m && r < 1.5 * m, "ratio {r}");
    }
}

#[test]
fn weight_identity_is_relativistic_only() {
    let v = MomentumVec::new2(0.1, 0.2);
    let w = MomentumVec::new2(1.0, 0.0);
    assert!(invariant_identity_residual(&v, 0.5, &v, &w, &w, 1.0, Frame::NewtonOmega).is_err());
    assert!(invariant_identity_residual(&v, -1.0, &v, &w, &w, 1.0, Frame::Gs).is_err());
}

proptest! {
    #[test]
    fn chi_functions_match_naive_forms(x in 0.0..10.0f64, c in 1.0..10.0f64, r in 0.0..10.0f64) {
        prop_assert!(chi1(x) >= 0.0);
        prop_assert!((chi1(x) - (1.0 + x / 2.0 - (1.0 + x).sqrt())).abs() <= 1e-12 * (1.0 + x));
        let naive = c * c - c * c * (1.0 + r * r / (c * c)).sqrt();
        prop_assert!((chi2(c, r) - naive).abs() <= 1e-10 * (1.0 + c * c));
        prop_assert!(chi2(c + 1.0, r) <= chi2(c, r) + 1e-12);
    }

    #[test]
    fn weight_identity_holds(x in prop::array::uniform2(-3.0..3.0f64), p in prop::array::uniform2(-3.0..3.0f64),
                             q in prop::array::uniform2(-3.0..3.0f64), a in 0.0..6.3f64, t in 0.0..2.0f64, c in 1.0..100.0f64) {
        let (x, p, q) = (MomentumVec::new2(x[0], x[1]), MomentumVec::new2(p[0], p[1]), MomentumVec::new2(q[0], q[1]));
        let w = MomentumVec::new2(a.cos(), a.sin());
        for frame in [Frame::Gs, Frame::Cm] {
            prop_assert!(invariant_identity_residual(&x, t, &p, &q, &w, c, frame).unwrap() <= 1e-10);
        }
    }
}
