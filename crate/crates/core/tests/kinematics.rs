use approx::assert_relative_eq;
use proptest::prelude::*;
use relboltz_core::frames::{Frame, ScatteringEvent};
use relboltz_core::kinematics::{
    check_conservation, energy, invariants, lorentz_inner, moller_velocity, moller_velocity_from_velocities,
    relative_momentum, scattering_angle, FourMomentum,
};
use relboltz_core::{Error, MomentumVec};

fn naive_g(p: [f64; 3], q: [f64; 3], c: f64) -> f64 {
    let e = |v: [f64; 3]| (c * c + v.iter().map(|x| x * x).sum::<f64>()).sqrt();
    let dot: f64 = p.iter().zip(&q).map(|(a, b)| a * b).sum();
    (2.0 * (e(p) * e(q) - dot - c * c)).sqrt()
}

#[test]
fn energy_of_rest_particle_is_c() {
    let z = MomentumVec::zeros(3);
    assert_eq!(energy(&z, 7.0).unwrap(), 7.0);
    assert_relative_eq!(energy(&MomentumVec::new3(3.0, 4.0, 0.0), 12.0).unwrap(), 13.0);
}

#[test]
fn energy_rejects_bad_c() {
    let p = MomentumVec::new2(1.0, 0.0);
    assert!(matches!(energy(&p, 0.0), Err(Error::Domain(_))));
    assert!(energy(&p, -1.0).is_err());
    assert!(energy(&p, f64::NAN).is_err());
}

#[test]
fn four_momentum_shell_check() {
    let p = MomentumVec::new3(0.3, 0.4, 0.0);
    assert!(FourMomentum::new(5.0_f64.hypot(0.5), p, 5.0).is_ok());
    assert!(FourMomentum::new(5.1, p, 5.0).is_err());
    let a = FourMomentum::on_shell(p, 5.0).unwrap();
    assert_relative_eq!(lorentz_inner(&a, &a).unwrap(), -25.0, max_relative = 1e-14);
}

#[test]
fn s_and_g_of_head_on_pair() {
    // p = -q = k e1: s = 4 (c^2 + k^2), g = 2k.
    let (k, c) = (1.5, 2.0);
    let inv = invariants(&MomentumVec::new3(k, 0.0, 0.0), &MomentumVec::new3(-k, 0.0, 0.0), c).unwrap();
    assert_relative_eq!(inv.g, 2.0 * k, max_relative = 1e-14);
    assert_relative_eq!(inv.s, 4.0 * (c * c + k * k), max_relative = 1e-14);
}

#[test]
fn g_is_accurate_when_naive_form_cancels() {
    let p = MomentumVec::new3(1.0, 0.0, 0.0);
    let q = MomentumVec::new3(1.0 + 1e-6, 0.0, 0.0);
    let c = 1e4;
    let g = relative_momentum(&p, &q, c);
    assert_relative_eq!(g, 1e-6, max_relative = 1e-6);
}

#[test]
fn scattering_angle_of_reversal_is_pi() {
    let p = MomentumVec::new3(1.0, 0.5, 0.0);
    let q = MomentumVec::new3(-1.0, -0.5, 0.0);
    let theta = scattering_angle(&p, &q, &q, &p, 3.0).unwrap();
    assert_relative_eq!(theta, std::f64::consts::PI, epsilon = 1e-7);
    assert_relative_eq!(scattering_angle(&p, &q, &p, &q, 3.0).unwrap(), 0.0, epsilon = 1e-7);
}

#[test]
fn scattering_angle_rejects_nonconserving_pair() {
    let p = MomentumVec::new3(1.0, 0.0, 0.0);
    let q = MomentumVec::new3(-1.0, 0.0, 0.0);
    let far = MomentumVec::new3(10.0, 0.0, 0.0);
    assert!(matches!(scattering_angle(&p, &q, &far, &q, 1.0), Err(Error::DegenerateCollision(_))));
    assert!(matches!(scattering_angle(&p, &p, &p, &p, 1.0), Err(Error::DegenerateCollision(_))));
}

#[test]
fn conservation_report_flags_broken_event() {
    let p = MomentumVec::new3(0.2, 0.1, -0.4);
    let q = MomentumVec::new3(-1.0, 0.3, 0.2);
    let w = MomentumVec::new3(0.0, 0.6, 0.8);
    let mut ev = ScatteringEvent::new(Frame::Cm, p, q, w, 2.0).unwrap();
    assert!(check_conservation(&ev, 1e-12).passed);
    ev.p_out = ev.p_out + MomentumVec::new3(1e-3, 0.0, 0.0);
    let r = check_conservation(&ev, 1e-12);
    assert!(!r.passed);
    assert!(r.momentum_residual > 1e-5);
}

fn vec3() -> impl Strategy<Value = [f64; 3]> {
    prop::array::uniform3(-5.0..5.0f64)
}

proptest! {
    #[test]
    fn relative_momentum_matches_naive(p in vec3(), q in vec3(), c in 0.5..5.0f64) {
        let g = relative_momentum(&MomentumVec::new3(p[0], p[1], p[2]), &MomentumVec::new3(q[0], q[1], q[2]), c);
        let n = naive_g(p, q, c);
        prop_assume!(n > 1e-3);
        prop_assert!((g - n).abs() <= 1e-9 * n.max(1.0));
    }

    #[test]
    fn moller_forms_agree(p in vec3(), q in vec3(), c in 0.5..50.0f64) {
        let (p, q) = (MomentumVec::new3(p[0], p[1], p[2]), MomentumVec::new3(q[0], q[1], q[2]));
        let a = moller_velocity(&p, &q, c);
        let b = moller_velocity_from_velocities(&p, &q, c);
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1e-6));
        prop_assert!(a <= c * (1.0 + 1e-12));
    }
}
