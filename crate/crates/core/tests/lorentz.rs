use nalgebra::Matrix4;
use proptest::prelude::*;
use relboltz_core::lorentz::{
    boost_to_com, frame_transform_ex2, hs_transform_ex3, identity_direction, post_collision_via, LorentzMatrix,
};
use relboltz_core::{Error, MomentumVec, Result};

type Ctor = fn(&MomentumVec, &MomentumVec, f64) -> Result<LorentzMatrix>;
const CTORS: [Ctor; 3] = [boost_to_com, frame_transform_ex2, hs_transform_ex3];

fn minkowski(v: [f64; 4]) -> f64 {
    v[0] * v[0] - v[1] * v[1] - v[2] * v[2] - v[3] * v[3]
}

fn e(v: &MomentumVec, c: f64) -> f64 {
    (c * c + v.norm_sq()).sqrt()
}

fn v3(a: [f64; 3]) -> MomentumVec {
    MomentumVec::new3(a[0], a[1], a[2])
}

#[test]
fn degenerate_frames_are_reported() {
    let p = MomentumVec::new3(1.0, 2.0, 0.5);
    assert!(matches!(frame_transform_ex2(&p, &(-p), 1.0), Err(Error::DegenerateFrame(_))));
    assert!(matches!(hs_transform_ex3(&p, &(p * 2.0), 1.0), Err(Error::DegenerateFrame(_))));
    assert!(boost_to_com(&p, &(-p), 1.0).is_ok());
}

#[test]
fn planar_input_is_rejected() {
    let p = MomentumVec::new2(1.0, 0.0);
    assert!(boost_to_com(&p, &p, 1.0).is_err());
}

#[test]
fn non_lorentz_matrix_is_refused() {
    let p = MomentumVec::new3(0.2, 0.0, 0.0);
    let q = MomentumVec::new3(0.0, 0.3, 0.0);
    let w = MomentumVec::new3(0.0, 0.0, 1.0);
    let bad = LorentzMatrix::custom(Matrix4::identity() * 1.01);
    assert!(matches!(post_collision_via(&bad, &p, &q, &w, 1.0), Err(Error::InvalidTransform { .. })));
    let not_com = LorentzMatrix::custom(Matrix4::identity());
    assert!(matches!(post_collision_via(&not_com, &p, &q, &w, 1.0), Err(Error::InvalidTransform { .. })));
}

#[test]
fn hs_transform_aligns_relative_momentum() {
    let p = MomentumVec::new3(0.7, -0.2, 1.1);
    let q = MomentumVec::new3(-0.4, 0.9, 0.3);
    for c in [1.0, 3.0, 30.0] {
        let l = hs_transform_ex3(&p, &q, c).unwrap();
        let a = l.apply([e(&p, c), p[0], p[1], p[2]]);
        let b = l.apply([e(&q, c), q[0], q[1], q[2]]);
        assert!(a[1].abs() < 1e-10 && a[2].abs() < 1e-10);
        assert!((a[3] + b[3]).abs() < 1e-10);
        assert!((a[0] - b[0]).abs() < 1e-10);
    }
}

proptest! {
    #[test]
    fn constructors_preserve_minkowski_norm(p in prop::array::uniform3(-4.0..4.0f64), q in prop::array::uniform3(-4.0..4.0f64),
                                            v in prop::array::uniform4(-3.0..3.0f64), c in 0.5..50.0f64) {
        let (p, q) = (v3(p), v3(q));
        for ctor in CTORS {
            let l = match ctor(&p, &q, c) { Ok(l) => l, Err(_) => continue };
            let w = l.apply(v);
            let scale = v.iter().map(|x| x * x).sum::<f64>().max(1.0) * (1.0 + (p + q).norm() / c).powi(2);
            prop_assert!((minkowski(w) - minkowski(v)).abs() <= 1e-11 * scale);
            let back = l.inverse().apply(w);
            for k in 0..4 { prop_assert!((back[k] - v[k]).abs() <= 1e-10 * scale.sqrt()); }
        }
    }

    #[test]
    fn induced_collisions_conserve_four_momentum(p in prop::array::uniform3(-4.0..4.0f64), q in prop::array::uniform3(-4.0..4.0f64),
                                                 w in prop::array::uniform3(-1.0..1.0f64), c in 0.5..50.0f64) {
        let (p, q) = (v3(p), v3(q));
        let w = match v3(w).normalized() { Some(w) => w, None => return Ok(()) };
        for ctor in CTORS {
            let l = match ctor(&p, &q, c) { Ok(l) => l, Err(_) => continue };
            let (pp, qp) = post_collision_via(&l, &p, &q, &w, c).unwrap();
            let scale = e(&p, c) + e(&q, c);
            prop_assert!(((pp + qp) - (p + q)).max_abs() <= 1e-9 * scale);
            prop_assert!((e(&pp, c) + e(&qp, c) - scale).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn identity_direction_recovers_incoming_pair(p in prop::array::uniform3(-4.0..4.0f64), q in prop::array::uniform3(-4.0..4.0f64), c in 0.5..50.0f64) {
        let (p, q) = (v3(p), v3(q));
        prop_assume!((p - q).norm() > 1e-2);
        for ctor in CTORS {
            let l = match ctor(&p, &q, c) { Ok(l) => l, Err(_) => continue };
            let w = identity_direction(&l, &p, &q, c).unwrap();
            let (pp, qp) = post_collision_via(&l, &p, &q, &w, c).unwrap();
            let scale = 1.0 + p.norm() + q.norm();
            prop_assert!((pp - p).max_abs() <= 1e-8 * scale && (qp - q).max_abs() <= 1e-8 * scale);
        }
    }
}
