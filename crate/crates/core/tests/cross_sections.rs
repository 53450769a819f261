use approx::assert_relative_eq;
use relboltz_core::cross_sections::{
    c_star_search, cutoff_measure, energy_defect, envelope_check, evaluate, h_c, in_cutoff_set, AngularTable, CrossSection,
    CrossSectionKind, CutoffParams, EnvelopeParams,
};
use relboltz_core::frames::{cm_map, Frame};
use relboltz_core::kinematics::normalized_velocity;
use relboltz_core::{Error, MomentumVec};
use std::f64::consts::PI;

fn e(v: &MomentumVec, c: f64) -> f64 {
    (c * c + v.norm_sq()).sqrt()
}

#[test]
fn hard_ball_is_constant() {
    let s = CrossSection::hard_ball(2.5);
    for (g, th, c) in [(0.0, 0.0, 1.0), (3.0, 1.0, f64::INFINITY), (1e3, PI, 7.0)] {
        assert_eq!(evaluate(&s, g, th, c).unwrap(), 2.5);
    }
    assert!(evaluate(&s, -1.0, 0.0, 1.0).is_err());
    assert!(evaluate(&s, 1.0, 4.0, 1.0).is_err());
}

#[test]
fn moller_singularities_are_typed() {
    let s = CrossSection::new(CrossSectionKind::Moller { r0: 1.0 });
    assert!(matches!(evaluate(&s, 1.0, 0.0, 1.0), Err(Error::SingularAngle { .. })));
    assert!(matches!(evaluate(&s, 0.0, 1.0, 1.0), Err(Error::SingularMomentum { .. })));
    assert!(matches!(evaluate(&s, 1.0, 1.0, f64::INFINITY), Err(Error::SingularMomentum { .. })));
}

#[test]
fn moller_is_symmetric_and_positive() {
    let s = CrossSection::new(CrossSectionKind::Moller { r0: 0.3 });
    for th in [0.2, 0.7, 1.3] {
        for (g, c) in [(0.5, 1.0), (4.0, 2.0), (1.0, 30.0)] {
            let a = evaluate(&s, g, th, c).unwrap();
            let b = evaluate(&s, g, PI - th, c).unwrap();
            assert!(a > 0.0);
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
    }
}

#[test]
fn compton_forward_value_and_limit() {
    let s = CrossSection::new(CrossSectionKind::Compton { r0: 2.0 });
    let g = 1.0;
    let c = 1.0;
    let xi = 1.0 - c * c / (g * g + 4.0 * c * c);
    assert_relative_eq!(evaluate(&s, g, 0.0, c).unwrap(), 4.0 * (1.0 - xi), max_relative = 1e-14);
    let newton = evaluate(&s, g, 1.1, f64::INFINITY).unwrap();
    assert_relative_eq!(evaluate(&s, g, 1.1, 1e6).unwrap(), newton, max_relative = 1e-9);
}

#[test]
fn neutrino_scales_with_g_squared_and_vanishes_in_the_limit() {
    let s = CrossSection::new(CrossSectionKind::Neutrino { coupling: 1.0, hbar: 1.0 });
    let a = evaluate(&s, 1.0, 0.5, 3.0).unwrap();
    assert_relative_eq!(evaluate(&s, 2.0, 0.5, 3.0).unwrap(), 4.0 * a, max_relative = 1e-14);
    assert_relative_eq!(a, 1.0 / (9.0 * PI), max_relative = 1e-14);
    assert_eq!(evaluate(&s, 1.0, 0.5, f64::INFINITY).unwrap(), 0.0);
}

#[test]
fn israel_tends_to_maxwell_particles() {
    let table = AngularTable::new(vec![0.0, 1.0, PI], vec![1.0, 3.0, 2.0]).unwrap();
    let isr = CrossSection::new(CrossSectionKind::Israel { profile: table.clone() });
    let max = CrossSection::new(CrossSectionKind::MaxwellParticles { profile: table });
    let (g, th) = (1.5, 0.5);
    let lim = evaluate(&max, g, th, f64::INFINITY).unwrap();
    assert_relative_eq!(lim, 2.0 / (2.0 * g), max_relative = 1e-14);
    for c in [1.0, 10.0, 100.0] {
        assert_relative_eq!(evaluate(&isr, g, th, c).unwrap(), lim / (1.0 + g * g / (c * c)), max_relative = 1e-14);
    }
}

#[test]
fn angular_table_parsing() {
    let t = AngularTable::parse("# theta value\n0 1\n\n1.5 2 # mid\n3.0 4\n").unwrap();
    assert_relative_eq!(t.eval(0.75), 1.5);
    assert_eq!(t.eval(-1.0), 1.0);
    assert_eq!(t.eval(3.1), 4.0);
    assert_eq!(t.max_value(), 4.0);
    let err = AngularTable::parse("0 1\n1 x\n").unwrap_err().to_string();
    assert!(err.contains("line 2"), "{err}");
    assert!(AngularTable::parse("0 1\n0 2\n").is_err());
    assert!(AngularTable::parse("0 1\n4 2\n").is_err());
    assert!(AngularTable::parse("0 1\n1 -2\n").is_err());
}

#[test]
fn envelope_check_detects_excess() {
    let params = EnvelopeParams::new(1.0, 0.0, 1.0, 0.0, 1.0, 3);
    let sample: Vec<(f64, f64, f64)> = (0..50).map(|k| (0.1 * k as f64, 1.0, 2.0)).collect();
    assert!(envelope_check(&CrossSection::hard_ball(1.0), &params, &sample).unwrap().passed);
    let r = envelope_check(&CrossSection::hard_ball(1.5), &params, &sample).unwrap();
    assert!(!r.passed);
    assert_relative_eq!(r.worst_ratio, 1.5);
    let moller = CrossSection::new(CrossSectionKind::Moller { r0: 1.0 });
    assert_eq!(envelope_check(&moller, &params, &[(0.0, 1.0, 1.0)]).unwrap().skipped, 1);
    assert!(envelope_check(&moller, &EnvelopeParams::new(1.0, 1.0, 1.0, 3.0, 1.0, 3), &sample).is_err());
}

#[test]
fn energy_defect_matches_naive_difference() {
    let p = MomentumVec::new3(0.3, 1.0, -0.2);
    let q = MomentumVec::new3(-1.2, 0.1, 0.4);
    let w = MomentumVec::new3(0.0, 0.8, 0.6);
    let c = 2.0;
    let (pp, qp) = cm_map(&p, &q, &w, c);
    let naive = c.powi(3) * (1.0 / e(&p, c) + 1.0 / e(&q, c) - 1.0 / e(&pp, c) - 1.0 / e(&qp, c));
    assert_relative_eq!(energy_defect(&p, &q, &pp, &qp, c), naive, max_relative = 1e-10);
}

#[test]
fn threshold_formula() {
    let params = CutoffParams::new(0.5, 0.25, 2.0).unwrap();
    let x = MomentumVec::new2(1.0, 0.0);
    let p = MomentumVec::new2(0.0, 1.0);
    let q = MomentumVec::new2(0.0, 0.0);
    let (c, t) = (3.0_f64, 2.0);
    let vp = 3.0 / 10f64.sqrt();
    let drift2 = 1.0 + (t * vp).powi(2);
    let expected = 0.5 / 4.0 + 0.25 * 2.0 * 3.0 * drift2 / (3.0 * 4.0);
    assert_relative_eq!(h_c(&x, &p, &q, t, c, &params).unwrap(), expected, max_relative = 1e-14);
    assert!(h_c(&x, &p, &q, 0.0, c, &params).is_err());
    assert!(CutoffParams::new(0.5, 1.0, 1.0).is_err());
    assert!(CutoffParams::new(0.0, 0.5, 1.0).is_err());
}

#[test]
fn cutoff_set_fills_the_sphere() {
    let params = CutoffParams::new(0.01, 0.5, 1.0).unwrap();
    let p = MomentumVec::new3(2.0, -1.0, 0.5);
    let q = MomentumVec::new3(-1.5, 0.5, 1.0);
    let x = normalized_velocity(&q, 2.0) - normalized_velocity(&p, 2.0);
    let at_two = cutoff_measure(&x, &p, &q, 1.0, 2.0, &params, 20_000, 1).unwrap();
    assert!(at_two < 1.0, "measure {at_two}");
    assert_eq!(cutoff_measure(&x, &p, &q, 1.0, 1e3, &params, 20_000, 1).unwrap(), 1.0);
    assert!(cutoff_measure(&x, &p, &q, 1.0, 1.0, &params, 10, 1).is_err());
    let w = MomentumVec::new3(1.0, 0.0, 0.0);
    assert!(in_cutoff_set(&w, &x, &p, &q, 1.0, 1.0, &params, Frame::NewtonOmega).is_err());
    assert!(in_cutoff_set(&w, &x, &p, &q, 1.0, 1e3, &params, Frame::Gs).unwrap());
}

#[test]
fn empirical_threshold_respects_bound() {
    let params = CutoffParams::new(0.1, 0.5, 1.0).unwrap();
    let p = MomentumVec::new3(2.0, -1.0, 0.5);
    let q = MomentumVec::new3(-1.5, 0.5, 1.0);
    let grid: Vec<f64> = (0..=100).map(|k| 10f64.powf(-1.0 + k as f64 / 25.0)).collect();
    let r = c_star_search(&p, &q, 1.0, &params, &grid).unwrap();
    let analytic = (p + q).norm() * (p - q).norm() / (2.0 * 0.1f64.sqrt());
    assert_relative_eq!(r.analytic_sufficient, analytic, max_relative = 1e-12);
    let found = r.empirical.expect("threshold inside grid");
    assert!(found <= analytic);
    assert!(c_star_search(&p, &q, 1.0, &params, &[2.0, 1.0]).is_err());
}

