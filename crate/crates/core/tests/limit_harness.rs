use approx::assert_relative_eq;
use relboltz_core::cross_sections::CrossSection;
use relboltz_core::distributions::maxwellian;
use relboltz_core::grid::{FieldGrid, GridGeometry};
use relboltz_core::limit_harness::{
    component_sweep, l1p_linfx_norm, rate_fit, solution_convergence_study, translate, translation_modulus, ComponentKind,
    SampleSpec, ShiftAxis,
};
use relboltz_core::solver::{InitialData, SolveConfig};
use relboltz_core::{Error, MomentumVec};

#[test]
fn rate_fit_recovers_power_law() {
    let pairs: Vec<(f64, f64)> = [2.0, 4.0, 8.0, 16.0].iter().map(|&c: &f64| (c, 3.0 * c.powf(-2.0))).collect();
    let fit = rate_fit(&pairs).unwrap();
    assert_relative_eq!(fit.slope, 2.0, max_relative = 1e-12);
    assert_relative_eq!(fit.intercept, 3f64.ln(), max_relative = 1e-12);
    assert_relative_eq!(fit.r2, 1.0, max_relative = 1e-12);
    assert!(fit.warnings().is_empty());
}

#[test]
fn rate_fit_r2_matches_hand_computation() {
    // log-log points (0,0), (1,-1), (2,-3) in base e: slope 1.5, r2 = 0.9642857...
    let e = std::f64::consts::E;
    let fit = rate_fit(&[(1.0, 1.0), (e, 1.0 / e), (e * e, e.powi(-3))]).unwrap();
    assert_relative_eq!(fit.slope, 1.5, max_relative = 1e-12);
    assert_relative_eq!(fit.r2, 27.0 / 28.0, max_relative = 1e-12);
}

#[test]
fn rate_fit_drops_bad_points() {
    let fit = rate_fit(&[(2.0, 0.25), (4.0, 0.0), (8.0, 1.0 / 64.0), (16.0, f64::NAN), (32.0, 1.0 / 1024.0)]).unwrap();
    assert_eq!(fit.pairs.len(), 3);
    assert_eq!(fit.dropped.len(), 2);
    assert_eq!(fit.warnings().len(), 2);
    assert!(matches!(rate_fit(&[(2.0, 1.0), (4.0, 0.0), (8.0, 0.5)]), Err(Error::InsufficientData(2))));
}

fn maxwellian_field(geom: GridGeometry) -> FieldGrid {
    FieldGrid::from_fn(geom, |_, p| maxwellian(p, 2).unwrap())
}

#[test]
fn mixed_norm_of_maxwellian_is_its_mass() {
    let geom = GridGeometry::new(2.0, 5, 7.0, 57).unwrap();
    assert_relative_eq!(l1p_linfx_norm(&maxwellian_field(geom)), 1.0, max_relative = 1e-8);
    let neg = maxwellian_field(geom).scaled(-2.0);
    assert_relative_eq!(l1p_linfx_norm(&neg), 2.0, max_relative = 1e-8);
}

#[test]
fn translation_in_momentum_moves_the_profile() {
    let geom = GridGeometry::new(1.0, 3, 6.0, 25).unwrap();
    let f = FieldGrid::from_fn(geom, |_, p| p[0] + 2.0 * p[1]);
    let h = MomentumVec::new2(0.5, 0.0);
    let g = translate(&f, &h, ShiftAxis::P).unwrap();
    let ip = 12 * 25 + 12;
    assert_relative_eq!(g.row(ip)[0], 0.5, epsilon = 1e-12);
    assert_eq!(g.row(24 * 25 + 3)[0], 0.0);
    assert!(translate(&f, &MomentumVec::new3(0.0, 0.0, 1.0), ShiftAxis::X).is_err());
}

#[test]
fn translation_modulus_is_linear_for_smooth_data() {
    let geom = GridGeometry::new(4.0, 161, 6.0, 13).unwrap();
    let f = FieldGrid::from_fn(geom, |x, p| (-x.norm_sq()).exp() * maxwellian(p, 2).unwrap());
    let m = |s: f64| translation_modulus(&f, &MomentumVec::new2(s, 0.0), ShiftAxis::X).unwrap();
    assert_relative_eq!(m(0.2) / m(0.1), 2.0, max_relative = 0.05);
    // sup_x |d/dx e^{-x^2}| = sqrt(2/e) and the momentum mass is one.
    assert_relative_eq!(m(0.01) / 0.01, (2.0 / std::f64::consts::E).sqrt(), max_relative = 0.02);
    assert!(translation_modulus(&f, &MomentumVec::new2(1.0, 0.0), ShiftAxis::X).is_err());
}

#[test]
fn component_names_round_trip() {
    for k in ComponentKind::ALL {
        assert_eq!(ComponentKind::parse(k.name()).unwrap(), k);
        assert_eq!(ComponentKind::parse(&k.name().to_lowercase()).unwrap(), k);
    }
    assert!(ComponentKind::parse("nope").is_err());
}

#[test]
fn sweeps_require_dyadic_lists() {
    let spec = SampleSpec { n_samples: 10, ..SampleSpec::default() };
    assert!(component_sweep(ComponentKind::PhatDiff, &[4.0, 8.0, 16.0], &spec).is_err());
    assert!(component_sweep(ComponentKind::PhatDiff, &[4.0, 8.0, 12.0, 16.0], &spec).is_err());
    assert!(component_sweep(ComponentKind::PhatDiff, &[4.0, 8.0, 16.0, 32.0], &SampleSpec { dim: 4, ..spec }).is_err());
}

#[test]
fn velocity_difference_decays_quadratically() {
    let spec = SampleSpec { n_samples: 200, ..SampleSpec::default() };
    let sweep = component_sweep(ComponentKind::PhatDiff, &[8.0, 16.0, 32.0, 64.0], &spec).unwrap();
    let fit = sweep.fit.unwrap();
    assert!((fit.slope - 2.0).abs() < 0.02, "slope {}", fit.slope);
    // |c p / p0 - p| ~ |p|^3 / (2 c^2); the sample reaches radius 1.
    assert!(sweep.values[0] <= 1.0 / (2.0 * 64.0));
}

#[test]
fn cutoff_sweep_tabulates_every_tuple() {
    let spec = SampleSpec { n_samples: 3, measure_samples: 1000, ..SampleSpec::default() };
    let sweep = component_sweep(ComponentKind::CutoffMeasure, &[4.0, 8.0, 16.0, 32.0], &spec).unwrap();
    assert!(sweep.fit.is_none());
    assert_eq!(sweep.table.len(), 3);
    assert!(sweep.table.iter().all(|r| r.len() == 4 && r.iter().all(|m| (0.0..=1.0).contains(m))));
    assert_eq!(sweep.values[3], sweep.table.iter().map(|r| r[3]).fold(1.0, f64::min));
}

#[test]
fn transport_only_difference_decays_quadratically() {
    let mut base = SolveConfig::desk(8.0);
    base.sigma = CrossSection::hard_ball(0.0);
    let study = solution_convergence_study(&base, &[8.0, 16.0, 32.0, 64.0], |cfg| InitialData::Weighted {
        b: cfg.b,
        c: f64::INFINITY,
        weights: cfg.weights,
    })
    .unwrap();
    assert!(study.points.iter().all(|p| p.included));
    assert!((study.fit.slope - 2.0).abs() < 0.1, "slope {}", study.fit.slope);
    assert!(study.fit.r2 > 0.99);
}

#[test]
fn study_rejects_bad_lists() {
    let base = SolveConfig::desk(2.0);
    let data = |cfg: &SolveConfig| InitialData::Weighted { b: cfg.b, c: cfg.c, weights: cfg.weights };
    assert!(solution_convergence_study(&base, &[2.0, f64::INFINITY], data).is_err());
}
