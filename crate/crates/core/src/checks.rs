//! Verification suites shared by the `verify` command and the acceptance tests.
//!
//! Every suite returns [`CheckOutcome`] rows: a name, the worst residual seen,
//! the tolerance it was held to, and whether it passed. Suites are seeded and
//! deterministic.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::collision_op::{moment_conservation, MomentumFunction, QuadratureSpec, Representation};
use crate::cross_sections::{c_star_search, cutoff_measure, CrossSection, CutoffParams};
use crate::distributions::{chi1, chi2, invariant_identity_residual, juttner, ln_juttner, sharp_asymp_check};
use crate::error::Result;
use crate::frames::{cm_map, gs_jacobian, gs_map, Frame, ScatteringEvent};
use crate::kinematics::{check_conservation, relative_momentum};
use crate::limit_harness::{component_sweep, ComponentKind, ConvergenceStudy, SampleSpec};
use crate::lorentz::{boost_to_com, frame_transform_ex2, hs_transform_ex3, post_collision_via, LorentzMatrix};
use crate::par;
use crate::quadrature::{gauss_legendre, random_unit};
use crate::solver::{weighted_sup_norm, KsBracket, SolveConfig, Trajectory};
use crate::vector::MomentumVec;

/// One verified property.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub max_residual: f64,
    pub tolerance: f64,
}

impl CheckOutcome {
    /// Passes when `residual <= tolerance` (a NaN residual fails).
    pub fn within(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self { name: name.into(), passed: residual <= tolerance, max_residual: residual, tolerance }
    }

    pub fn with_status(name: impl Into<String>, passed: bool, residual: f64, tolerance: f64) -> Self {
        Self { name: name.into(), passed, max_residual: residual, tolerance }
    }
}

pub fn all_passed(outcomes: &[CheckOutcome]) -> bool {
    outcomes.iter().all(|o| o.passed)
}

fn in_ball<R: Rng>(dim: usize, radius: f64, rng: &mut R) -> MomentumVec {
    let u: f64 = rng.gen();
    random_unit(dim, rng) * (radius * u.powf(1.0 / dim as f64))
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0_f64, |m, v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(v) })
}

/// Energy-momentum conservation and invariance of `s` and `g` over random
/// three-dimensional events, `n_events` per frame and `c`.
pub fn conservation_suite(n_events: usize, c_list: &[f64], seed: u64) -> Result<Vec<CheckOutcome>> {
    const TOL: f64 = 1e-9;
    let mut out = Vec::new();
    for (fi, frame) in [Frame::Gs, Frame::Cm].into_iter().enumerate() {
        let mut cons = 0.0_f64;
        let mut inv = 0.0_f64;
        for (ci, &c) in c_list.iter().enumerate() {
            let chunks = n_events.div_ceil(4096);
            let parts: Vec<Result<(f64, f64)>> = par::map_range(chunks, |k| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((fi as u64) << 32) ^ ((ci as u64) << 16));
                rng.set_stream(k as u64);
                let (mut cons, mut inv) = (0.0_f64, 0.0_f64);
                for _ in 0..4096.min(n_events - k * 4096) {
                    let p = in_ball(3, 10.0, &mut rng);
                    let q = in_ball(3, 10.0, &mut rng);
                    let w = random_unit(3, &mut rng);
                    let ev = ScatteringEvent::new(frame, p, q, w, c)?;
                    cons = cons.max(check_conservation(&ev, TOL).residual);
                    let g = relative_momentum(&p, &q, c);
                    let g_out = relative_momentum(&ev.p_out, &ev.q_out, c);
                    let (s, s_out) = (g * g + 4.0 * c * c, g_out * g_out + 4.0 * c * c);
                    inv = inv.max(((s_out - s) / s).abs()).max(((g_out - g) / g).abs());
                }
                Ok((cons, inv))
            });
            for r in parts {
                let (a, b) = r?;
                cons = cons.max(a);
                inv = inv.max(b);
            }
        }
        out.push(CheckOutcome::within(format!("conservation_{}", frame.name()), cons, TOL));
        out.push(CheckOutcome::within(format!("invariance_{}", frame.name()), inv, TOL));
    }
    Ok(out)
}

/// The six-by-six Jacobian determinant of `(p, q) -> (p', q')` at fixed `omega`
/// by central differences with step `h`.
pub fn gs_jacobian_fd(p: &MomentumVec, q: &MomentumVec, omega: &MomentumVec, c: f64, h: f64) -> f64 {
    let dim = p.dim();
    let n = 2 * dim;
    let eval = |z: &[f64]| -> Vec<f64> {
        let pp = MomentumVec::from_slice(&z[..dim]).expect("dimension");
        let qq = MomentumVec::from_slice(&z[dim..]).expect("dimension");
        let out = gs_map(&pp, &qq, omega, c);
        [out.p_out.as_slice(), out.q_out.as_slice()].concat()
    };
    let z0: Vec<f64> = [p.as_slice(), q.as_slice()].concat();
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        let (mut zp, mut zm) = (z0.clone(), z0.clone());
        zp[j] += h;
        zm[j] -= h;
        let (fp, fm) = (eval(&zp), eval(&zm));
        for i in 0..n {
            m[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    m.determinant()
}

/// Closed-form Glassey-Strauss Jacobian against the finite-difference determinant.
pub fn jacobian_suite(n_points: usize, seed: u64) -> Result<Vec<CheckOutcome>> {
    const TOL: f64 = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cs = [1.0, 2.0, 10.0, 100.0];
    let mut worst = 0.0_f64;
    for k in 0..n_points {
        let c = cs[k % cs.len()];
        let p = in_ball(3, 2.0, &mut rng);
        let q = in_ball(3, 2.0, &mut rng);
        let w = random_unit(3, &mut rng);
        let closed = gs_jacobian(&p, &q, &w, c)?;
        let fd = gs_jacobian_fd(&p, &q, &w, c, 1e-5);
        worst = max_of([worst, (closed.abs() - fd.abs()).abs() / closed.abs()]);
    }
    Ok(vec![CheckOutcome::within("gs_jacobian_fd", worst, TOL)])
}

/// Lorentz conditions of the three centre-of-momentum constructors and the
/// boost-based post-collision map.
pub fn lorentz_suite(n_samples: usize, seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cs = [1.0, 2.0, 10.0, 100.0];
    let mut cond = [0.0_f64; 3];
    let mut com = [0.0_f64; 3];
    let mut rel = 0.0_f64;
    let mut post = 0.0_f64;
    type Ctor = fn(&MomentumVec, &MomentumVec, f64) -> Result<LorentzMatrix>;
    let ctors: [Ctor; 3] = [boost_to_com, frame_transform_ex2, hs_transform_ex3];
    for k in 0..n_samples {
        let c = cs[k % cs.len()];
        let p = in_ball(3, 5.0, &mut rng);
        let q = in_ball(3, 5.0, &mut rng);
        let w = random_unit(3, &mut rng);
        let rs = (relative_momentum(&p, &q, c).powi(2) + 4.0 * c * c).sqrt();
        for (i, ctor) in ctors.iter().enumerate() {
            let lam = ctor(&p, &q, c)?;
            cond[i] = max_of([cond[i], lam.condition_residual()]);
            com[i] = max_of([com[i], lam.com_residual(&p, &q, c) / rs]);
            if i == 2 {
                rel = max_of([rel, lam.relative_residual(&p, &q, c) / rs]);
            }
        }
        let boost = boost_to_com(&p, &q, c)?;
        let (pa, qa) = post_collision_via(&boost, &p, &q, &w, c)?;
        let (pb, qb) = cm_map(&p, &q, &w, c);
        let scale = 1.0 + p.norm() + q.norm();
        post = max_of([post, ((pa - pb).max_abs() + (qa - qb).max_abs()) / scale]);
    }
    let names = ["boost", "frame_ex2", "hs_ex3"];
    let mut out = Vec::new();
    for i in 0..3 {
        out.push(CheckOutcome::within(format!("lorentz_condition_{}", names[i]), cond[i], 1e-10));
        out.push(CheckOutcome::within(format!("lorentz_com_{}", names[i]), com[i], 1e-9));
    }
    out.push(CheckOutcome::within("lorentz_relative_hs_ex3", rel, 1e-9));
    out.push(CheckOutcome::within("boost_post_collision_vs_cm", post, 1e-9));
    Ok(out)
}

/// The collision-invariant weight combination in both relativistic frames.
pub fn weight_identity_suite(n_samples: usize, seed: u64) -> Result<Vec<CheckOutcome>> {
    const TOL: f64 = 1e-8;
    let mut out = Vec::new();
    for frame in [Frame::Gs, Frame::Cm] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0_f64;
        for _ in 0..n_samples {
            let x = in_ball(3, 3.0, &mut rng);
            let t = rng.gen_range(0.0..2.0);
            let p = in_ball(3, 3.0, &mut rng);
            let q = in_ball(3, 3.0, &mut rng);
            let w = random_unit(3, &mut rng);
            let c = 10f64.powf(rng.gen_range(0.0..2.0));
            worst = max_of([worst, invariant_identity_residual(&x, t, &p, &q, &w, c, frame)?]);
        }
        out.push(CheckOutcome::within(format!("weight_identity_{}", frame.name()), worst, TOL));
    }
    Ok(out)
}

/// `4 pi int_0^R r^2 J(r) dr` by composite Gauss-Legendre, `R = max(12, 40 / c)`.
pub fn juttner_normalization_3d(c: f64) -> Result<f64> {
    let radius = (40.0 / c).max(12.0);
    let rule = gauss_legendre(20);
    let panels = 200;
    let h = radius / panels as f64;
    let mut sum = 0.0;
    for k in 0..panels {
        let mid = (k as f64 + 0.5) * h;
        for (z, w) in rule.nodes.iter().zip(&rule.weights) {
            let r = mid + 0.5 * h * z;
            sum += 0.5 * h * w * r * r * juttner(&MomentumVec::new3(r, 0.0, 0.0), c, 3)?;
        }
    }
    Ok(4.0 * std::f64::consts::PI * sum)
}

/// Constant of the envelopes `A^{-1} e^{-|p|^2/2} <= J(p) <= A e^{-|p|}` over radii
/// `0..=radius` (step `h`) and the given `c`, in three dimensions.
pub fn juttner_envelope_constant(c_list: &[f64], radius: f64, h: f64) -> Result<f64> {
    let n = (radius / h).round() as usize;
    let mut a = 0.0_f64;
    for &c in c_list {
        for k in 0..=n {
            let r = k as f64 * h;
            a = a.max(envelope_ratio(r, c)?);
        }
    }
    Ok(a)
}

/// `max(J e^{|p|}, e^{-|p|^2/2} / J)` at radius `r`.
fn envelope_ratio(r: f64, c: f64) -> Result<f64> {
    let ln_j = ln_juttner(&MomentumVec::new3(r, 0.0, 0.0), c)?;
    Ok((ln_j + r).exp().max((-0.5 * r * r - ln_j).exp()))
}

/// Normalisation, the uniform envelope, the Gaussian bound at `|p| = sqrt(c)`,
/// and the sign conditions of the two auxiliary functions.
pub fn juttner_suite(seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    let norm_cs = [1.0, 2.0, 5.0, 10.0];
    let mut norm = 0.0_f64;
    for &c in &norm_cs {
        norm = max_of([norm, (juttner_normalization_3d(c)? - 1.0).abs()]);
    }
    out.push(CheckOutcome::within("juttner_normalization_3d", norm, 1e-6));

    let radius = 60.0;
    let a = juttner_envelope_constant(&norm_cs, radius, 1e-3)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut excess = 0.0_f64;
    for k in 0..10_000 {
        let c = norm_cs[k % norm_cs.len()];
        let r = rng.gen_range(0.0..radius);
        excess = max_of([excess, envelope_ratio(r, c)? / a - 1.0]);
    }
    out.push(CheckOutcome::with_status("juttner_envelope_one_constant", a.is_finite() && excess <= 1e-4, excess, 1e-4));

    let ratios = [4.0_f64, 16.0, 64.0, 256.0]
        .iter()
        .map(|&c| sharp_asymp_check(c.sqrt(), c, 3, 1.0))
        .collect::<Result<Vec<_>>>()?;
    let hi = ratios.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let lo = ratios.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let remainder_ok = ratios.iter().all(|r| r.remainder_ok);
    out.push(CheckOutcome::with_status("juttner_gaussian_bound_sqrt_c", remainder_ok && hi / lo - 1.0 <= 0.5, hi / lo - 1.0, 0.5));

    let mut chi1_min = 0.0_f64;
    let mut chi2_excess = 0.0_f64;
    for _ in 0..10_000 {
        let r = rng.gen_range(0.0..50.0);
        let c = rng.gen_range(1.0..100.0);
        chi1_min = chi1_min.min(chi1(r * r / (c * c)));
        chi2_excess = max_of([chi2_excess, chi2(c, r) - chi2(1.0, r)]);
    }
    out.push(CheckOutcome::within("chi1_nonnegative", -chi1_min, 0.0));
    out.push(CheckOutcome::within("chi2_monotone", chi2_excess, 0.0));
    Ok(out)
}

/// Bracket `[2 - half_width, 2 + half_width]` of each component's decay slope.
pub fn slope_bracket(kind: ComponentKind) -> f64 {
    match kind {
        ComponentKind::PhatDiff => 0.05,
        ComponentKind::PostCollisionDiff | ComponentKind::KernelDiff => 0.1,
        ComponentKind::JuttnerDiff => 0.2,
        ComponentKind::CutoffMeasure => f64::NAN,
    }
}

/// Decay slopes of the four pointwise components over a dyadic `c` list.
/// The residual is `|slope - 2|`.
pub fn slope_suite(c_list: &[f64], spec: &SampleSpec) -> Result<Vec<CheckOutcome>> {
    let kinds = [ComponentKind::PhatDiff, ComponentKind::PostCollisionDiff, ComponentKind::KernelDiff, ComponentKind::JuttnerDiff];
    let mut out = Vec::new();
    for kind in kinds {
        let sweep = component_sweep(kind, c_list, spec)?;
        let slope = sweep.fit.as_ref().map_or(f64::NAN, |f| f.slope);
        out.push(CheckOutcome::within(format!("slope_{}", kind.name().to_lowercase()), (slope - 2.0).abs(), slope_bracket(kind)));
    }
    Ok(out)
}

/// Sample used by [`cutoff_suite`]: momenta in the ball of radius 3, `B = 0.1`.
pub fn cutoff_tuples(n: usize, seed: u64) -> SampleSpec {
    SampleSpec {
        dim: 3,
        n_samples: n,
        radius: 3.0,
        x_radius: 2.0,
        t_final: 1.0,
        cutoff: CutoffParams { b: 0.1, a: 0.5, alpha: 1.0 },
        measure_samples: 10_000,
        seed,
    }
}

/// Log-spaced grid of `c` values used for the threshold scan.
pub fn c_star_grid() -> Vec<f64> {
    (0..=160).map(|k| 10f64.powf(-2.0 + k as f64 / 32.0)).collect()
}

/// Cut-off measure at the largest `c` and the empirical threshold against the
/// sufficient bound, over random tuples.
pub fn cutoff_suite(c_list: &[f64], n_tuples: usize, seed: u64) -> Result<Vec<CheckOutcome>> {
    let spec = cutoff_tuples(n_tuples, seed);
    let c_max = c_list.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let grid = c_star_grid();
    let mut measure_gap = 0.0_f64;
    let mut bound_excess = 0.0_f64;
    let mut resolved = true;
    for (i, s) in spec.tuples().iter().enumerate() {
        let m = cutoff_measure(&s.x, &s.p, &s.q, s.t, c_max, &spec.cutoff, spec.measure_samples, seed.wrapping_add(i as u64))?;
        measure_gap = max_of([measure_gap, 1.0 - m]);
        let report = c_star_search(&s.p, &s.q, spec.t_final, &spec.cutoff, &grid)?;
        match report.empirical {
            Some(found) => bound_excess = max_of([bound_excess, found - report.analytic_sufficient.max(grid[0])]),
            None => resolved = false,
        }
    }
    Ok(vec![
        CheckOutcome::within("cutoff_measure_full_at_max_c", measure_gap, 0.0),
        CheckOutcome::with_status("c_star_below_analytic_bound", resolved && bound_excess <= 0.0, bound_excess, 0.0),
    ])
}

/// Smooth displaced Gaussian used by [`moment_suite`].
pub fn moment_test_density() -> MomentumFunction {
    MomentumFunction::new(f64::INFINITY, |p| {
        let d = MomentumVec::new2(p[0] - 0.5, p[1] + 0.25);
        (-0.625 * d.norm_sq()).exp()
    })
}

/// Moment defects of the discrete operator at `quad` (at most 2%) and their
/// reduction from `quad.coarsened()` to `quad` (at least a factor of two), for
/// both representations at every `c`.
pub fn moment_suite(quad: &QuadratureSpec, c_list: &[f64]) -> Result<Vec<CheckOutcome>> {
    let f = moment_test_density();
    let sigma = CrossSection::hard_ball(1.0);
    let mut out = Vec::new();
    for rep in [Representation::Gs, Representation::Cm] {
        let mut at_default = 0.0_f64;
        let mut ratio = 0.0_f64;
        for &c in c_list {
            let r_half = moment_conservation(&f, c, &sigma, rep, &quad.coarsened())?.max();
            let r = moment_conservation(&f, c, &sigma, rep, quad)?.max();
            at_default = max_of([at_default, r]);
            ratio = max_of([ratio, r / r_half]);
        }
        out.push(CheckOutcome::within(format!("moments_default_grid_{}", rep.name()), at_default, 0.02));
        out.push(CheckOutcome::within(format!("moments_refinement_ratio_{}", rep.name()), ratio, 0.5));
    }
    Ok(out)
}

/// Uniformity of `||f#||_c` across solves of the same data family.
pub fn uniformity_checks(base: &SolveConfig, trajs: &[Trajectory]) -> Vec<CheckOutcome> {
    let norms: Vec<f64> = trajs
        .iter()
        .map(|t| {
            let cfg = SolveConfig { c: t.c, ..base.clone() };
            weighted_sup_norm(t, &cfg)
        })
        .collect();
    let hi = norms.iter().copied().fold(0.0, f64::max);
    let lo = norms.iter().copied().fold(f64::INFINITY, f64::min);
    let converged = trajs.iter().map(|t| t.final_gap).fold(0.0, f64::max);
    vec![
        CheckOutcome::within("picard_converged_all_c", converged, base.picard_tol),
        CheckOutcome::within("weighted_norm_spread", (hi - lo) / lo, 0.1),
    ]
}

/// Relative tolerance for the Picard trajectory to sit inside the bracket; the
/// two iterations use different time discretisations.
pub const BRACKET_CONTAINMENT: f64 = 1e-6;

/// Nonnegativity of the lower Kaniel-Shinbrot iterate and containment of the Picard solution.
pub fn ks_checks(bracket: &KsBracket, traj: &Trajectory) -> Vec<CheckOutcome> {
    let scale = traj.sharp[0].max_abs();
    vec![
        CheckOutcome::within("ks_lower_nonnegative", (-bracket.min_lower).max(0.0), 0.0),
        CheckOutcome::within("ks_contains_picard", bracket.bracket_violation(traj) / scale, BRACKET_CONTAINMENT),
    ]
}

/// Slope bracket and fit quality of the end-to-end Newtonian limit.
pub fn limit_checks(study: &ConvergenceStudy) -> Vec<CheckOutcome> {
    let slope = study.fit.slope;
    let outside = if (1.5..=2.1).contains(&slope) { 0.0 } else { (1.5 - slope).max(slope - 2.1) };
    vec![
        CheckOutcome::with_status("limit_slope_in_1.5_2.1", outside == 0.0, slope, 2.1),
        CheckOutcome::with_status("limit_fit_r2", study.fit.r2 >= 0.98, study.fit.r2, 0.98),
    ]
}
