//! Newtonian-limit experiments.
//!
//! Differences between relativistic and Newtonian quantities are measured in
//! the mixed norm `||f|| = int dp sup_x |f(x, p)|`, discretised as
//! `dp^N sum_p max_x |f(x, p)|`. Decay rates in `c` are least-squares slopes on
//! `log c` versus `log error`; [`RateFit::slope`] is reported as a positive
//! exponent, so `error ~ K / c^slope`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::collision_op::{kernel_gs, kernel_newt};
use crate::cross_sections::{cutoff_measure, CrossSection, CutoffParams};
use crate::distributions::{juttner, ln_juttner, ln_maxwellian, maxwellian};
use crate::error::{domain, Error, Result};
use crate::frames::cm_diff_from_newton;
use crate::grid::{shift_row, FieldGrid, GridGeometry};
use crate::kinematics::normalized_velocity;
use crate::par;
use crate::quadrature::random_unit;
use crate::solver::{picard_solve, InitialData, SolveConfig, Trajectory};
use crate::vector::{MomentumVec, Position};

/// `dp^N sum_p max_x |f(x, p)|`.
pub fn l1p_linfx_norm(f: &FieldGrid) -> f64 {
    let geom = f.geom;
    let cell = geom.dp().powi(geom.dim as i32);
    let sum: f64 = (0..geom.n_momenta()).map(|ip| f.row(ip).iter().fold(0.0_f64, |m, v| m.max(v.abs()))).sum();
    cell * sum
}

/// Variable translated by [`translation_modulus`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftAxis {
    X,
    P,
}

/// `f(x + h, p)` or `f(x, p + h)` on the same grid by bilinear interpolation; zero where
/// the shifted point leaves the box.
pub fn translate(f: &FieldGrid, h: &MomentumVec, which: ShiftAxis) -> Result<FieldGrid> {
    let geom = f.geom;
    if h.dim() != geom.dim || !h.is_finite() {
        return Err(domain("displacement must be a finite two-vector"));
    }
    let n = geom.row_len();
    let mut out = vec![0.0; geom.len()];
    match which {
        ShiftAxis::X => par::for_each_row(&mut out, n, |ip, row| shift_row(f.row(ip), geom.n_x, geom.dx(), [h[0], h[1]], row)),
        ShiftAxis::P => {
            let momenta = geom.momenta();
            par::for_each_row(&mut out, n, |ip, row| {
                let target = momenta[ip] + *h;
                let Some((base, fr)) = geom.locate_momentum(&target) else {
                    return;
                };
                let np = geom.n_p;
                let w = [(1.0 - fr[0]) * (1.0 - fr[1]), (1.0 - fr[0]) * fr[1], fr[0] * (1.0 - fr[1]), fr[0] * fr[1]];
                for (k, idx) in [base, base + 1, base + np, base + np + 1].into_iter().enumerate() {
                    if w[k] != 0.0 {
                        for (o, v) in row.iter_mut().zip(f.row(idx)) {
                            *o += w[k] * v;
                        }
                    }
                }
            });
        }
    }
    Ok(FieldGrid { geom, values: out })
}

/// `||tau_h f - f||` in the mixed norm. Requires `|h| < 1`.
pub fn translation_modulus(f: &FieldGrid, h: &MomentumVec, which: ShiftAxis) -> Result<f64> {
    if !(h.norm() < 1.0) {
        return Err(domain(format!("translation modulus needs |h| < 1, got {}", h.norm())));
    }
    Ok(l1p_linfx_norm(&translate(f, h, which)?.sub(f)))
}

/// Least-squares fit of `log error = intercept - slope log c`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    /// Points used in the fit.
    pub pairs: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Points discarded because their error was not positive and finite.
    pub dropped: Vec<(f64, f64)>,
}

impl RateFit {
    pub fn warnings(&self) -> Vec<String> {
        self.dropped.iter().map(|(c, e)| format!("dropped point c = {c}: error {e} is not positive")).collect()
    }
}

pub fn rate_fit(pairs: &[(f64, f64)]) -> Result<RateFit> {
    let (kept, dropped): (Vec<(f64, f64)>, Vec<(f64, f64)>) =
        pairs.iter().copied().partition(|(c, e)| *e > 0.0 && e.is_finite() && *c > 0.0 && c.is_finite());
    if kept.len() < 3 {
        return Err(Error::InsufficientData(kept.len()));
    }
    let xs: Vec<f64> = kept.iter().map(|(c, _)| c.ln()).collect();
    let ys: Vec<f64> = kept.iter().map(|(_, e)| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(domain("rate fit needs at least two distinct c values"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let beta = sxy / sxx;
    let intercept = my - beta * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).min(1.0) };
    Ok(RateFit { pairs: kept, slope: -beta, intercept, r2, dropped })
}

/// Component compared by [`component_sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComponentKind {
    /// `max |K_c - K_inf|` with unit hard spheres.
    KernelDiff,
    /// `max |p' - p_newton'| + |q' - q_newton'|` (Glassey-Strauss against omega-representation).
    PostCollisionDiff,
    /// `max |c p / p0 - p|`.
    PhatDiff,
    /// `max |J(p) - mu(p)|`.
    JuttnerDiff,
    /// Minimum over tuples of the cut-off measure.
    CutoffMeasure,
}

impl ComponentKind {
    pub const ALL: [ComponentKind; 5] =
        [Self::KernelDiff, Self::PostCollisionDiff, Self::PhatDiff, Self::JuttnerDiff, Self::CutoffMeasure];

    pub fn name(self) -> &'static str {
        match self {
            Self::KernelDiff => "KERNEL_DIFF",
            Self::PostCollisionDiff => "POST_COLLISION_DIFF",
            Self::PhatDiff => "PHAT_DIFF",
            Self::JuttnerDiff => "JUTTNER_DIFF",
            Self::CutoffMeasure => "CUTOFF_MEASURE",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(name))
            .ok_or_else(|| domain(format!("unknown component kind {name}")))
    }
}

/// Random sample shared by all `c` values of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSpec {
    pub dim: usize,
    /// Momentum samples (or cut-off tuples).
    pub n_samples: usize,
    /// Momenta are drawn uniformly from the ball of this radius.
    pub radius: f64,
    /// Positions of cut-off tuples are drawn from the ball of this radius.
    pub x_radius: f64,
    /// Times of cut-off tuples are drawn from `(0, t_final]`.
    pub t_final: f64,
    pub cutoff: CutoffParams,
    /// Monte-Carlo directions per cut-off measure.
    pub measure_samples: usize,
    pub seed: u64,
}

impl Default for SampleSpec {
    fn default() -> Self {
        Self {
            dim: 3,
            n_samples: 1000,
            radius: 1.0,
            x_radius: 1.0,
            t_final: 1.0,
            cutoff: CutoffParams { b: 1.0, a: 0.5, alpha: 1.0 },
            measure_samples: 10_000,
            seed: 42,
        }
    }
}

/// One sampled configuration `(p, q, omega, x, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleTuple {
    pub p: MomentumVec,
    pub q: MomentumVec,
    pub omega: MomentumVec,
    pub x: Position,
    pub t: f64,
}

fn in_ball<R: Rng>(dim: usize, radius: f64, rng: &mut R) -> MomentumVec {
    let u: f64 = rng.gen();
    random_unit(dim, rng) * (radius * u.powf(1.0 / dim as f64))
}

impl SampleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dim != 2 && self.dim != 3 {
            return Err(domain("sample dimension must be 2 or 3"));
        }
        if self.n_samples == 0 || !(self.radius > 0.0) || !(self.x_radius >= 0.0) || !(self.t_final > 0.0) {
            return Err(domain("sample spec needs n_samples >= 1 and positive radii and time"));
        }
        self.cutoff.validate()
    }

    pub fn tuples(&self) -> Vec<SampleTuple> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.n_samples)
            .map(|_| {
                let p = in_ball(self.dim, self.radius, &mut rng);
                let q = in_ball(self.dim, self.radius, &mut rng);
                let omega = random_unit(self.dim, &mut rng);
                let x = in_ball(self.dim, self.x_radius, &mut rng);
                let t = self.t_final * (1.0 - rng.gen::<f64>());
                SampleTuple { p, q, omega, x, t }
            })
            .collect()
    }
}

/// Outcome of a [`component_sweep`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentSweep {
    pub kind: ComponentKind,
    pub c_list: Vec<f64>,
    /// Maximum error over the sample per `c` (minimum measure for the cut-off).
    pub values: Vec<f64>,
    /// Fitted rate; `None` for the cut-off measure.
    pub fit: Option<RateFit>,
    /// Cut-off measure per tuple and `c` (`table[tuple][c]`); empty for the other kinds.
    pub table: Vec<Vec<f64>>,
}

fn check_dyadic(c_list: &[f64]) -> Result<()> {
    if c_list.len() < 4 {
        return Err(domain("component sweeps need at least 4 values of c"));
    }
    if c_list.iter().any(|c| !(*c > 0.0 && c.is_finite())) {
        return Err(domain("c values must be positive and finite"));
    }
    if c_list.windows(2).any(|w| (w[1] / w[0] - 2.0).abs() > 1e-12) {
        return Err(domain("c list must be dyadic (each entry twice the previous)"));
    }
    Ok(())
}

fn max_over<F>(tuples: &[SampleTuple], f: F) -> Result<f64>
where
    F: Fn(&SampleTuple) -> Result<f64> + Sync + Send,
{
    let vals = par::map_slice(tuples, f);
    let mut m = 0.0_f64;
    for v in vals {
        m = m.max(v?);
    }
    Ok(m)
}

fn component_value(kind: ComponentKind, tuples: &[SampleTuple], c: f64, dim: usize) -> Result<f64> {
    match kind {
        ComponentKind::KernelDiff => {
            let sigma = CrossSection::hard_ball(1.0);
            max_over(tuples, |s| Ok((kernel_gs(&s.p, &s.q, &s.omega, c, &sigma)? - kernel_newt(&s.p, &s.q, &s.omega, &sigma)?).abs()))
        }
        ComponentKind::PostCollisionDiff => max_over(tuples, |s| cm_diff_from_newton(&s.p, &s.q, &s.omega, c)),
        ComponentKind::PhatDiff => max_over(tuples, |s| Ok((normalized_velocity(&s.p, c) - s.p).norm())),
        ComponentKind::JuttnerDiff => max_over(tuples, |s| Ok((juttner(&s.p, c, dim)? - maxwellian(&s.p, dim)?).abs())),
        ComponentKind::CutoffMeasure => unreachable!("the cut-off measure is tabulated separately"),
    }
}

/// Evaluates one component on a fixed sample for every `c` of a dyadic list.
pub fn component_sweep(kind: ComponentKind, c_list: &[f64], spec: &SampleSpec) -> Result<ComponentSweep> {
    check_dyadic(c_list)?;
    spec.validate()?;
    let tuples = spec.tuples();
    if kind == ComponentKind::CutoffMeasure {
        let mut table = Vec::with_capacity(tuples.len());
        for (i, s) in tuples.iter().enumerate() {
            let row = c_list
                .iter()
                .map(|&c| cutoff_measure(&s.x, &s.p, &s.q, s.t, c, &spec.cutoff, spec.measure_samples, spec.seed.wrapping_add(i as u64)))
                .collect::<Result<Vec<f64>>>()?;
            table.push(row);
        }
        let values = (0..c_list.len()).map(|k| table.iter().map(|r| r[k]).fold(f64::INFINITY, f64::min)).collect();
        return Ok(ComponentSweep { kind, c_list: c_list.to_vec(), values, fit: None, table });
    }
    let values = c_list.iter().map(|&c| component_value(kind, &tuples, c, spec.dim)).collect::<Result<Vec<f64>>>()?;
    let pairs: Vec<(f64, f64)> = c_list.iter().copied().zip(values.iter().copied()).collect();
    let fit = rate_fit(&pairs)?;
    Ok(ComponentSweep { kind, c_list: c_list.to_vec(), values, fit: Some(fit), table: Vec::new() })
}

/// Fraction of the measured difference a point's discretisation floor may reach
/// before the point is excluded from the fit.
pub const TRUNCATION_SHARE: f64 = 0.2;

/// One `c` of a [`ConvergenceStudy`].
#[derive(Debug, Clone, PartialEq)]
pub struct StudyPoint {
    pub c: f64,
    /// `||f_c(T) - f(T)||`.
    pub error: f64,
    /// Estimated discretisation floor of `error`.
    pub trunc_floor: f64,
    pub included: bool,
}

/// Outcome of [`solution_convergence_study`].
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub points: Vec<StudyPoint>,
    pub fit: RateFit,
}

/// Discretisation floor of one solve's final field: the Picard gap carried
/// back to `f` units, the data mass outside the momentum box, and the rounding
/// of the single-precision gain sum on the collision contribution.
fn discretisation_floor(traj: &Trajectory, cfg: &SolveConfig) -> f64 {
    let geom = traj.geom;
    let t = traj.times[traj.times.len() - 1];
    let weight = InitialData::Weighted { b: 1.0, c: traj.c, weights: cfg.weights }.sample(&geom);
    let picard = traj.final_gap * l1p_linfx_norm(&weight);
    let tail = match traj.initial() {
        InitialData::Weighted { b, c, weights } => b * momentum_tail(&geom, *c, weights.beta),
        InitialData::Sampled(_) => 0.0,
    };
    let collision = traj.final_physical().sub(&traj.initial().transported(&geom, t, traj.c));
    picard + tail + f32::EPSILON as f64 * l1p_linfx_norm(&collision)
}

/// `int J^beta` over the momenta outside the box, on nodes of the same spacing.
fn momentum_tail(geom: &GridGeometry, c: f64, beta: f64) -> f64 {
    let dp = geom.dp();
    let n = geom.n_p as i64;
    let extra = ((geom.p_extent / dp).ceil() as i64).max(1);
    let coord = |i: i64| -geom.p_extent + i as f64 * dp;
    let mut sum = 0.0;
    for i in -extra..n + extra {
        for j in -extra..n + extra {
            if (0..n).contains(&i) && (0..n).contains(&j) {
                continue;
            }
            let p = MomentumVec::new2(coord(i), coord(j));
            let ln_eq = if c.is_finite() { ln_juttner(&p, c).unwrap_or(f64::NEG_INFINITY) } else { ln_maxwellian(&p) };
            sum += (beta * ln_eq).exp();
        }
    }
    sum * dp * dp
}

/// Builds a study from solves that are already available.
pub fn convergence_from_trajectories(base: &SolveConfig, newton: &Trajectory, relativistic: &[Trajectory]) -> Result<ConvergenceStudy> {
    if newton.c.is_finite() {
        return Err(domain("the reference solve must be Newtonian (infinite c)"));
    }
    let f_ref = newton.final_physical();
    let mut ncfg = base.clone();
    ncfg.c = f64::INFINITY;
    let floor_ref = discretisation_floor(newton, &ncfg);
    let points: Vec<StudyPoint> = par::map_slice(relativistic, |traj| {
        let mut cfg = base.clone();
        cfg.c = traj.c;
        let error = l1p_linfx_norm(&traj.final_physical().sub(&f_ref));
        let trunc_floor = floor_ref + discretisation_floor(traj, &cfg);
        StudyPoint { c: traj.c, error, trunc_floor, included: trunc_floor <= TRUNCATION_SHARE * error }
    });
    let pairs: Vec<(f64, f64)> = points.iter().filter(|p| p.included).map(|p| (p.c, p.error)).collect();
    let fit = rate_fit(&pairs)?;
    Ok(ConvergenceStudy { points, fit })
}

/// Solves the Newtonian equation once and the relativistic one for every `c`,
/// then fits the decay of `||f_c(T) - f(T)||` on the points whose
/// discretisation floor stays below [`TRUNCATION_SHARE`] of the difference.
///
/// `data` supplies the initial data for a configuration (its `c` field selects
/// the relativistic or Newtonian case). Any solver failure aborts the study
/// with the error of the offending `c`.
pub fn solution_convergence_study<D>(base: &SolveConfig, c_list: &[f64], data: D) -> Result<ConvergenceStudy>
where
    D: Fn(&SolveConfig) -> InitialData + Sync + Send,
{
    if base.grid.dim != 2 {
        return Err(domain("the convergence study runs in two dimensions"));
    }
    if c_list.iter().any(|c| !(*c > 0.0 && c.is_finite())) {
        return Err(domain("c values must be positive and finite"));
    }
    let mut ncfg = base.clone();
    ncfg.c = f64::INFINITY;
    let newton = picard_solve(&data(&ncfg), &ncfg)?;
    let solves = par::map_slice(c_list, |&c| {
        let mut cfg = base.clone();
        cfg.c = c;
        picard_solve(&data(&cfg), &cfg)
    });
    let relativistic = solves.into_iter().collect::<Result<Vec<Trajectory>>>()?;
    convergence_from_trajectories(base, &newton, &relativistic)
}
