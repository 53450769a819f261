//! Scattering cross sections, the growth/decay envelope check, and the
//! angular cut-off set.
//!
//! All catalog members use unit rest mass. Physical constants (`r0`, the Fermi
//! coupling `G`, `hbar`) are plain parameters; unit bookkeeping is left to the
//! caller.
//!
//! The cut-off set at time `t` is
//! `B_c = { omega : c^3 (1/p0 + 1/q0 - 1/p0' - 1/q0') >= -h_c }` with
//! `h_c = B/t^2 + a alpha q0 |x + t(p^ - q^)|^2 / (c t^2)`, where `p^` is the
//! normalised velocity. As `c` grows the set fills the whole sphere.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, Error, Result};
use crate::frames::{cm_map, gs_map, Frame};
use crate::kinematics::{check_c, check_pair, normalized_velocity, p0, relative_momentum};
use crate::par;
use crate::quadrature::{random_unit, SphereRule};
use crate::vector::{MomentumVec, Position};

/// A tabulated angular profile `b(theta)` on `[0, pi]`, linearly interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularTable {
    theta: Vec<f64>,
    values: Vec<f64>,
}

impl AngularTable {
    pub fn new(theta: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if theta.len() != values.len() || theta.len() < 2 {
            return Err(domain("angular table needs at least two (theta, value) rows"));
        }
        if theta.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(domain("angular table theta must be strictly ascending"));
        }
        let pi = std::f64::consts::PI;
        if theta[0] < 0.0 || theta[theta.len() - 1] > pi + 1e-12 {
            return Err(domain("angular table theta must lie in [0, pi]"));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(domain("angular table values must be finite and nonnegative"));
        }
        Ok(Self { theta, values })
    }

    /// The constant profile `b = value`.
    pub fn constant(value: f64) -> Self {
        Self { theta: vec![0.0, std::f64::consts::PI], values: vec![value, value] }
    }

    /// Parses whitespace-separated `theta value` rows; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut theta = Vec::new();
        let mut values = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            let parsed: Option<(f64, f64)> = match cols.as_slice() {
                [a, b] => a.parse().ok().zip(b.parse().ok()),
                _ => None,
            };
            let (t, v) = parsed.ok_or_else(|| domain(format!("angular table line {}: expected 'theta value'", lineno + 1)))?;
            theta.push(t);
            values.push(v);
        }
        Self::new(theta, values)
    }

    pub fn eval(&self, theta: f64) -> f64 {
        let n = self.theta.len();
        if theta <= self.theta[0] {
            return self.values[0];
        }
        if theta >= self.theta[n - 1] {
            return self.values[n - 1];
        }
        let i = self.theta.partition_point(|&t| t <= theta) - 1;
        let w = (theta - self.theta[i]) / (self.theta[i + 1] - self.theta[i]);
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Parameters of the growth/decay envelope
/// `{A1 (1 + (g/(1+g))^alpha1) + A2 g^-gamma} sigma_tilde`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeParams {
    pub a1: f64,
    pub a2: f64,
    pub alpha1: f64,
    pub gamma: f64,
    /// Upper bound for the angular factor.
    pub sigma1: f64,
    /// The angular factor itself, constant.
    pub sigma_tilde: f64,
    pub dim: usize,
}

impl EnvelopeParams {
    pub fn new(a1: f64, a2: f64, alpha1: f64, gamma: f64, sigma1: f64, dim: usize) -> Self {
        Self { a1, a2, alpha1, gamma, sigma1, sigma_tilde: 1.0, dim }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != 2 && self.dim != 3 {
            return Err(domain("envelope dimension must be 2 or 3"));
        }
        if !(self.gamma >= 0.0 && self.gamma < self.dim as f64) {
            return Err(domain(format!("envelope exponent gamma = {} must lie in [0, N)", self.gamma)));
        }
        if !(self.a1 >= 0.0 && self.a2 >= 0.0 && self.alpha1 >= 0.0 && self.sigma_tilde >= 0.0) {
            return Err(domain("envelope coefficients must be nonnegative"));
        }
        if self.sigma_tilde > self.sigma1 {
            return Err(domain("angular factor exceeds its bound sigma1"));
        }
        Ok(())
    }

    pub fn value(&self, g: f64) -> f64 {
        let growth = self.a1 * (1.0 + (g / (1.0 + g)).powf(self.alpha1));
        let decay = if self.a2 == 0.0 { 0.0 } else { self.a2 * g.powf(-self.gamma) };
        (growth + decay) * self.sigma_tilde
    }
}

/// Cut-off parameters `B > 0`, `a in [0, 1)`, `alpha > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffParams {
    pub b: f64,
    pub a: f64,
    pub alpha: f64,
}

impl CutoffParams {
    pub fn new(b: f64, a: f64, alpha: f64) -> Result<Self> {
        let p = Self { b, a, alpha };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b > 0.0 && self.b.is_finite()) {
            return Err(domain("cut-off B must be positive"));
        }
        if !(0.0..1.0).contains(&self.a) {
            return Err(domain("cut-off a must lie in [0, 1)"));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(domain("cut-off alpha must be positive"));
        }
        Ok(())
    }
}

/// Members of the cross-section catalog.
#[derive(Debug, Clone, PartialEq)]
pub enum CrossSectionKind {
    HardBall { constant: f64 },
    Moller { r0: f64 },
    Compton { r0: f64 },
    Neutrino { coupling: f64, hbar: f64 },
    Israel { profile: AngularTable },
    MaxwellParticles { profile: AngularTable },
    Envelope(EnvelopeParams),
}

impl CrossSectionKind {
    pub fn name(&self) -> &'static str {
        match self {
            CrossSectionKind::HardBall { .. } => "hard_ball",
            CrossSectionKind::Moller { .. } => "moller",
            CrossSectionKind::Compton { .. } => "compton",
            CrossSectionKind::Neutrino { .. } => "neutrino",
            CrossSectionKind::Israel { .. } => "israel",
            CrossSectionKind::MaxwellParticles { .. } => "maxwell_particles",
            CrossSectionKind::Envelope(_) => "envelope",
        }
    }
}

/// A cross section, optionally restricted to the cut-off set.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossSection {
    pub kind: CrossSectionKind,
    pub cutoff: Option<CutoffParams>,
}

impl CrossSection {
    pub fn new(kind: CrossSectionKind) -> Self {
        Self { kind, cutoff: None }
    }

    pub fn hard_ball(constant: f64) -> Self {
        Self::new(CrossSectionKind::HardBall { constant })
    }

    pub fn with_cutoff(mut self, cutoff: CutoffParams) -> Self {
        self.cutoff = Some(cutoff);
        self
    }

    /// Whether the cross section vanishes identically.
    pub fn is_zero(&self) -> bool {
        matches!(self.kind, CrossSectionKind::HardBall { constant } if constant == 0.0)
    }

    /// Whether the value does not depend on `(g, theta, c)`.
    pub fn constant_value(&self) -> Option<f64> {
        match self.kind {
            CrossSectionKind::HardBall { constant } => Some(constant),
            _ => None,
        }
    }
}

/// Evaluates `sigma(g, theta)` at speed of light `c` (infinite `c` gives the Newtonian value).
pub fn evaluate(sigma: &CrossSection, g: f64, theta: f64, c: f64) -> Result<f64> {
    if !(g >= 0.0 && g.is_finite()) {
        return Err(domain(format!("relative momentum must be finite and nonnegative, got {g}")));
    }
    if !(0.0..=std::f64::consts::PI).contains(&theta) {
        return Err(domain(format!("scattering angle {theta} outside [0, pi]")));
    }
    if !(c > 0.0) {
        return Err(domain("speed of light must be positive"));
    }
    let kind = sigma.kind.name();
    let value = match &sigma.kind {
        CrossSectionKind::HardBall { constant } => *constant,
        CrossSectionKind::Moller { r0 } => {
            if g == 0.0 {
                return Err(Error::SingularMomentum { kind, g });
            }
            let sin2 = theta.sin().powi(2);
            if sin2 == 0.0 {
                return Err(Error::SingularAngle { kind, theta });
            }
            let x = if c.is_finite() { (g / (2.0 * c)).powi(2) } else { 0.0 };
            if x == 0.0 {
                return Err(Error::SingularMomentum { kind, g });
            }
            let u2 = 1.0 + x;
            let bracket = (2.0 * u2 - 1.0).powi(2) / (sin2 * sin2) - (2.0 * u2 * u2 - u2 - 0.25) / sin2 + 0.25 * x * x;
            r0 * r0 / (u2 * x * x) * bracket
        }
        CrossSectionKind::Compton { r0 } => {
            let xi = if c.is_finite() { 1.0 - c * c / (g * g + 4.0 * c * c) } else { 0.75 };
            let k = 1.0 - theta.cos();
            let den = 1.0 - 0.5 * xi * k;
            let ratio = (1.0 - (1.0 - 0.5 * xi) * k) / den;
            0.5 * r0 * r0 * (1.0 - xi) * (1.0 + 0.25 * xi * xi * k * k / den + ratio * ratio)
        }
        CrossSectionKind::Neutrino { coupling, hbar } => {
            if c.is_finite() {
                coupling * coupling * g * g / (std::f64::consts::PI * hbar * hbar * c * c)
            } else {
                0.0
            }
        }
        CrossSectionKind::Israel { profile } => {
            if g == 0.0 {
                return Err(Error::SingularMomentum { kind, g });
            }
            let damp = if c.is_finite() { 1.0 + (g / c).powi(2) } else { 1.0 };
            profile.eval(theta) / (2.0 * g * damp)
        }
        CrossSectionKind::MaxwellParticles { profile } => {
            if g == 0.0 {
                return Err(Error::SingularMomentum { kind, g });
            }
            profile.eval(theta) / (2.0 * g)
        }
        CrossSectionKind::Envelope(params) => params.value(g),
    };
    Ok(value)
}

/// Worst-case ratio of a cross section to an envelope over a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeReport {
    pub worst_ratio: f64,
    pub worst_at: (f64, f64, f64),
    pub evaluated: usize,
    /// Sample points outside the cross section's domain.
    pub skipped: usize,
    pub passed: bool,
}

/// Compares `sigma` against the envelope on every `(g, theta, c)` sample point.
pub fn envelope_check(sigma: &CrossSection, params: &EnvelopeParams, sample: &[(f64, f64, f64)]) -> Result<EnvelopeReport> {
    params.validate()?;
    let mut report = EnvelopeReport { worst_ratio: 0.0, worst_at: (0.0, 0.0, 0.0), evaluated: 0, skipped: 0, passed: true };
    for &(g, theta, c) in sample {
        let value = match evaluate(sigma, g, theta, c) {
            Ok(v) => v,
            Err(_) => {
                report.skipped += 1;
                continue;
            }
        };
        report.evaluated += 1;
        let env = params.value(g);
        let ratio = if value == 0.0 { 0.0 } else { value / env };
        if ratio > report.worst_ratio || ratio.is_nan() {
            report.worst_ratio = ratio;
            report.worst_at = (g, theta, c);
        }
    }
    report.passed = report.worst_ratio <= 1.0;
    Ok(report)
}

/// The cut-off threshold `h_c`.
pub fn h_c(x: &Position, p: &MomentumVec, q: &MomentumVec, t: f64, c: f64, params: &CutoffParams) -> Result<f64> {
    check_c(c)?;
    check_pair(p, q)?;
    params.validate()?;
    if !(t > 0.0) {
        return Err(domain(format!("cut-off time must be positive, got {t}")));
    }
    let drift = *x + (normalized_velocity(p, c) - normalized_velocity(q, c)) * t;
    Ok(params.b / (t * t) + params.a * params.alpha * p0(q, c) * drift.norm_sq() / (c * t * t))
}

/// `c^3 (1/p0 + 1/q0 - 1/p0' - 1/q0')`, written without cancellation of large terms.
#[inline]
pub fn energy_defect(p: &MomentumVec, q: &MomentumVec, p_out: &MomentumVec, q_out: &MomentumVec, c: f64) -> f64 {
    let part = |a: &MomentumVec, b: &MomentumVec| {
        let (ea, eb) = (p0(a, c), p0(b, c));
        (b.norm_sq() - a.norm_sq()) / (ea * eb * (ea + eb))
    };
    c * c * c * (part(p, p_out) + part(q, q_out))
}

fn outgoing(frame: Frame, p: &MomentumVec, q: &MomentumVec, omega: &MomentumVec, c: f64) -> Result<(MomentumVec, MomentumVec)> {
    match frame {
        Frame::Cm => Ok(cm_map(p, q, omega, c)),
        Frame::Gs => {
            let out = gs_map(p, q, omega, c);
            Ok((out.p_out, out.q_out))
        }
        _ => Err(domain("the cut-off set is defined for relativistic frames only")),
    }
}

/// Membership of `omega` in the cut-off set.
#[allow(clippy::too_many_arguments)]
pub fn in_cutoff_set(
    omega: &MomentumVec,
    x: &Position,
    p: &MomentumVec,
    q: &MomentumVec,
    t: f64,
    c: f64,
    params: &CutoffParams,
    frame: Frame,
) -> Result<bool> {
    let h = h_c(x, p, q, t, c, params)?;
    crate::frames::check_unit(omega, p.dim())?;
    let (pp, qp) = outgoing(frame, p, q, omega, c)?;
    Ok(energy_defect(p, q, &pp, &qp, c) >= -h)
}

/// Samples per independently seeded chunk of [`cutoff_measure`].
pub const MEASURE_CHUNK: usize = 4096;

/// Monte-Carlo fraction of the sphere inside the cut-off set (centre-of-momentum map).
#[allow(clippy::too_many_arguments)]
pub fn cutoff_measure(
    x: &Position,
    p: &MomentumVec,
    q: &MomentumVec,
    t: f64,
    c: f64,
    params: &CutoffParams,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    if n_samples < 1000 {
        return Err(domain("cut-off measure needs at least 1000 samples"));
    }
    let h = h_c(x, p, q, t, c, params)?;
    let dim = p.dim();
    let chunks = n_samples.div_ceil(MEASURE_CHUNK);
    let counts = par::map_range(chunks, |k| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let len = MEASURE_CHUNK.min(n_samples - k * MEASURE_CHUNK);
        (0..len)
            .filter(|_| {
                let w = random_unit(dim, &mut rng);
                let (pp, qp) = cm_map(p, q, &w, c);
                energy_defect(p, q, &pp, &qp, c) >= -h
            })
            .count()
    });
    Ok(counts.iter().sum::<usize>() as f64 / n_samples as f64)
}

/// Result of scanning a grid of `c` values for a full cut-off set.
#[derive(Debug, Clone, PartialEq)]
pub struct CStarReport {
    /// Smallest grid value from which every larger grid value gives the full sphere.
    pub empirical: Option<f64>,
    /// Sufficient bound `T |p+q| |p-q| / (2 sqrt(B))`.
    pub analytic_sufficient: f64,
    /// Whole-sphere membership at each grid value.
    pub full: Vec<bool>,
    /// Minimum of `energy_defect + B/t^2` over the sample, per grid value.
    pub margin: Vec<f64>,
}

/// Number of directions scanned by [`c_star_search`].
pub const C_STAR_DIRECTIONS: usize = 10_000;
/// Number of time nodes in `(0, T]` scanned by [`c_star_search`].
pub const C_STAR_TIMES: usize = 16;

/// Scans `c_grid` for the threshold beyond which the cut-off set is the whole sphere.
///
/// Membership uses the position-independent lower bound `h_c >= B/t^2`, so the
/// reported threshold holds for every `x`.
pub fn c_star_search(p: &MomentumVec, q: &MomentumVec, t_final: f64, params: &CutoffParams, c_grid: &[f64]) -> Result<CStarReport> {
    check_pair(p, q)?;
    params.validate()?;
    if !(t_final > 0.0) {
        return Err(domain("final time must be positive"));
    }
    if c_grid.is_empty() || c_grid.iter().any(|c| !(*c > 0.0 && c.is_finite())) || c_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(domain("c grid must be positive and strictly ascending"));
    }
    let sphere = SphereRule::dense(p.dim(), C_STAR_DIRECTIONS);
    let times: Vec<f64> = (1..=C_STAR_TIMES).map(|k| t_final * k as f64 / C_STAR_TIMES as f64).collect();
    let margins: Vec<f64> = par::map_slice(c_grid, |&c| {
        let worst = sphere
            .points
            .iter()
            .map(|w| {
                let (pp, qp) = cm_map(p, q, w, c);
                energy_defect(p, q, &pp, &qp, c)
            })
            .fold(f64::INFINITY, f64::min);
        times.iter().map(|t| worst + params.b / (t * t)).fold(f64::INFINITY, f64::min)
    });
    let full: Vec<bool> = margins.iter().map(|m| *m >= 0.0).collect();
    let mut empirical = None;
    for (i, &c) in c_grid.iter().enumerate().rev() {
        if full[i] {
            empirical = Some(c);
        } else {
            break;
        }
    }
    let analytic_sufficient = t_final * (*p + *q).norm() * (*p - *q).norm() / (2.0 * params.b.sqrt());
    Ok(CStarReport { empirical, analytic_sufficient, full, margin: margins })
}

/// `sigma` evaluated on the angle of a completed collision, with `0` at `g = 0`.
pub(crate) fn evaluate_on_event(
    sigma: &CrossSection,
    p: &MomentumVec,
    q: &MomentumVec,
    p_out: &MomentumVec,
    q_out: &MomentumVec,
    c: f64,
) -> Result<f64> {
    if let Some(v) = sigma.constant_value() {
        return Ok(v);
    }
    if c.is_infinite() {
        let d = *p - *q;
        let g = d.norm();
        if g == 0.0 {
            return Ok(0.0);
        }
        let cos = (d.dot(&(*p_out - *q_out)) / (g * g)).clamp(-1.0, 1.0);
        return evaluate(sigma, g, cos.acos(), c);
    }
    let g = relative_momentum(p, q, c);
    if g == 0.0 {
        return Ok(0.0);
    }
    let cos = crate::kinematics::cos_scattering_angle_raw(p, q, p_out, q_out, c, g).clamp(-1.0, 1.0);
    evaluate(sigma, g, cos.acos(), c)
}
