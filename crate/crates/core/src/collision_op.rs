//! Collision kernels and quadrature of the gain and loss integrals.
//!
//! Two reductions of the collision operator are supported:
//!
//! * [`Representation::Gs`]: `int dq int dw K_c(p,q,w) [f(p') h(q') - f(p) h(q)]`
//!   with the Glassey-Strauss map and kernel `K_c = s sigma B / (p0 q0)`;
//! * [`Representation::Cm`]: `int dq int dw v_c sigma [f(p') h(q') - f(p) h(q)]`
//!   with the centre-of-momentum map and the Moller velocity `v_c`.
//!
//! Passing `c = f64::INFINITY` selects the Newtonian counterpart of each: the
//! omega-representation with `K_inf = |w.(p-q)| sigma` and the
//! sigma-representation with `|p-q| sigma / 2`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cross_sections::{evaluate_on_event, CrossSection};
use crate::error::{domain, Result};
use crate::frames::{check_unit, cm_map, gs_map, newton_omega_map, newton_sigma_map};
use crate::kinematics::{check_pair, moller_velocity, p0, relative_momentum};
use crate::par;
use crate::quadrature::{random_unit, sphere_area, SphereRule};
use crate::vector::MomentumVec;

/// Reduction of the collision integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Representation {
    Gs,
    Cm,
}

impl Representation {
    pub fn name(self) -> &'static str {
        match self {
            Representation::Gs => "gs",
            Representation::Cm => "cm",
        }
    }
}

/// A density in momentum space.
#[derive(Clone)]
pub struct MomentumFunction {
    rule: Arc<dyn Fn(&MomentumVec) -> f64 + Send + Sync>,
    /// Radius outside which the function vanishes (infinite if unbounded).
    pub support: f64,
}

impl MomentumFunction {
    pub fn new(support: f64, rule: impl Fn(&MomentumVec) -> f64 + Send + Sync + 'static) -> Self {
        Self { rule: Arc::new(rule), support }
    }

    pub fn zero() -> Self {
        Self::new(0.0, |_| 0.0)
    }

    #[inline]
    pub fn eval(&self, p: &MomentumVec) -> f64 {
        if p.norm_sq() > self.support * self.support {
            0.0
        } else {
            (self.rule)(p)
        }
    }
}

impl std::fmt::Debug for MomentumFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MomentumFunction").field("support", &self.support).finish()
    }
}

/// How the `(q, omega)` integral is discretised.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuadMode {
    /// Midpoint tensor grid in `q` times the standard sphere rule.
    Grid,
    /// Uniform random `q` in the box and uniform random `omega`.
    MonteCarlo { samples: usize, seed: u64 },
}

/// Discretisation of the collision integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub dim: usize,
    /// Half-width of the momentum box `[-L, L]^N`.
    pub q_extent: f64,
    /// Midpoint cells per axis.
    pub q_count: usize,
    /// Sphere resolution: angles in two dimensions, per-axis count of the product rule in three.
    pub n_omega: usize,
    pub mode: QuadMode,
}

impl QuadratureSpec {
    pub fn grid(dim: usize, q_extent: f64, q_count: usize, n_omega: usize) -> Self {
        Self { dim, q_extent, q_count, n_omega, mode: QuadMode::Grid }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != 2 && self.dim != 3 {
            return Err(domain("quadrature dimension must be 2 or 3"));
        }
        if self.q_count < 2 || self.n_omega < 2 {
            return Err(domain("quadrature counts must be at least 2"));
        }
        if !(self.q_extent > 0.0 && self.q_extent.is_finite()) {
            return Err(domain("quadrature extent must be positive"));
        }
        if let QuadMode::MonteCarlo { samples, .. } = self.mode {
            if samples < 2 {
                return Err(domain("Monte-Carlo mode needs at least 2 samples"));
            }
        }
        Ok(())
    }

    /// The spec with both resolutions halved (rounded up to at least 2).
    pub fn coarsened(&self) -> Self {
        let mode = match self.mode {
            QuadMode::Grid => QuadMode::Grid,
            QuadMode::MonteCarlo { samples, seed } => QuadMode::MonteCarlo { samples: (samples / 4).max(2), seed },
        };
        Self { q_count: (self.q_count / 2).max(2), n_omega: (self.n_omega / 2).max(2), mode, ..*self }
    }

    /// The spec with both resolutions doubled.
    pub fn refined(&self) -> Self {
        Self { q_count: self.q_count * 2, n_omega: self.n_omega * 2, ..*self }
    }

    pub fn cell_width(&self) -> f64 {
        2.0 * self.q_extent / self.q_count as f64
    }

    /// Midpoint node coordinates along one axis.
    pub fn axis_nodes(&self) -> Vec<f64> {
        let h = self.cell_width();
        (0..self.q_count).map(|i| -self.q_extent + (i as f64 + 0.5) * h).collect()
    }

    /// All tensor-grid nodes, first axis slowest.
    pub fn nodes(&self) -> Vec<MomentumVec> {
        let axis = self.axis_nodes();
        let mut out = Vec::with_capacity(axis.len().pow(self.dim as u32));
        for &a in &axis {
            for &b in &axis {
                if self.dim == 2 {
                    out.push(MomentumVec::new2(a, b));
                } else {
                    for &c in &axis {
                        out.push(MomentumVec::new3(a, b, c));
                    }
                }
            }
        }
        out
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_width().powi(self.dim as i32)
    }

    pub fn sphere(&self) -> SphereRule {
        SphereRule::standard(self.dim, self.n_omega)
    }
}

/// Glassey-Strauss kernel `K_c = s sigma B / (p0 q0)` with
/// `B = c (p0+q0)^2 p0 q0 |w.(p/p0 - q/q0)| / ((p0+q0)^2 - (w.(p+q))^2)^2`.
///
/// The cut-off indicator, which depends on position and time, is not applied here.
pub fn kernel_gs(p: &MomentumVec, q: &MomentumVec, omega: &MomentumVec, c: f64, sigma: &CrossSection) -> Result<f64> {
    check_pair(p, q)?;
    check_unit(omega, p.dim())?;
    crate::kinematics::check_c(c)?;
    let e = p0(p, c) + p0(q, c);
    let w = omega.dot(&(*p + *q));
    if !(e * e - w * w > 0.0) {
        return Err(domain("Glassey-Strauss denominator is not positive"));
    }
    let (_, _, k) = collide(Representation::Gs, p, q, omega, c, sigma)?;
    Ok(k)
}

/// Newtonian kernel `K_inf = |w.(p-q)| sigma(|p-q|, theta)`.
pub fn kernel_newt(p: &MomentumVec, q: &MomentumVec, omega: &MomentumVec, sigma: &CrossSection) -> Result<f64> {
    check_pair(p, q)?;
    check_unit(omega, p.dim())?;
    let (_, _, k) = collide(Representation::Gs, p, q, omega, f64::INFINITY, sigma)?;
    Ok(k)
}

/// The kinematic factor of the integrand without the cross section.
#[inline]
pub(crate) fn kinematic_factor(rep: Representation, p: &MomentumVec, q: &MomentumVec, omega: &MomentumVec, c: f64) -> f64 {
    match (rep, c.is_finite()) {
        (Representation::Gs, true) => {
            let (e_p, e_q) = (p0(p, c), p0(q, c));
            let e = e_p + e_q;
            let w = omega.dot(&(*p + *q));
            let den = e * e - w * w;
            let g = relative_momentum(p, q, c);
            let s = g * g + 4.0 * c * c;
            s * c * e * e * omega.dot(&(*p / e_p - *q / e_q)).abs() / (den * den)
        }
        (Representation::Gs, false) => omega.dot(&(*p - *q)).abs(),
        (Representation::Cm, true) => moller_velocity(p, q, c),
        (Representation::Cm, false) => 0.5 * (*p - *q).norm(),
    }
}

/// Outgoing pair of the representation at `(p, q, omega)`.
#[inline]
pub(crate) fn outgoing(rep: Representation, p: &MomentumVec, q: &MomentumVec, omega: &MomentumVec, c: f64) -> (MomentumVec, MomentumVec) {
    match (rep, c.is_finite()) {
        (Representation::Gs, true) => {
            let out = gs_map(p, q, omega, c);
            (out.p_out, out.q_out)
        }
        (Representation::Gs, false) => newton_omega_map(p, q, omega),
        (Representation::Cm, true) => cm_map(p, q, omega, c),
        (Representation::Cm, false) => newton_sigma_map(p, q, omega),
    }
}

/// Outgoing pair and full integrand weight (kinematic factor times cross section).
#[inline]
pub(crate) fn collide(
    rep: Representation,
    p: &MomentumVec,
    q: &MomentumVec,
    omega: &MomentumVec,
    c: f64,
    sigma: &CrossSection,
) -> Result<(MomentumVec, MomentumVec, f64)> {
    let (pp, qp) = outgoing(rep, p, q, omega, c);
    let k = kinematic_factor(rep, p, q, omega, c);
    if k == 0.0 {
        return Ok((pp, qp, 0.0));
    }
    let s = evaluate_on_event(sigma, p, q, &pp, &qp, c)?;
    Ok((pp, qp, k * s))
}

fn validate_common(p: &MomentumVec, c: f64, quad: &QuadratureSpec) -> Result<()> {
    quad.validate()?;
    crate::kinematics::check_momentum(p)?;
    if p.dim() != quad.dim {
        return Err(domain("momentum dimension differs from the quadrature dimension"));
    }
    if !(c > 0.0) || c.is_nan() {
        return Err(domain("speed of light must be positive (or infinite for the Newtonian operator)"));
    }
    Ok(())
}

/// A quadrature value with a refinement-based error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadEstimate {
    pub value: f64,
    /// `|value - coarse value|` in grid mode, the standard error in Monte-Carlo mode.
    pub error_estimate: f64,
}

#[derive(Clone, Copy)]
enum Part {
    Gain,
    Loss,
}

fn integrate_part(
    part: Part,
    f: &MomentumFunction,
    h: &MomentumFunction,
    p: &MomentumVec,
    c: f64,
    sigma: &CrossSection,
    rep: Representation,
    quad: &QuadratureSpec,
) -> Result<(f64, f64)> {
    let integrand = |q: &MomentumVec, w: &MomentumVec| -> Result<f64> {
        let (pp, qp, k) = collide(rep, p, q, w, c, sigma)?;
        if k == 0.0 {
            return Ok(0.0);
        }
        Ok(match part {
            Part::Gain => k * f.eval(&pp) * h.eval(&qp),
            Part::Loss => k * h.eval(q),
        })
    };
    let prefactor = match part {
        Part::Gain => 1.0,
        Part::Loss => f.eval(p),
    };
    if prefactor == 0.0 || sigma.is_zero() {
        return Ok((0.0, 0.0));
    }
    match quad.mode {
        QuadMode::Grid => {
            let axis = quad.axis_nodes();
            let sphere = quad.sphere();
            let vol = quad.cell_volume();
            let slabs: Vec<Result<f64>> = par::map_range(axis.len(), |i| {
                let mut acc = 0.0;
                let rest = axis.len().pow(quad.dim as u32 - 1);
                for r in 0..rest {
                    let q = if quad.dim == 2 {
                        MomentumVec::new2(axis[i], axis[r])
                    } else {
                        MomentumVec::new3(axis[i], axis[r / axis.len()], axis[r % axis.len()])
                    };
                    if matches!(part, Part::Loss) && h.eval(&q) == 0.0 {
                        continue;
                    }
                    for (w, wt) in sphere.points.iter().zip(&sphere.weights) {
                        acc += wt * integrand(&q, w)?;
                    }
                }
                Ok(acc * vol)
            });
            let mut total = 0.0;
            for s in slabs {
                total += s?;
            }
            Ok((prefactor * total, 0.0))
        }
        QuadMode::MonteCarlo { samples, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let l = quad.q_extent;
            let volume = (2.0 * l).powi(quad.dim as i32) * sphere_area(quad.dim);
            let (mut sum, mut sum_sq) = (0.0, 0.0);
            for _ in 0..samples {
                let mut q = MomentumVec::zeros(quad.dim);
                for k in 0..quad.dim {
                    q.set(k, rng.gen_range(-l..l));
                }
                let w = random_unit(quad.dim, &mut rng);
                let v = integrand(&q, &w)? * volume;
                sum += v;
                sum_sq += v * v;
            }
            let n = samples as f64;
            let mean = sum / n;
            let var = (sum_sq / n - mean * mean).max(0.0);
            Ok((prefactor * mean, prefactor.abs() * (var / n).sqrt()))
        }
    }
}

fn estimate(
    part: Part,
    f: &MomentumFunction,
    h: &MomentumFunction,
    p: &MomentumVec,
    c: f64,
    sigma: &CrossSection,
    rep: Representation,
    quad: &QuadratureSpec,
) -> Result<QuadEstimate> {
    validate_common(p, c, quad)?;
    let (value, stderr) = integrate_part(part, f, h, p, c, sigma, rep, quad)?;
    let error_estimate = match quad.mode {
        QuadMode::Grid => {
            let (coarse, _) = integrate_part(part, f, h, p, c, sigma, rep, &quad.coarsened())?;
            (value - coarse).abs()
        }
        QuadMode::MonteCarlo { .. } => stderr,
    };
    Ok(QuadEstimate { value, error_estimate })
}

/// Gain term `int dq int dw k f(p') h(q')`.
pub fn q_gain(
    f: &MomentumFunction,
    h: &MomentumFunction,
    p: &MomentumVec,
    c: f64,
    sigma: &CrossSection,
    rep: Representation,
    quad: &QuadratureSpec,
) -> Result<QuadEstimate> {
    estimate(Part::Gain, f, h, p, c, sigma, rep, quad)
}

/// Loss term `f(p) int dq int dw k h(q)`.
pub fn q_loss(
    f: &MomentumFunction,
    h: &MomentumFunction,
    p: &MomentumVec,
    c: f64,
    sigma: &CrossSection,
    rep: Representation,
    quad: &QuadratureSpec,
) -> Result<QuadEstimate> {
    estimate(Part::Loss, f, h, p, c, sigma, rep, quad)
}

/// Relative moment defects of the discrete operator `Q(f, f)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentResiduals {
    pub mass: f64,
    /// Largest over momentum components.
    pub momentum: f64,
    pub energy: f64,
}

impl MomentResiduals {
    pub fn max(&self) -> f64 {
        self.mass.max(self.momentum).max(self.energy)
    }
}

/// `|int Q phi| / int (|gain| + |loss|) |phi|` for `phi` in `{1, p_k, p0}` (Newtonian: `|p|^2/2`),
/// evaluated on the midpoint grid of `quad`, which serves as both the `p`- and the `q`-grid.
pub fn moment_conservation(
    f: &MomentumFunction,
    c: f64,
    sigma: &CrossSection,
    rep: Representation,
    quad: &QuadratureSpec,
) -> Result<MomentResiduals> {
    let quad = QuadratureSpec { mode: QuadMode::Grid, ..*quad };
    quad.validate()?;
    if !(c > 0.0) {
        return Err(domain("speed of light must be positive"));
    }
    let nodes = quad.nodes();
    let values: Vec<f64> = nodes.iter().map(|p| f.eval(p)).collect();
    let sphere = quad.sphere();
    let vol = quad.cell_volume();
    let per_node: Vec<Result<(f64, f64)>> = par::map_range(nodes.len(), |i| {
        let p = &nodes[i];
        let (mut gain, mut loss) = (0.0, 0.0);
        for (j, q) in nodes.iter().enumerate() {
            let fq = values[j];
            for (w, wt) in sphere.points.iter().zip(&sphere.weights) {
                let (pp, qp, k) = collide(rep, p, q, w, c, sigma)?;
                if k == 0.0 {
                    continue;
                }
                gain += wt * k * f.eval(&pp) * f.eval(&qp);
                loss += wt * k * fq;
            }
        }
        Ok((gain * vol, loss * vol * values[i]))
    });
    let dim = quad.dim;
    let mut num = vec![0.0; dim + 2];
    let mut den = vec![0.0; dim + 2];
    for (p, r) in nodes.iter().zip(per_node) {
        let (gain, loss) = r?;
        let q = gain - loss;
        let scale = gain.abs() + loss.abs();
        let energy = if c.is_finite() { p0(p, c) } else { 0.5 * p.norm_sq() };
        let mut phis = vec![1.0];
        phis.extend_from_slice(p.as_slice());
        phis.push(energy);
        for (k, phi) in phis.iter().enumerate() {
            num[k] += q * phi;
            den[k] += scale * phi.abs();
        }
    }
    let ratio = |k: usize| if den[k] == 0.0 { 0.0 } else { num[k].abs() / den[k] };
    let momentum = (1..=dim).map(ratio).fold(0.0, f64::max);
    Ok(MomentResiduals { mass: ratio(0), momentum, energy: ratio(dim + 1) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn support_radius_cuts_off() {
        let f = MomentumFunction::new(1.0, |_| 2.0);
        assert_eq!(f.eval(&MomentumVec::new2(0.5, 0.0)), 2.0);
        assert_eq!(f.eval(&MomentumVec::new2(1.5, 0.0)), 0.0);
    }

    #[test]
    fn spec_validation() {
        assert!(QuadratureSpec::grid(2, 6.0, 1, 16).validate().is_err());
        assert!(QuadratureSpec::grid(4, 6.0, 8, 16).validate().is_err());
        assert!(QuadratureSpec::grid(2, -1.0, 8, 16).validate().is_err());
    }

    #[test]
    fn midpoint_nodes_are_symmetric() {
        let q = QuadratureSpec::grid(2, 3.0, 6, 4);
        let a = q.axis_nodes();
        for i in 0..6 {
            assert!((a[i] + a[5 - i]).abs() < 1e-15);
        }
        assert_eq!(q.nodes().len(), 36);
    }
}
