//! Single- and two-particle relativistic kinematics.
//!
//! Units are those of a particle of unit rest mass: momenta in units of `m c`
//! with the speed of light `c` kept as an explicit parameter, so the Newtonian
//! regime is reached by sending `c` to infinity at fixed momenta. The energy of
//! a particle is `p0 = sqrt(c^2 + |p|^2)`.

use crate::error::{domain, Error, Result};
use crate::frames::{Frame, ScatteringEvent};
use crate::vector::MomentumVec;

/// Largest tolerated overshoot of `|cos theta|` above one before it is treated as an error.
pub const ANGLE_CLAMP_TOLERANCE: f64 = 1e-9;

pub(crate) fn check_c(c: f64) -> Result<()> {
    if !(c.is_finite() && c > 0.0) {
        return Err(domain(format!("speed of light must be finite and positive, got {c}")));
    }
    Ok(())
}

pub(crate) fn check_momentum(p: &MomentumVec) -> Result<()> {
    if !p.is_finite() {
        return Err(domain(format!("non-finite momentum {p:?}")));
    }
    Ok(())
}

pub(crate) fn check_pair(p: &MomentumVec, q: &MomentumVec) -> Result<()> {
    check_momentum(p)?;
    check_momentum(q)?;
    if p.dim() != q.dim() {
        return Err(domain(format!("dimension mismatch: {} vs {}", p.dim(), q.dim())));
    }
    Ok(())
}

/// Energy without validation, for inner loops.
#[inline]
pub fn p0(p: &MomentumVec, c: f64) -> f64 {
    (c * c + p.norm_sq()).sqrt()
}

/// Energy `sqrt(c^2 + |p|^2)` of a particle with momentum `p`.
pub fn energy(p: &MomentumVec, c: f64) -> Result<f64> {
    check_c(c)?;
    check_momentum(p)?;
    Ok(p0(p, c))
}

/// An on-shell four-momentum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourMomentum {
    pub p0: f64,
    pub spatial: MomentumVec,
    pub c: f64,
}

impl FourMomentum {
    /// Places `p` on the mass shell.
    pub fn on_shell(p: MomentumVec, c: f64) -> Result<Self> {
        Ok(Self { p0: energy(&p, c)?, spatial: p, c })
    }

    /// Builds a four-momentum from explicit components, checking the mass-shell relation.
    pub fn new(p0: f64, spatial: MomentumVec, c: f64) -> Result<Self> {
        let expected = energy(&spatial, c)?;
        if !(p0 > 0.0) || ((p0 - expected) / expected).abs() > 1e-12 {
            return Err(domain(format!("energy {p0} is off shell (expected {expected})")));
        }
        Ok(Self { p0, spatial, c })
    }
}

/// Minkowski inner product `-P0 Q0 + P.Q`.
pub fn lorentz_inner(a: &FourMomentum, b: &FourMomentum) -> Result<f64> {
    if a.spatial.dim() != b.spatial.dim() {
        return Err(domain("four-momenta of different dimension"));
    }
    if a.c != b.c {
        return Err(domain(format!("four-momenta with different c ({} vs {})", a.c, b.c)));
    }
    Ok(-a.p0 * b.p0 + a.spatial.dot(&b.spatial))
}

/// The collision invariants of a pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionInvariants {
    pub s: f64,
    pub g: f64,
    pub theta: Option<f64>,
}

/// Relative momentum `g` by the difference-of-squares form, without validation.
#[inline]
pub fn relative_momentum(p: &MomentumVec, q: &MomentumVec, c: f64) -> f64 {
    let num = 2.0 * (c * c * (*p - *q).norm_sq() + p.cross_norm_sq(q));
    let den = p0(p, c) * p0(q, c) + p.dot(q) + c * c;
    (num / den).sqrt()
}

/// `s` and `g` for a pair of momenta.
pub fn invariants(p: &MomentumVec, q: &MomentumVec, c: f64) -> Result<CollisionInvariants> {
    check_c(c)?;
    check_pair(p, q)?;
    let g = relative_momentum(p, q, c);
    Ok(CollisionInvariants { s: g * g + 4.0 * c * c, g, theta: None })
}

/// Invariants together with the scattering angle of a completed collision.
pub fn invariants_with_angle(
    p: &MomentumVec,
    q: &MomentumVec,
    p_out: &MomentumVec,
    q_out: &MomentumVec,
    c: f64,
) -> Result<CollisionInvariants> {
    let mut inv = invariants(p, q, c)?;
    inv.theta = Some(scattering_angle(p, q, p_out, q_out, c)?);
    Ok(inv)
}

/// Cosine of the centre-of-momentum scattering angle, unclamped.
#[inline]
pub fn cos_scattering_angle_raw(
    p: &MomentumVec,
    q: &MomentumVec,
    p_out: &MomentumVec,
    q_out: &MomentumVec,
    c: f64,
    g: f64,
) -> f64 {
    let d0 = p0(p, c) - p0(q, c);
    let d0_out = p0(p_out, c) - p0(q_out, c);
    (-d0 * d0_out + (*p - *q).dot(&(*p_out - *q_out))) / (g * g)
}

/// Scattering angle in `[0, pi]` from the Minkowski product of the relative four-momenta.
pub fn scattering_angle(
    p: &MomentumVec,
    q: &MomentumVec,
    p_out: &MomentumVec,
    q_out: &MomentumVec,
    c: f64,
) -> Result<f64> {
    check_c(c)?;
    check_pair(p, q)?;
    check_pair(p_out, q_out)?;
    let g = relative_momentum(p, q, c);
    if g == 0.0 {
        return Err(Error::DegenerateCollision("zero relative momentum has no scattering angle".into()));
    }
    let cos = cos_scattering_angle_raw(p, q, p_out, q_out, c, g);
    if !cos.is_finite() || cos.abs() > 1.0 + ANGLE_CLAMP_TOLERANCE {
        return Err(Error::DegenerateCollision(format!(
            "cos(theta) = {cos} outside [-1, 1]; outgoing momenta do not conserve energy-momentum"
        )));
    }
    Ok(cos.clamp(-1.0, 1.0).acos())
}

/// Moller velocity `(c/4) g sqrt(s) / (p0 q0)`.
pub fn moller_velocity(p: &MomentumVec, q: &MomentumVec, c: f64) -> f64 {
    let g = relative_momentum(p, q, c);
    let s = g * g + 4.0 * c * c;
    0.25 * c * g * s.sqrt() / (p0(p, c) * p0(q, c))
}

/// The same velocity written through the particle velocities `p/p0`, `q/q0`.
pub fn moller_velocity_from_velocities(p: &MomentumVec, q: &MomentumVec, c: f64) -> f64 {
    let u = *p / p0(p, c);
    let v = *q / p0(q, c);
    let rad = (u - v).norm_sq() - u.cross_norm_sq(&v);
    0.5 * c * rad.max(0.0).sqrt()
}

/// Normalised velocity `c p / p0`.
#[inline]
pub fn normalized_velocity(p: &MomentumVec, c: f64) -> MomentumVec {
    *p * (c / p0(p, c))
}

/// Outcome of a conservation check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservationReport {
    pub momentum_residual: f64,
    pub energy_residual: f64,
    pub residual: f64,
    pub passed: bool,
}

/// Relative energy-momentum residual of a completed collision.
///
/// Relativistic frames are scaled by `p0 + q0`; Newtonian frames check `p + q`
/// and `|p|^2 + |q|^2`, each scaled by one plus its natural magnitude.
pub fn check_conservation(event: &ScatteringEvent, tol: f64) -> ConservationReport {
    let (p, q, pp, qp) = (event.p, event.q, event.p_out, event.q_out);
    let dp = (pp + qp - p - q).max_abs();
    let (momentum_residual, energy_residual) = match event.frame {
        Frame::Gs | Frame::Cm => {
            let c = event.c;
            let scale = p0(&p, c) + p0(&q, c);
            let de = (p0(&pp, c) + p0(&qp, c)) - scale;
            (dp / scale, de.abs() / scale)
        }
        Frame::NewtonOmega | Frame::NewtonSigma => {
            let e = p.norm_sq() + q.norm_sq();
            let de = pp.norm_sq() + qp.norm_sq() - e;
            (dp / (1.0 + p.norm() + q.norm()), de.abs() / (1.0 + e))
        }
    };
    let residual = momentum_residual.max(energy_residual);
    ConservationReport { momentum_residual, energy_residual, residual, passed: residual <= tol }
}
