//! Post-collision momentum maps.
//!
//! Four parameterisations of the collision sphere are provided: the
//! Glassey-Strauss map and the centre-of-momentum map for the relativistic
//! problem, and the omega- and sigma-representations of the Newtonian problem.
//! Each takes a unit vector `omega` on `S^{N-1}` and returns the outgoing pair.

use crate::error::{domain, Result};
use crate::kinematics::{self, check_c, check_pair, p0};
use crate::vector::MomentumVec;

/// Accepted deviation of `|omega|` from one.
pub const UNIT_TOLERANCE: f64 = 1e-12;

/// Collision-sphere parameterisation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Frame {
    Gs,
    Cm,
    NewtonOmega,
    NewtonSigma,
}

impl Frame {
    pub fn is_relativistic(self) -> bool {
        matches!(self, Frame::Gs | Frame::Cm)
    }

    pub fn name(self) -> &'static str {
        match self {
            Frame::Gs => "gs",
            Frame::Cm => "cm",
            Frame::NewtonOmega => "newton_omega",
            Frame::NewtonSigma => "newton_sigma",
        }
    }
}

/// A binary collision with its outgoing momenta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringEvent {
    pub p: MomentumVec,
    pub q: MomentumVec,
    pub omega: MomentumVec,
    /// Speed of light; `f64::INFINITY` for the Newtonian frames.
    pub c: f64,
    pub frame: Frame,
    pub p_out: MomentumVec,
    pub q_out: MomentumVec,
}

impl ScatteringEvent {
    /// Runs the collision map of `frame`. Newtonian frames ignore `c` and store infinity.
    pub fn new(frame: Frame, p: MomentumVec, q: MomentumVec, omega: MomentumVec, c: f64) -> Result<Self> {
        check_pair(&p, &q)?;
        check_unit(&omega, p.dim())?;
        let (p_out, q_out, c) = match frame {
            Frame::Gs => {
                check_c(c)?;
                let out = gs_map(&p, &q, &omega, c);
                (out.p_out, out.q_out, c)
            }
            Frame::Cm => {
                check_c(c)?;
                let (a, b) = cm_map(&p, &q, &omega, c);
                (a, b, c)
            }
            Frame::NewtonOmega => {
                let (a, b) = newton_omega_map(&p, &q, &omega);
                (a, b, f64::INFINITY)
            }
            Frame::NewtonSigma => {
                let (a, b) = newton_sigma_map(&p, &q, &omega);
                (a, b, f64::INFINITY)
            }
        };
        Ok(Self { p, q, omega, c, frame, p_out, q_out })
    }

    /// Collision invariants including the scattering angle (relativistic frames only).
    pub fn invariants(&self) -> Result<kinematics::CollisionInvariants> {
        if !self.frame.is_relativistic() {
            return Err(domain("Newtonian events carry no relativistic invariants"));
        }
        kinematics::invariants_with_angle(&self.p, &self.q, &self.p_out, &self.q_out, self.c)
    }
}

pub(crate) fn check_unit(omega: &MomentumVec, dim: usize) -> Result<()> {
    if omega.dim() != dim {
        return Err(domain(format!("omega has dimension {}, expected {dim}", omega.dim())));
    }
    if !omega.is_finite() || (omega.norm() - 1.0).abs() > UNIT_TOLERANCE {
        return Err(domain(format!("omega {omega:?} is not a unit vector")));
    }
    Ok(())
}

/// Output of the Glassey-Strauss map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GsOutcome {
    pub p_out: MomentumVec,
    pub q_out: MomentumVec,
    /// Momentum transfer along omega: `p' = p + a omega`.
    pub a: f64,
    /// Energy transfer: `p0' = p0 + n0`.
    pub n0: f64,
}

/// Glassey-Strauss map without validation.
#[inline]
pub fn gs_map(p: &MomentumVec, q: &MomentumVec, omega: &MomentumVec, c: f64) -> GsOutcome {
    let (e_p, e_q) = (p0(p, c), p0(q, c));
    let e = e_p + e_q;
    let w_sum = omega.dot(&(*p + *q));
    let den = e * e - w_sum * w_sum;
    let a = 2.0 * e * e_p * e_q * omega.dot(&(*q / e_q - *p / e_p)) / den;
    let n0 = 2.0 * w_sum * (e_p * omega.dot(q) - e_q * omega.dot(p)) / den;
    GsOutcome { p_out: *p + *omega * a, q_out: *q - *omega * a, a, n0 }
}

/// Glassey-Strauss post-collision momenta.
pub fn gs_post_collision(p: &MomentumVec, q: &MomentumVec, omega: &MomentumVec, c: f64) -> Result<GsOutcome> {
    check_c(c)?;
    check_pair(p, q)?;
    check_unit(omega, p.dim())?;
    let e = p0(p, c) + p0(q, c);
    let w_sum = omega.dot(&(*p + *q));
    if !(e * e - w_sum * w_sum > 0.0) {
        return Err(domain("Glassey-Strauss denominator is not positive"));
    }
    Ok(gs_map(p, q, omega, c))
}

/// Centre-of-momentum map without validation.
///
/// The boost term is written with `(gamma - 1)/|p+q|^2 = 1/(sqrt(s)(p0+q0+sqrt(s)))`,
/// which stays exact as `p + q` vanishes.
#[inline]
pub fn cm_map(p: &MomentumVec, q: &MomentumVec, omega: &MomentumVec, c: f64) -> (MomentumVec, MomentumVec) {
    let sum = *p + *q;
    let e = p0(p, c) + p0(q, c);
    let g = kinematics::relative_momentum(p, q, c);
    let rs = (g * g + 4.0 * c * c).sqrt();
    let k = sum.dot(omega) / (rs * (e + rs));
    let half = (*omega + sum * k) * (0.5 * g);
    let mid = sum * 0.5;
    (mid + half, mid - half)
}

/// Closed-form outgoing energies of the centre-of-momentum map.
pub fn cm_energies(p: &MomentumVec, q: &MomentumVec, omega: &MomentumVec, c: f64) -> (f64, f64) {
    let e = p0(p, c) + p0(q, c);
    let g = kinematics::relative_momentum(p, q, c);
    let rs = (g * g + 4.0 * c * c).sqrt();
    let shift = 0.5 * g / rs * omega.dot(&(*p + *q));
    (0.5 * e + shift, 0.5 * e - shift)
}

/// Centre-of-momentum post-collision momenta.
pub fn cm_post_collision(
    p: &MomentumVec,
    q: &MomentumVec,
    omega: &MomentumVec,
    c: f64,
) -> Result<(MomentumVec, MomentumVec)> {
    check_c(c)?;
    check_pair(p, q)?;
    check_unit(omega, p.dim())?;
    Ok(cm_map(p, q, omega, c))
}

#[inline]
pub fn newton_omega_map(p: &MomentumVec, q: &MomentumVec, omega: &MomentumVec) -> (MomentumVec, MomentumVec) {
    let t = *omega * omega.dot(&(*q - *p));
    (*p + t, *q - t)
}

#[inline]
pub fn newton_sigma_map(p: &MomentumVec, q: &MomentumVec, omega: &MomentumVec) -> (MomentumVec, MomentumVec) {
    let mid = (*p + *q) * 0.5;
    let half = *omega * (0.5 * (*p - *q).norm());
    (mid + half, mid - half)
}

/// Newtonian omega-representation: `p' = p + (omega.(q-p)) omega`.
pub fn newton_post_omega(p: &MomentumVec, q: &MomentumVec, omega: &MomentumVec) -> Result<(MomentumVec, MomentumVec)> {
    check_pair(p, q)?;
    check_unit(omega, p.dim())?;
    Ok(newton_omega_map(p, q, omega))
}

/// Newtonian sigma-representation: `p' = (p+q)/2 + |p-q| omega / 2`.
pub fn newton_post_sigma(p: &MomentumVec, q: &MomentumVec, omega: &MomentumVec) -> Result<(MomentumVec, MomentumVec)> {
    check_pair(p, q)?;
    check_unit(omega, p.dim())?;
    Ok(newton_sigma_map(p, q, omega))
}

/// Jacobian determinant `-p0' q0' / (p0 q0)` of the Glassey-Strauss map at fixed omega.
pub fn gs_jacobian(p: &MomentumVec, q: &MomentumVec, omega: &MomentumVec, c: f64) -> Result<f64> {
    let out = gs_post_collision(p, q, omega, c)?;
    Ok(-p0(&out.p_out, c) * p0(&out.q_out, c) / (p0(p, c) * p0(q, c)))
}

/// `|p_newton' - p'| + |q_newton' - q'|` between the Glassey-Strauss map and the
/// Newtonian omega-representation at the same omega.
pub fn cm_diff_from_newton(p: &MomentumVec, q: &MomentumVec, omega: &MomentumVec, c: f64) -> Result<f64> {
    let rel = gs_post_collision(p, q, omega, c)?;
    let (pn, qn) = newton_omega_map(p, q, omega);
    Ok((pn - rel.p_out).norm() + (qn - rel.q_out).norm())
}
