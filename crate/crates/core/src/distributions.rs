//! Equilibria, spatial weights and the conserved weight combination.
//!
//! The relativistic equilibrium in three dimensions is
//! `J(p) = e^{-c p0} / (4 pi c K2(c^2))`; in two dimensions the normalisation
//! `int e^{-c p0} dp = 2 pi e^{-c^2} (1 + 1/c^2)` is used. Both are evaluated in
//! the form `exp(-c |p|^2 / (c + p0))` times a scaled constant, which neither
//! overflows nor cancels at large `c`. The Newtonian limit is the Maxwellian
//! `mu(p) = (2 pi)^{-N/2} e^{-|p|^2/2}`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{domain, Result};
use crate::frames::{cm_map, gs_map, Frame};
use crate::kinematics::{check_c, check_pair, normalized_velocity, p0};
use crate::quadrature::{gauss_laguerre, Rule};
use crate::vector::{MomentumVec, Position};

/// Smallest argument accepted by [`bessel_k2`].
pub const BESSEL_MIN_ARG: f64 = 0.1;

fn k2_rule() -> &'static Rule {
    static RULE: OnceLock<Rule> = OnceLock::new();
    RULE.get_or_init(|| gauss_laguerre(64, 1.5))
}

/// `e^x K2(x)`.
pub fn bessel_k2_scaled(x: f64) -> Result<f64> {
    if !(x >= BESSEL_MIN_ARG && x.is_finite()) {
        return Err(domain(format!("K2 argument {x} outside [{BESSEL_MIN_ARG}, inf)")));
    }
    let sum = k2_rule().integrate(|s| (s / x + 2.0).powf(1.5));
    Ok(sum / (3.0 * x.sqrt()))
}

/// Modified Bessel function of the second kind, order two.
pub fn bessel_k2(x: f64) -> Result<f64> {
    Ok(bessel_k2_scaled(x)? * (-x).exp())
}

fn check_dim(dim: usize) -> Result<()> {
    if dim != 2 && dim != 3 {
        return Err(domain(format!("dimension must be 2 or 3, got {dim}")));
    }
    Ok(())
}

/// `ln J(0)`, the logarithm of the equilibrium's normalising prefactor.
pub fn ln_juttner_prefactor(c: f64, dim: usize) -> Result<f64> {
    check_c(c)?;
    check_dim(dim)?;
    Ok(if dim == 3 {
        -(4.0 * PI * c * bessel_k2_scaled(c * c)?).ln()
    } else {
        -(2.0 * PI * (1.0 + 1.0 / (c * c))).ln()
    })
}

/// `ln J(p)`.
pub fn ln_juttner(p: &MomentumVec, c: f64) -> Result<f64> {
    let pre = ln_juttner_prefactor(c, p.dim())?;
    Ok(pre - c * p.norm_sq() / (c + p0(p, c)))
}

/// The normalised relativistic equilibrium.
pub fn juttner(p: &MomentumVec, c: f64, dim: usize) -> Result<f64> {
    if p.dim() != dim {
        return Err(domain("momentum dimension does not match N"));
    }
    if !p.is_finite() {
        return Err(domain("non-finite momentum"));
    }
    Ok(ln_juttner(p, c)?.exp())
}

/// The normalised Maxwellian.
pub fn maxwellian(p: &MomentumVec, dim: usize) -> Result<f64> {
    check_dim(dim)?;
    if p.dim() != dim {
        return Err(domain("momentum dimension does not match N"));
    }
    Ok(ln_maxwellian(p).exp())
}

#[inline]
pub fn ln_maxwellian(p: &MomentumVec) -> f64 {
    -0.5 * p.dim() as f64 * (2.0 * PI).ln() - 0.5 * p.norm_sq()
}

/// Exponents `alpha` (spatial decay) and `beta` (power of the equilibrium) of the weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightParams {
    pub alpha: f64,
    pub beta: f64,
}

impl WeightParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite() && beta > 0.0 && beta.is_finite()) {
            return Err(domain("weight exponents alpha and beta must be positive"));
        }
        Ok(Self { alpha, beta })
    }
}

/// `ln rho_c(x, p) = -alpha p0 |x|^2 / c + beta ln J(p)`.
pub fn ln_weight_rel(x: &Position, p: &MomentumVec, c: f64, params: &WeightParams) -> Result<f64> {
    Ok(-params.alpha * p0(p, c) * x.norm_sq() / c + params.beta * ln_juttner(p, c)?)
}

/// `rho_c(x, p) = e^{-alpha p0 |x|^2 / c} J(p)^beta`.
pub fn weight_rel(x: &Position, p: &MomentumVec, c: f64, params: &WeightParams) -> Result<f64> {
    check_pair(x, p)?;
    Ok(ln_weight_rel(x, p, c, params)?.exp())
}

/// `ln rho_inf(x, p) = -alpha |x|^2 + beta ln mu(p)`.
#[inline]
pub fn ln_weight_newt(x: &Position, p: &MomentumVec, params: &WeightParams) -> f64 {
    -params.alpha * x.norm_sq() + params.beta * ln_maxwellian(p)
}

/// `rho_inf(x, p) = e^{-alpha |x|^2} mu(p)^beta`.
pub fn weight_newt(x: &Position, p: &MomentumVec, params: &WeightParams) -> Result<f64> {
    check_pair(x, p)?;
    Ok(ln_weight_newt(x, p, params).exp())
}

/// Relative residual of the collision-invariant weight combination
///
/// `c^3 t^2/q0' + (q0'/c)|x + t(p^ - q^')|^2 + c^3 t^2/p0' + (p0'/c)|x + t(p^ - p^')|^2
///  = c^3 t^2/p0 + (p0/c)|x|^2 + c^3 t^2/q0 + (q0/c)|x + t(p^ - q^)|^2`
///
/// using the outgoing pair of `frame`.
#[allow(clippy::too_many_arguments)]
pub fn invariant_identity_residual(
    x: &Position,
    t: f64,
    p: &MomentumVec,
    q: &MomentumVec,
    omega: &MomentumVec,
    c: f64,
    frame: Frame,
) -> Result<f64> {
    check_c(c)?;
    check_pair(p, q)?;
    check_pair(x, p)?;
    crate::frames::check_unit(omega, p.dim())?;
    if !(t >= 0.0) {
        return Err(domain("time must be nonnegative"));
    }
    let (pp, qp) = match frame {
        Frame::Gs => {
            let out = gs_map(p, q, omega, c);
            (out.p_out, out.q_out)
        }
        Frame::Cm => cm_map(p, q, omega, c),
        _ => return Err(domain("the weight identity is relativistic; use the GS or CM frame")),
    };
    let (e_p, e_q, e_pp, e_qp) = (p0(p, c), p0(q, c), p0(&pp, c), p0(&qp, c));
    let (vp, vq, vpp, vqp) = (
        normalized_velocity(p, c),
        normalized_velocity(q, c),
        normalized_velocity(&pp, c),
        normalized_velocity(&qp, c),
    );
    let k = c * c * c * t * t;
    let lhs = k / e_qp + e_qp / c * (*x + (vp - vqp) * t).norm_sq() + k / e_pp + e_pp / c * (*x + (vp - vpp) * t).norm_sq();
    let rhs = k / e_p + e_p / c * x.norm_sq() + k / e_q + e_q / c * (*x + (vp - vq) * t).norm_sq();
    if rhs == 0.0 {
        return Ok(lhs.abs());
    }
    Ok((lhs - rhs).abs() / rhs)
}

/// `1 + x/2 - sqrt(1 + x)`, nonnegative for `x >= 0`.
pub fn chi1(x: f64) -> f64 {
    0.25 * x * x / (1.0 + 0.5 * x + (1.0 + x).sqrt())
}

/// `c^2 - c^2 sqrt(1 + |p|^2/c^2)`, nonincreasing in `c`.
pub fn chi2(c: f64, p_norm: f64) -> f64 {
    let e = (c * c + p_norm * p_norm).sqrt();
    -c * p_norm * p_norm / (c + e)
}

/// The Taylor remainder `sqrt(1+x) - 1 - x/2`.
pub fn sqrt_taylor_remainder(x: f64) -> f64 {
    -0.25 * x * x / ((1.0 + x).sqrt() + 1.0 + 0.5 * x)
}

/// Quantities behind the Gaussian upper bound of the equilibrium on `|p| <= A1 sqrt(c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SharpAsymp {
    /// `J(|p| = h) e^{h^2/2}`.
    pub ratio: f64,
    /// `|c^2 R(h^2/c^2)|`.
    pub remainder: f64,
    /// `A1^4 / 8`.
    pub remainder_bound: f64,
    pub remainder_ok: bool,
}

/// Evaluates the Gaussian-envelope ratio at radius `h <= a1 sqrt(c)`.
pub fn sharp_asymp_check(h: f64, c: f64, dim: usize, a1: f64) -> Result<SharpAsymp> {
    check_c(c)?;
    check_dim(dim)?;
    if !(h >= 0.0) || h > a1 * c.sqrt() {
        return Err(domain(format!("radius {h} violates h <= A1 sqrt(c) = {}", a1 * c.sqrt())));
    }
    let mut p = MomentumVec::zeros(dim);
    p.set(0, h);
    let ratio = (ln_juttner(&p, c)? + 0.5 * h * h).exp();
    let remainder = (c * c * sqrt_taylor_remainder(h * h / (c * c))).abs();
    let remainder_bound = a1.powi(4) / 8.0;
    Ok(SharpAsymp { ratio, remainder, remainder_bound, remainder_ok: remainder <= remainder_bound * (1.0 + 1e-12) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_domain() {
        assert!(bessel_k2(0.05).is_err());
        assert!(bessel_k2(f64::NAN).is_err());
        assert!(bessel_k2(0.1).is_ok());
    }

    #[test]
    fn sharp_asymp_precondition() {
        assert!(sharp_asymp_check(3.0, 4.0, 3, 1.0).is_err());
        assert!(sharp_asymp_check(2.0, 4.0, 3, 1.0).is_ok());
    }

    #[test]
    fn weights_validate() {
        assert!(WeightParams::new(0.0, 1.0).is_err());
        assert!(WeightParams::new(1.0, -1.0).is_err());
    }
}
