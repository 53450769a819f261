//! Explicit Lorentz transformations into the centre-of-momentum frame.
//!
//! Four-vectors are stored as `(P0, P1, P2, P3)` with `P0 = sqrt(c^2 + |p|^2)`
//! and metric `D = diag(1, -1, -1, -1)`. A matrix is a Lorentz transformation
//! when `L^T D L = D`; its inverse is then `D L^T D`. Three constructions are
//! provided (a pure boost, a boost composed with a rotation onto the third
//! axis, and a transform that additionally aligns the relative four-momentum)
//! together with the post-collision map they induce. Only `N = 3`.

use nalgebra::{Matrix4, Vector4};

use crate::error::{domain, Error, Result};
use crate::frames::check_unit;
use crate::kinematics::{check_c, check_pair, p0, relative_momentum};
use crate::vector::MomentumVec;

/// Tolerance on the Lorentz condition accepted by [`post_collision_via`].
pub const CONDITION_TOLERANCE: f64 = 1e-8;

/// Which constructor produced a matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformKind {
    Boost,
    FrameEx2,
    HilbertSchmidtEx3,
    Custom,
}

/// A 4x4 matrix claimed to be a Lorentz transformation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzMatrix {
    pub entries: Matrix4<f64>,
    pub kind: TransformKind,
}

fn metric() -> Matrix4<f64> {
    Matrix4::from_diagonal(&Vector4::new(1.0, -1.0, -1.0, -1.0))
}

fn four(p: &MomentumVec, c: f64) -> Vector4<f64> {
    Vector4::new(p0(p, c), p[0], p[1], p[2])
}

fn require_3d(p: &MomentumVec, q: &MomentumVec, c: f64) -> Result<()> {
    check_c(c)?;
    check_pair(p, q)?;
    if p.dim() != 3 {
        return Err(domain("Lorentz constructions are only defined for N = 3"));
    }
    Ok(())
}

impl LorentzMatrix {
    pub fn custom(entries: Matrix4<f64>) -> Self {
        Self { entries, kind: TransformKind::Custom }
    }

    pub fn identity(kind: TransformKind) -> Self {
        Self { entries: Matrix4::identity(), kind }
    }

    /// `max |L^T D L - D|` over entries.
    pub fn condition_residual(&self) -> f64 {
        let d = metric();
        (self.entries.transpose() * d * self.entries - d).amax()
    }

    /// `D L^T D`, the inverse of any Lorentz transformation.
    pub fn inverse(&self) -> Self {
        let d = metric();
        Self { entries: d * self.entries.transpose() * d, kind: self.kind }
    }

    pub fn apply(&self, v: [f64; 4]) -> [f64; 4] {
        let w = self.entries * Vector4::from(v);
        [w[0], w[1], w[2], w[3]]
    }

    /// `max |L(P+Q) - (sqrt(s), 0, 0, 0)|`.
    pub fn com_residual(&self, p: &MomentumVec, q: &MomentumVec, c: f64) -> f64 {
        let g = relative_momentum(p, q, c);
        let rs = (g * g + 4.0 * c * c).sqrt();
        let w = self.entries * (four(p, c) + four(q, c));
        (w - Vector4::new(rs, 0.0, 0.0, 0.0)).amax()
    }

    /// `max |L(P-Q) - (0, 0, 0, g)|`.
    pub fn relative_residual(&self, p: &MomentumVec, q: &MomentumVec, c: f64) -> f64 {
        let g = relative_momentum(p, q, c);
        let w = self.entries * (four(p, c) - four(q, c));
        (w - Vector4::new(0.0, 0.0, 0.0, g)).amax()
    }
}

/// `(S_i S_j) / (sqrt(s) (E + sqrt(s)))`, i.e. `(gamma - 1) v_i v_j / |v|^2`.
fn boost_block(sum: &MomentumVec, e: f64, rs: f64) -> [[f64; 3]; 3] {
    let k = 1.0 / (rs * (e + rs));
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = sum[i] * sum[j] * k;
        }
    }
    out
}

/// The pure boost with velocity `(p+q)/(p0+q0)`.
pub fn boost_to_com(p: &MomentumVec, q: &MomentumVec, c: f64) -> Result<LorentzMatrix> {
    require_3d(p, q, c)?;
    let sum = *p + *q;
    let e = p0(p, c) + p0(q, c);
    let g = relative_momentum(p, q, c);
    let rs = (g * g + 4.0 * c * c).sqrt();
    let block = boost_block(&sum, e, rs);
    let mut m = Matrix4::identity();
    m[(0, 0)] = e / rs;
    for i in 0..3 {
        m[(0, i + 1)] = -sum[i] / rs;
        m[(i + 1, 0)] = -sum[i] / rs;
        for j in 0..3 {
            m[(i + 1, j + 1)] += block[i][j];
        }
    }
    Ok(LorentzMatrix { entries: m, kind: TransformKind::Boost })
}

fn first_axis(sum: &MomentumVec) -> MomentumVec {
    let (s1, s2, s3) = (sum[0], sum[1], sum[2]);
    if s1 == 0.0 {
        return MomentumVec::new3(1.0, 0.0, 0.0);
    }
    let scale = sum.norm_sq();
    let w = MomentumVec::new3(-s2 * s3, 2.0 * s1 * s3, -s1 * s2);
    if w.norm() > 1e-13 * scale {
        return w / w.norm();
    }
    let unit = *sum / sum.norm();
    let k = (0..3)
        .min_by(|&a, &b| unit[a].abs().total_cmp(&unit[b].abs()))
        .unwrap_or(0);
    let axis = MomentumVec::axis(3, k);
    let w = axis - unit * unit.dot(&axis);
    w / w.norm()
}

/// Boost composed with the rotation taking `p + q` onto the third axis.
pub fn frame_transform_ex2(p: &MomentumVec, q: &MomentumVec, c: f64) -> Result<LorentzMatrix> {
    require_3d(p, q, c)?;
    let sum = *p + *q;
    let len = sum.norm();
    if len == 0.0 {
        return Err(Error::DegenerateFrame("p + q = 0; the pair is already in its centre-of-momentum frame".into()));
    }
    let e = p0(p, c) + p0(q, c);
    let g = relative_momentum(p, q, c);
    let rs = (g * g + 4.0 * c * c).sqrt();
    let w3 = sum / len;
    let w1 = first_axis(&sum);
    let w2 = w3.cross(&w1);
    let w2 = w2 / w2.norm();
    let mut m = Matrix4::zeros();
    m[(0, 0)] = e / rs;
    m[(3, 0)] = -len / rs;
    for i in 0..3 {
        m[(0, i + 1)] = -sum[i] / rs;
        m[(1, i + 1)] = w1[i];
        m[(2, i + 1)] = w2[i];
        m[(3, i + 1)] = e / rs * w3[i];
    }
    Ok(LorentzMatrix { entries: m, kind: TransformKind::FrameEx2 })
}

/// The transform sending `P+Q` to `(sqrt(s),0,0,0)` and `P-Q` to `(0,0,0,g)`.
pub fn hs_transform_ex3(p: &MomentumVec, q: &MomentumVec, c: f64) -> Result<LorentzMatrix> {
    require_3d(p, q, c)?;
    let cross = p.cross(q);
    let cn = cross.norm();
    let g = relative_momentum(p, q, c);
    if !(cn > 0.0) || !(g > 0.0) {
        return Err(Error::DegenerateFrame("collinear momenta: |p x q| = 0".into()));
    }
    let (e_p, e_q) = (p0(p, c), p0(q, c));
    let rs = (g * g + 4.0 * c * c).sqrt();
    let pq = e_p * e_q - p.dot(q);
    let c2 = c * c;
    let mut m = Matrix4::zeros();
    m[(0, 0)] = (e_p + e_q) / rs;
    m[(1, 0)] = 2.0 * cn / (rs * g);
    m[(2, 0)] = 0.0;
    m[(3, 0)] = (e_q - e_p) / g;
    let k = 2.0 / (rs * g * cn);
    for i in 0..3 {
        m[(0, i + 1)] = -(p[i] + q[i]) / rs;
        m[(1, i + 1)] = k * (p[i] * (c2 * e_p - e_q * pq) + q[i] * (c2 * e_q - e_p * pq));
        m[(2, i + 1)] = cross[i] / cn;
        m[(3, i + 1)] = (p[i] - q[i]) / g;
    }
    if m.determinant() < 0.0 {
        for j in 1..4 {
            m[(2, j)] = -m[(2, j)];
        }
    }
    Ok(LorentzMatrix { entries: m, kind: TransformKind::HilbertSchmidtEx3 })
}

/// Outgoing momenta `(p0', p') = L^{-1}(sqrt(s), g omega)/2`, `(q0', q') = L^{-1}(sqrt(s), -g omega)/2`.
pub fn post_collision_via(
    lambda: &LorentzMatrix,
    p: &MomentumVec,
    q: &MomentumVec,
    omega: &MomentumVec,
    c: f64,
) -> Result<(MomentumVec, MomentumVec)> {
    require_3d(p, q, c)?;
    check_unit(omega, 3)?;
    let residual = lambda.condition_residual();
    if !(residual <= CONDITION_TOLERANCE) {
        return Err(Error::InvalidTransform { residual, tolerance: CONDITION_TOLERANCE });
    }
    let g = relative_momentum(p, q, c);
    let rs = (g * g + 4.0 * c * c).sqrt();
    let com = lambda.com_residual(p, q, c) / rs;
    if !(com <= CONDITION_TOLERANCE) {
        return Err(Error::InvalidTransform { residual: com, tolerance: CONDITION_TOLERANCE });
    }
    let inv = lambda.inverse();
    let out = |sign: f64| {
        let v = inv.apply([0.5 * rs, 0.5 * sign * g * omega[0], 0.5 * sign * g * omega[1], 0.5 * sign * g * omega[2]]);
        MomentumVec::new3(v[1], v[2], v[3])
    };
    Ok((out(1.0), out(-1.0)))
}

/// The direction on the collision sphere that reproduces the incoming pair under `lambda`.
pub fn identity_direction(lambda: &LorentzMatrix, p: &MomentumVec, q: &MomentumVec, c: f64) -> Result<MomentumVec> {
    require_3d(p, q, c)?;
    let w = lambda.entries * (four(p, c) - four(q, c));
    MomentumVec::new3(w[1], w[2], w[3])
        .normalized()
        .ok_or_else(|| Error::DegenerateCollision("p = q".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_planar_input() {
        let p = MomentumVec::new2(1.0, 0.0);
        assert!(boost_to_com(&p, &p, 1.0).is_err());
    }

    #[test]
    fn post_collision_rejects_non_lorentz_matrix() {
        let mut m = Matrix4::identity();
        m[(1, 1)] = 2.0;
        let lam = LorentzMatrix::custom(m);
        let p = MomentumVec::new3(0.0, 0.0, 0.0);
        let w = MomentumVec::new3(1.0, 0.0, 0.0);
        assert!(matches!(post_collision_via(&lam, &p, &p, &w, 1.0), Err(Error::InvalidTransform { .. })));
    }

    #[test]
    fn hs_is_proper() {
        let p = MomentumVec::new3(0.2, -1.0, 0.7);
        let q = MomentumVec::new3(1.5, 0.3, -0.4);
        let lam = hs_transform_ex3(&p, &q, 2.0).unwrap();
        assert!((lam.entries.determinant() - 1.0).abs() < 1e-10);
    }
}
