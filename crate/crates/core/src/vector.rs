//! Small fixed-capacity Euclidean vectors in two or three dimensions.
//!
//! Spatial momenta, positions and unit directions on the collision sphere all
//! share this type. The dimension is carried at runtime so that a single code
//! path serves both the planar desk-scale solver and the three-dimensional
//! pointwise checks.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub, SubAssign};

use crate::error::{domain, Result};

/// A spatial vector with `dim` in {2, 3} components.
#[derive(Clone, Copy, PartialEq)]
pub struct MomentumVec {
    comps: [f64; 3],
    dim: usize,
}

/// Positions use the same representation as momenta.
pub type Position = MomentumVec;

impl MomentumVec {
    pub fn new2(a: f64, b: f64) -> Self {
        Self { comps: [a, b, 0.0], dim: 2 }
    }

    pub fn new3(a: f64, b: f64, c: f64) -> Self {
        Self { comps: [a, b, c], dim: 3 }
    }

    pub fn zeros(dim: usize) -> Self {
        debug_assert!(dim == 2 || dim == 3);
        Self { comps: [0.0; 3], dim }
    }

    /// Builds a vector from a slice of length 2 or 3, rejecting non-finite entries.
    pub fn from_slice(values: &[f64]) -> Result<Self> {
        let dim = values.len();
        if dim != 2 && dim != 3 {
            return Err(domain(format!("momentum dimension must be 2 or 3, got {dim}")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(domain("momentum components must be finite"));
        }
        let mut comps = [0.0; 3];
        comps[..dim].copy_from_slice(values);
        Ok(Self { comps, dim })
    }

    /// The unit vector along axis `k`.
    pub fn axis(dim: usize, k: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.comps[k] = 1.0;
        v
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.comps[..self.dim]
    }

    #[inline]
    pub fn set(&mut self, k: usize, value: f64) {
        self.comps[k] = value;
    }

    #[inline]
    pub fn dot(&self, other: &Self) -> f64 {
        self.comps[0] * other.comps[0] + self.comps[1] * other.comps[1] + self.comps[2] * other.comps[2]
    }

    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Three-dimensional cross product (planar vectors are embedded with a zero third component).
    pub fn cross(&self, other: &Self) -> Self {
        let [a1, a2, a3] = self.comps;
        let [b1, b2, b3] = other.comps;
        Self::new3(a2 * b3 - a3 * b2, a3 * b1 - a1 * b3, a1 * b2 - a2 * b1)
    }

    /// Magnitude of the cross product; for planar vectors the scalar determinant.
    #[inline]
    pub fn cross_norm(&self, other: &Self) -> f64 {
        if self.dim == 2 {
            (self.comps[0] * other.comps[1] - self.comps[1] * other.comps[0]).abs()
        } else {
            self.cross(other).norm()
        }
    }

    #[inline]
    pub fn cross_norm_sq(&self, other: &Self) -> f64 {
        let n = self.cross_norm(other);
        n * n
    }

    pub fn is_finite(&self) -> bool {
        self.as_slice().iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.as_slice().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Returns the normalised vector, or `None` for the zero vector.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| *self / n)
    }
}

impl fmt::Debug for MomentumVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.as_slice()).finish()
    }
}

impl Index<usize> for MomentumVec {
    type Output = f64;
    fn index(&self, k: usize) -> &f64 {
        &self.comps[..self.dim][k]
    }
}

impl Add for MomentumVec {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self {
            comps: [self.comps[0] + rhs.comps[0], self.comps[1] + rhs.comps[1], self.comps[2] + rhs.comps[2]],
            dim: self.dim,
        }
    }
}

impl Sub for MomentumVec {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Self {
            comps: [self.comps[0] - rhs.comps[0], self.comps[1] - rhs.comps[1], self.comps[2] - rhs.comps[2]],
            dim: self.dim,
        }
    }
}

impl Mul<f64> for MomentumVec {
    type Output = Self;
    #[inline]
    fn mul(self, k: f64) -> Self {
        Self { comps: [self.comps[0] * k, self.comps[1] * k, self.comps[2] * k], dim: self.dim }
    }
}

impl Mul<MomentumVec> for f64 {
    type Output = MomentumVec;
    #[inline]
    fn mul(self, v: MomentumVec) -> MomentumVec {
        v * self
    }
}

impl Div<f64> for MomentumVec {
    type Output = Self;
    #[inline]
    fn div(self, k: f64) -> Self {
        self * (1.0 / k)
    }
}

impl Neg for MomentumVec {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        self * -1.0
    }
}

impl AddAssign for MomentumVec {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl SubAssign for MomentumVec {
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planar_cross_is_determinant() {
        let a = MomentumVec::new2(1.0, 2.0);
        let b = MomentumVec::new2(3.0, -1.0);
        assert_eq!(a.cross_norm(&b), 7.0);
    }

    #[test]
    fn rejects_bad_slices() {
        assert!(MomentumVec::from_slice(&[1.0]).is_err());
        assert!(MomentumVec::from_slice(&[1.0, f64::NAN]).is_err());
        assert_eq!(MomentumVec::from_slice(&[1.0, 2.0, 3.0]).unwrap(), MomentumVec::new3(1.0, 2.0, 3.0));
    }
}
