//! Quadrature rules: Gauss-Legendre, generalised Gauss-Laguerre and rules on
//! the unit sphere `S^{N-1}`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use statrs::function::gamma::ln_gamma;

use crate::vector::MomentumVec;

/// Nodes and weights of a one-dimensional rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Evaluates `P_n(x)` and `P_n'(x)`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n >= 1, "Gauss-Legendre needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule { nodes, weights }
}

/// Evaluates the generalised Laguerre polynomial `L_n^a(x)` and `L_{n-1}^a(x)`.
fn laguerre(n: usize, alpha: f64, x: f64) -> (f64, f64) {
    let (mut l0, mut l1) = (1.0, 1.0 + alpha - x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let l2 = ((2.0 * kf + 1.0 + alpha - x) * l1 - (kf + alpha) * l0) / (kf + 1.0);
        l0 = l1;
        l1 = l2;
    }
    (l1, l0)
}

/// `n`-point generalised Gauss-Laguerre rule for the weight `x^alpha e^{-x}` on `[0, inf)`.
///
/// Nodes start from the eigenvalues of the Jacobi matrix and are polished by
/// Newton's method; weights use the closed form in terms of `L_n'`.
pub fn gauss_laguerre(n: usize, alpha: f64) -> Rule {
    assert!(n >= 1 && alpha > -1.0);
    let jac = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            2.0 * i as f64 + alpha + 1.0
        } else if i + 1 == j || j + 1 == i {
            let k = i.max(j) as f64;
            (k * (k + alpha)).sqrt()
        } else {
            0.0
        }
    });
    let mut nodes: Vec<f64> = SymmetricEigen::new(jac).eigenvalues.iter().copied().collect();
    nodes.sort_by(f64::total_cmp);
    let nf = n as f64;
    let log_scale = ln_gamma(nf + alpha + 1.0) - ln_gamma(nf + 1.0);
    let mut weights = Vec::with_capacity(n);
    for x in nodes.iter_mut() {
        for _ in 0..20 {
            let (ln, lm) = laguerre(n, alpha, *x);
            let d = (nf * ln - (nf + alpha) * lm) / *x;
            let dx = ln / d;
            *x -= dx;
            if dx.abs() <= 1e-15 * x.abs() {
                break;
            }
        }
        let (ln, lm) = laguerre(n, alpha, *x);
        let d = (nf * ln - (nf + alpha) * lm) / *x;
        weights.push((log_scale - (*x * d * d).ln()).exp());
    }
    Rule { nodes, weights }
}

/// Nodes and weights on the unit sphere `S^{N-1}`; the weights sum to its area.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereRule {
    pub points: Vec<MomentumVec>,
    pub weights: Vec<f64>,
}

impl SphereRule {
    /// `n` equally spaced angles on the circle, offset by half a step.
    pub fn circle(n: usize) -> Self {
        let step = 2.0 * PI / n as f64;
        let points = (0..n)
            .map(|k| {
                let t = (k as f64 + 0.5) * step;
                MomentumVec::new2(t.cos(), t.sin())
            })
            .collect();
        Self { points, weights: vec![step; n] }
    }

    /// Gauss-Legendre in `cos(theta)` times `n_phi` uniform azimuths.
    pub fn product(n_theta: usize, n_phi: usize) -> Self {
        let gl = gauss_legendre(n_theta);
        let step = 2.0 * PI / n_phi as f64;
        let mut points = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        for (&z, &w) in gl.nodes.iter().zip(&gl.weights) {
            let r = (1.0 - z * z).max(0.0).sqrt();
            for k in 0..n_phi {
                let phi = (k as f64 + 0.5) * step;
                points.push(MomentumVec::new3(r * phi.cos(), r * phi.sin(), z));
                weights.push(w * step);
            }
        }
        Self { points, weights }
    }

    /// The default rule: `n` angles in two dimensions, an `n x n` product rule in three.
    pub fn standard(dim: usize, n: usize) -> Self {
        if dim == 2 {
            Self::circle(n)
        } else {
            Self::product(n, n)
        }
    }

    /// Equal-weight Monte-Carlo sample.
    pub fn monte_carlo<R: Rng>(dim: usize, n: usize, rng: &mut R) -> Self {
        let area = sphere_area(dim);
        let points = (0..n).map(|_| random_unit(dim, rng)).collect();
        Self { points, weights: vec![area / n as f64; n] }
    }

    /// Deterministic near-uniform point set (equal angles on the circle, a
    /// Fibonacci lattice on the sphere), equal weights.
    pub fn dense(dim: usize, n: usize) -> Self {
        if dim == 2 {
            return Self::circle(n);
        }
        let golden = PI * (1.0 + 5f64.sqrt());
        let points = (0..n)
            .map(|i| {
                let t = i as f64 + 0.5;
                let z = 1.0 - 2.0 * t / n as f64;
                let r = (1.0 - z * z).max(0.0).sqrt();
                let phi = golden * t;
                MomentumVec::new3(r * phi.cos(), r * phi.sin(), z)
            })
            .collect();
        Self { points, weights: vec![4.0 * PI / n as f64; n] }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Surface area of `S^{N-1}`.
pub fn sphere_area(dim: usize) -> f64 {
    if dim == 2 {
        2.0 * PI
    } else {
        4.0 * PI
    }
}

/// A uniformly distributed unit vector.
pub fn random_unit<R: Rng>(dim: usize, rng: &mut R) -> MomentumVec {
    if dim == 2 {
        let t = rng.gen_range(0.0..2.0 * PI);
        MomentumVec::new2(t.cos(), t.sin())
    } else {
        let z: f64 = rng.gen_range(-1.0..1.0);
        let phi = rng.gen_range(0.0..2.0 * PI);
        let r = (1.0 - z * z).sqrt();
        MomentumVec::new3(r * phi.cos(), r * phi.sin(), z)
    }
}

/// Composite trapezoid weights for `n` equally spaced nodes with spacing `h`.
pub fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n];
    if n > 0 {
        w[0] *= 0.5;
        w[n - 1] *= 0.5;
    }
    if n == 1 {
        w[0] = 0.0;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials() {
        let r = gauss_legendre(8);
        assert!((r.integrate(|x| x.powi(14)) - 2.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn laguerre_moments() {
        let r = gauss_laguerre(32, 1.5);
        let gamma = |a: f64| ln_gamma(a).exp();
        for k in 0..6 {
            let exact = gamma(2.5 + k as f64);
            let got = r.integrate(|x| x.powi(k));
            assert!(((got - exact) / exact).abs() < 1e-12, "k={k}: {got} vs {exact}");
        }
    }

    #[test]
    fn sphere_weights_sum_to_area() {
        let s = SphereRule::product(16, 16);
        assert!((s.weights.iter().sum::<f64>() - 4.0 * PI).abs() < 1e-12);
        let c = SphereRule::circle(32);
        assert!((c.weights.iter().sum::<f64>() - 2.0 * PI).abs() < 1e-12);
    }
}
