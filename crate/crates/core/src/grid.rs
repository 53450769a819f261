//! Tensor-grid samples of phase-space densities `f(x, p)` in two dimensions.
//!
//! Both the position box `[-Lx, Lx]^2` and the momentum box `[-Lp, Lp]^2` are
//! sampled at equally spaced vertices including the endpoints. Values are stored
//! momentum-major: the entry for momentum node `ip = i0 * n_p + i1` and position
//! node `ix = j0 * n_x + j1` lives at `ip * n_x^2 + ix`, so every momentum node
//! owns a contiguous row of spatial values.

use crate::error::{domain, Result};
use crate::vector::{MomentumVec, Position};

/// Shape of a phase-space grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridGeometry {
    pub dim: usize,
    pub x_extent: f64,
    pub n_x: usize,
    pub p_extent: f64,
    pub n_p: usize,
}

impl GridGeometry {
    pub fn new(x_extent: f64, n_x: usize, p_extent: f64, n_p: usize) -> Result<Self> {
        let g = Self { dim: 2, x_extent, n_x, p_extent, n_p };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != 2 {
            return Err(domain("phase-space grids are two-dimensional"));
        }
        if self.n_x < 2 || self.n_p < 2 {
            return Err(domain("grids need at least two nodes per axis"));
        }
        if !(self.x_extent > 0.0 && self.p_extent > 0.0 && self.x_extent.is_finite() && self.p_extent.is_finite()) {
            return Err(domain("grid extents must be positive"));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.x_extent / (self.n_x - 1) as f64
    }

    pub fn dp(&self) -> f64 {
        2.0 * self.p_extent / (self.n_p - 1) as f64
    }

    /// Spatial nodes per momentum row.
    pub fn row_len(&self) -> usize {
        self.n_x * self.n_x
    }

    pub fn n_momenta(&self) -> usize {
        self.n_p * self.n_p
    }

    pub fn len(&self) -> usize {
        self.row_len() * self.n_momenta()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x_coord(&self, j: usize) -> f64 {
        -self.x_extent + j as f64 * self.dx()
    }

    pub fn p_coord(&self, i: usize) -> f64 {
        -self.p_extent + i as f64 * self.dp()
    }

    pub fn position(&self, ix: usize) -> Position {
        MomentumVec::new2(self.x_coord(ix / self.n_x), self.x_coord(ix % self.n_x))
    }

    pub fn momentum(&self, ip: usize) -> MomentumVec {
        MomentumVec::new2(self.p_coord(ip / self.n_p), self.p_coord(ip % self.n_p))
    }

    pub fn positions(&self) -> Vec<Position> {
        (0..self.row_len()).map(|ix| self.position(ix)).collect()
    }

    pub fn momenta(&self) -> Vec<MomentumVec> {
        (0..self.n_momenta()).map(|ip| self.momentum(ip)).collect()
    }

    /// Locates `p` for bilinear interpolation: base node and fractional offsets.
    /// Returns `None` outside the box.
    pub fn locate_momentum(&self, p: &MomentumVec) -> Option<(usize, [f64; 2])> {
        let h = self.dp();
        let mut idx = [0usize; 2];
        let mut frac = [0.0; 2];
        for k in 0..2 {
            let u = (p[k] + self.p_extent) / h;
            if !(u >= 0.0 && u <= (self.n_p - 1) as f64) {
                return None;
            }
            let i = (u.floor() as usize).min(self.n_p - 2);
            idx[k] = i;
            frac[k] = u - i as f64;
        }
        Some((idx[0] * self.n_p + idx[1], frac))
    }
}

/// A sampled phase-space density.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub geom: GridGeometry,
    pub values: Vec<f64>,
}

impl FieldGrid {
    pub fn zeros(geom: GridGeometry) -> Self {
        Self { geom, values: vec![0.0; geom.len()] }
    }

    pub fn from_fn(geom: GridGeometry, f: impl Fn(&Position, &MomentumVec) -> f64 + Sync + Send) -> Self {
        let xs = geom.positions();
        let rows = crate::par::map_range(geom.n_momenta(), |ip| {
            let p = geom.momentum(ip);
            xs.iter().map(|x| f(x, &p)).collect::<Vec<f64>>()
        });
        Self { geom, values: rows.concat() }
    }

    pub fn from_values(geom: GridGeometry, values: Vec<f64>) -> Result<Self> {
        geom.validate()?;
        if values.len() != geom.len() {
            return Err(domain(format!("expected {} grid values, got {}", geom.len(), values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(domain("grid values must be finite"));
        }
        Ok(Self { geom, values })
    }

    pub fn row(&self, ip: usize) -> &[f64] {
        let n = self.geom.row_len();
        &self.values[ip * n..(ip + 1) * n]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self { geom: self.geom, values: self.values.iter().map(|v| v * k).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Self { geom: self.geom, values }
    }
}

/// Writes `src(x + d)` into `out` for one spatial row by bilinear interpolation;
/// points whose shifted position leaves the box receive zero.
pub fn shift_row(src: &[f64], n_x: usize, dx: f64, d: [f64; 2], out: &mut [f64]) {
    let s0 = d[0] / dx;
    let s1 = d[1] / dx;
    let (k0, k1) = (s0.floor(), s1.floor());
    let (a0, a1) = (s0 - k0, s1 - k1);
    let (k0, k1) = (k0 as i64, k1 as i64);
    let n = n_x as i64;
    let w = [(1.0 - a0) * (1.0 - a1), (1.0 - a0) * a1, a0 * (1.0 - a1), a0 * a1];
    let at = |j0: i64, j1: i64| -> f64 {
        if j0 < 0 || j1 < 0 || j0 >= n || j1 >= n {
            0.0
        } else {
            src[(j0 * n + j1) as usize]
        }
    };
    for j0 in 0..n {
        let base0 = j0 + k0;
        for j1 in 0..n {
            let base1 = j1 + k1;
            let target = (j0 * n + j1) as usize;
            let inside_lo = base0 >= 0 && base1 >= 0;
            let inside_hi = (a0 == 0.0 && base0 <= n - 1 || base0 < n - 1) && (a1 == 0.0 && base1 <= n - 1 || base1 < n - 1);
            if !(inside_lo && inside_hi) {
                out[target] = 0.0;
                continue;
            }
            out[target] = w[0] * at(base0, base1) + w[1] * at(base0, base1 + 1) + w[2] * at(base0 + 1, base1) + w[3] * at(base0 + 1, base1 + 1);
        }
    }
}

/// Free transport `f(x - t v(p), p)` of a sampled field by interpolation, with
/// `v(p)` the normalised velocity at speed of light `c` (identity for infinite `c`).
pub fn free_transport(field: &FieldGrid, t: f64, c: f64) -> FieldGrid {
    let geom = field.geom;
    let n = geom.row_len();
    let mut out = vec![0.0; geom.len()];
    crate::par::for_each_row(&mut out, n, |ip, row| {
        let v = velocity(&geom.momentum(ip), c);
        shift_row(field.row(ip), geom.n_x, geom.dx(), [-t * v[0], -t * v[1]], row);
    });
    FieldGrid { geom, values: out }
}

/// `c p / p0`, or `p` when `c` is infinite.
#[inline]
pub fn velocity(p: &MomentumVec, c: f64) -> MomentumVec {
    if c.is_finite() {
        crate::kinematics::normalized_velocity(p, c)
    } else {
        *p
    }
}
