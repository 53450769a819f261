//! Desk-scale mild-form solvers on two-dimensional tensor grids.
//!
//! The unknown is the field along characteristics,
//! `f#(t, x, p) = f(t, x + t v(p), p)`, with `v(p) = c p / p0` (relativistic) or
//! `v(p) = p` (Newtonian, `c = f64::INFINITY`). It satisfies
//!
//! `f#(t) = f0 + int_0^t Q#(f, f)(s) ds`,  `Q#(s, x, p) = Q(f(s))(x + s v(p), p)`,
//!
//! which [`picard_solve`] iterates to a fixed point with trapezoidal time
//! quadrature. Every field is stored as its ratio `g = f / rho` to the weight of
//! the run, whose free transport `rho(x - t v(p), p)` is known in closed form.
//! The free transport of analytic initial data is applied exactly; only the
//! ratio of the accumulated collision term is moved between the sharp and the
//! physical grid by bilinear interpolation, so the Gaussian tails of the weight
//! are never interpolated. [`ks_bracket_solve`] runs the
//! monotone lower/upper iteration in exponential form,
//!
//! `l#_{n+1}(t) = f0 e^{-int_0^t R#(u_n)} + int_0^t e^{-int_s^t R#(u_n)} G#(l_n)(s) ds`,
//!
//! and symmetrically for `u`, where `G` is the gain term and `R` the loss rate.
//!
//! The collision integral is discretised on the momentum grid itself: the
//! partner momentum `q` runs over the grid nodes with weight `dp^2`, the angle
//! over `n_omega` equally spaced directions, and the outgoing pair is read off
//! the current ratio by bilinear interpolation in momentum. The weight of the
//! outgoing pair follows from `rho(p') rho(q') = rho(p) rho(q) e^{-alpha t^2 delta}`
//! with `delta` the energy defect of the representation. Pairs whose
//! equilibrium weight falls below a relative truncation threshold are skipped.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use statrs::function::erf::erfc;

use crate::collision_op::{collide, QuadratureSpec, Representation};
use crate::cross_sections::{energy_defect, CrossSection, CutoffParams};
use crate::distributions::{ln_weight_newt, ln_weight_rel, WeightParams};
use crate::error::{domain, Error, Result};
use crate::grid::{shift_row, velocity, FieldGrid, GridGeometry};
use crate::kinematics::p0;
use crate::par;
use crate::quadrature::{gauss_legendre, SphereRule};
use crate::vector::{MomentumVec, Position};

/// Initial data of a solve.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    /// `b rho_c` (or `b rho_inf` for infinite `c`), evaluated analytically.
    Weighted { b: f64, c: f64, weights: WeightParams },
    /// Arbitrary sampled data; transported by interpolation.
    Sampled(FieldGrid),
}

impl InitialData {
    /// Samples the data on `geom`.
    pub fn sample(&self, geom: &GridGeometry) -> FieldGrid {
        self.transported(geom, 0.0, f64::INFINITY)
    }

    /// Free transport `f0(y - t v(p), p)` sampled on `geom`; `c_transport` selects the velocity.
    pub fn transported(&self, geom: &GridGeometry, t: f64, c_transport: f64) -> FieldGrid {
        match self {
            InitialData::Weighted { b, c, weights } => {
                if *b == 0.0 {
                    return FieldGrid::zeros(*geom);
                }
                let (b, c, w) = (*b, *c, *weights);
                FieldGrid::from_fn(*geom, move |y, p| {
                    let v = velocity(p, c_transport);
                    let x = *y - v * t;
                    b * ln_weight(&x, p, c, &w).exp()
                })
            }
            InitialData::Sampled(field) => crate::grid::free_transport(field, t, c_transport),
        }
    }

    /// The transported data divided by the weight `exp(ln_rho)`, computed in log form when possible.
    fn ratio_transported(&self, geom: &GridGeometry, t: f64, c_transport: f64, ln_rho: &[f64]) -> Vec<f64> {
        match self {
            InitialData::Weighted { b, c, weights } => {
                if *b == 0.0 {
                    return vec![0.0; geom.len()];
                }
                let (c, w) = (*c, *weights);
                let ln_data = FieldGrid::from_fn(*geom, move |y, p| ln_weight(&(*y - velocity(p, c_transport) * t), p, c, &w)).values;
                ln_data.iter().zip(ln_rho).map(|(d, r)| if *r < LN_WEIGHT_FLOOR { 0.0 } else { b * (d - r).exp() }).collect()
            }
            InitialData::Sampled(_) => ratio(&self.transported(geom, t, c_transport).values, ln_rho),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            InitialData::Weighted { b, .. } => *b == 0.0,
            InitialData::Sampled(f) => f.values.iter().all(|v| *v == 0.0),
        }
    }
}

impl From<FieldGrid> for InitialData {
    fn from(f: FieldGrid) -> Self {
        InitialData::Sampled(f)
    }
}

/// Parameters of a solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    /// Speed of light; `f64::INFINITY` selects the Newtonian equation.
    pub c: f64,
    pub t_final: f64,
    pub n_t: usize,
    pub picard_max: usize,
    /// Stopping tolerance on the successive sup-norm gap of `f# / rho`, relative
    /// to `max f0 / rho` (Kaniel-Shinbrot: on `upper - lower`, relative to `max f0`).
    pub picard_tol: f64,
    pub sigma: CrossSection,
    pub weights: WeightParams,
    pub b: f64,
    /// Only `n_omega` is used; the partner momentum runs over the solver's momentum grid.
    pub quad: QuadratureSpec,
    pub grid: GridGeometry,
    pub representation: Representation,
    /// Pairs `(p, q)` with `J(p)^beta J(q)^beta / J(0)^{2 beta}` below this are skipped.
    pub truncation: f64,
    /// The upper Kaniel-Shinbrot start is this multiple of the transported data.
    pub ks_envelope: f64,
}

impl SolveConfig {
    /// Desk-scale defaults: `T = 1`, 16 time nodes, `24 x 24` position and
    /// momentum grids on `[-5, 5]^2 x [-6, 6]^2`, 16 angles, `b = 1e-3`, hard
    /// spheres with the cut-off `B = 1`, `a = 0.5`.
    pub fn desk(c: f64) -> Self {
        let weights = WeightParams { alpha: 1.0, beta: 1.0 };
        let cutoff = CutoffParams { b: 1.0, a: 0.5, alpha: weights.alpha };
        Self {
            c,
            t_final: 1.0,
            n_t: 16,
            picard_max: 30,
            picard_tol: 1e-7,
            sigma: CrossSection::hard_ball(1.0).with_cutoff(cutoff),
            weights,
            b: 1e-3,
            quad: QuadratureSpec::grid(2, 6.0, 24, 16),
            grid: GridGeometry { dim: 2, x_extent: 5.0, n_x: 24, p_extent: 6.0, n_p: 24 },
            representation: Representation::Gs,
            truncation: 1e-14,
            ks_envelope: 2.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) || self.c.is_nan() {
            return Err(domain("speed of light must be positive (or infinite)"));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(domain("final time T must be positive"));
        }
        if self.n_t < 2 {
            return Err(domain("at least two time nodes are required"));
        }
        if !(self.picard_tol > 0.0) || self.picard_max == 0 {
            return Err(domain("picard_tol must be positive and picard_max at least 1"));
        }
        if !(self.b >= 0.0 && self.b.is_finite()) {
            return Err(domain("amplitude b must be nonnegative"));
        }
        if !(self.truncation >= 0.0 && self.truncation < 1.0) {
            return Err(domain("truncation must lie in [0, 1)"));
        }
        if !(self.ks_envelope >= 1.0) {
            return Err(domain("ks_envelope must be at least 1"));
        }
        if self.quad.n_omega < 2 || self.quad.n_omega % 2 != 0 {
            return Err(domain("the solver needs an even angle count n_omega >= 2"));
        }
        WeightParams::new(self.weights.alpha, self.weights.beta)?;
        if let Some(cut) = &self.sigma.cutoff {
            cut.validate()?;
        }
        self.grid.validate()
    }

    pub fn times(&self) -> Vec<f64> {
        let dt = self.t_final / (self.n_t - 1) as f64;
        (0..self.n_t).map(|k| k as f64 * dt).collect()
    }

    fn dt(&self) -> f64 {
        self.t_final / (self.n_t - 1) as f64
    }
}

/// `b rho_c` (relativistic) or `b rho_inf` (Newtonian) sampled on the grid.
pub fn default_initial_data(cfg: &SolveConfig) -> Result<FieldGrid> {
    cfg.validate()?;
    Ok(weighted_data(cfg).sample(&cfg.grid))
}

/// The analytic form of [`default_initial_data`].
pub fn weighted_data(cfg: &SolveConfig) -> InitialData {
    InitialData::Weighted { b: cfg.b, c: cfg.c, weights: cfg.weights }
}

#[derive(Debug, Clone, Copy)]
struct GainEntry {
    w: f64,
    delta: f64,
    fp: [f32; 2],
    fq: [f32; 2],
    pa: u32,
    qa: u32,
    q: u32,
    gain_on: bool,
}

/// Precomputed discrete collision operator for one speed of light.
struct Stencil {
    geom: GridGeometry,
    /// Entries inside the cut-off set at every position and time, grouped by target momentum.
    offsets: Vec<usize>,
    entries: Vec<GainEntry>,
    /// Loss weights of those entries, `nu[p * n_mom + q]`.
    nu: Vec<f64>,
    /// Entries whose membership depends on position and time.
    cond_offsets: Vec<usize>,
    cond: Vec<GainEntry>,
    cutoff: Option<CutoffParams>,
    c: f64,
    alpha: f64,
    momenta: Vec<MomentumVec>,
}

impl Stencil {
    fn build(cfg: &SolveConfig) -> Result<Self> {
        let geom = cfg.grid;
        let momenta = geom.momenta();
        let n_mom = momenta.len();
        let c = cfg.c;
        let vol = geom.dp() * geom.dp();
        let circle = SphereRule::circle(cfg.quad.n_omega);
        let half = cfg.quad.n_omega / 2;
        let origin = MomentumVec::zeros(2);
        let ln_j: Vec<f64> = momenta.iter().map(|p| ln_weight(&origin, p, c, &cfg.weights)).collect();
        let ln_j0 = ln_weight(&origin, &origin, c, &cfg.weights);
        let ln_cut = if cfg.truncation > 0.0 { cfg.truncation.ln() } else { f64::NEG_INFINITY };
        let cutoff = if c.is_finite() { cfg.sigma.cutoff } else { None };
        let always_bound = cutoff.map(|cut| -cut.b / (cfg.t_final * cfg.t_final));
        let sigma = &cfg.sigma;
        let rep = cfg.representation;

        type Row = (Vec<GainEntry>, Vec<f64>, Vec<GainEntry>);
        let rows: Vec<Result<Row>> = par::map_range(n_mom, |ip| {
            let p = momenta[ip];
            let mut entries = Vec::new();
            let mut nu = vec![0.0; n_mom];
            let mut cond = Vec::new();
            if sigma.is_zero() {
                return Ok((entries, nu, cond));
            }
            for (iq, q) in momenta.iter().enumerate() {
                if ln_j[ip] + ln_j[iq] - 2.0 * ln_j0 < ln_cut {
                    continue;
                }
                for k in 0..half {
                    let w_plus = circle.points[k];
                    let (pp, qp, k1) = collide(rep, &p, q, &w_plus, c, sigma)?;
                    let (_, _, k2) = collide(rep, &p, q, &(-w_plus), c, sigma)?;
                    let w = (k1 + k2) * circle.weights[k] * vol;
                    if w == 0.0 {
                        continue;
                    }
                    let delta = if c.is_finite() { energy_defect(&p, q, &pp, &qp, c) } else { 0.0 };
                    let mut entry = GainEntry { w, delta, fp: [0.0; 2], fq: [0.0; 2], pa: 0, qa: 0, q: iq as u32, gain_on: false };
                    if let (Some((pa, fp)), Some((qa, fq))) = (geom.locate_momentum(&pp), geom.locate_momentum(&qp)) {
                        entry.pa = pa as u32;
                        entry.qa = qa as u32;
                        entry.fp = [fp[0] as f32, fp[1] as f32];
                        entry.fq = [fq[0] as f32, fq[1] as f32];
                        entry.gain_on = true;
                    }
                    match always_bound {
                        Some(bound) if delta < bound => cond.push(entry),
                        _ => {
                            nu[iq] += w;
                            if entry.gain_on {
                                entries.push(entry);
                            }
                        }
                    }
                }
            }
            Ok((entries, nu, cond))
        });
        let mut offsets = vec![0];
        let mut cond_offsets = vec![0];
        let mut entries = Vec::new();
        let mut cond = Vec::new();
        let mut nu = Vec::with_capacity(n_mom * n_mom);
        for r in rows {
            let (e, n, cd) = r?;
            entries.extend(e);
            cond.extend(cd);
            nu.extend(n);
            offsets.push(entries.len());
            cond_offsets.push(cond.len());
        }
        Ok(Self { geom, offsets, entries, nu, cond_offsets, cond, cutoff, c, alpha: cfg.weights.alpha, momenta })
    }

    /// `h(y, s, q)` for every momentum node and position at time `s > 0`.
    fn thresholds(&self, s: f64) -> Option<Vec<f64>> {
        let cut = self.cutoff?;
        if self.cond.is_empty() || s <= 0.0 {
            return None;
        }
        let xs = self.geom.positions();
        let n = xs.len();
        let mut h = vec![0.0; n * self.momenta.len()];
        par::for_each_row(&mut h, n, |iq, row| {
            let q = &self.momenta[iq];
            let vq = velocity(q, self.c);
            let k = cut.a * cut.alpha * p0(q, self.c) / (self.c * s * s);
            for (hv, y) in row.iter_mut().zip(&xs) {
                *hv = cut.b / (s * s) + k * (*y - vq * s).norm_sq();
            }
        });
        Some(h)
    }

    /// Gain divided by the weight, `G(f) / rho_s`, and loss rate `R(f)` at time `s`,
    /// for the physical field `f = rho_s g` given through its ratio `g` and `rho_s`.
    ///
    /// The weight of an outgoing pair is rewritten with the collision-invariant
    /// identity `rho_s(p') rho_s(q') = rho_s(p) rho_s(q) e^{-alpha s^2 delta}`, so
    /// only the smooth ratio is interpolated in momentum.
    fn evaluate(&self, g: &[f64], rho: &[f64], s: f64, gain: &mut [f64], rate: &mut [f64]) {
        let n = self.geom.row_len();
        let np = self.geom.n_p;
        let n_mom = self.momenta.len();
        let thresholds = self.thresholds(s);
        let f: Vec<f64> = g.iter().zip(rho).map(|(a, b)| a * b).collect();
        let g32 = to_single(g);
        let rho32 = to_single(rho);
        let bilinear = |fr: [f32; 2]| {
            let (a, b) = (fr[0], fr[1]);
            [(1.0 - a) * (1.0 - b), (1.0 - a) * b, a * (1.0 - b), a * b]
        };
        let ks = self.alpha * s * s;
        let damp = |list: &[GainEntry]| -> Vec<f32> { list.iter().map(|e| (e.w * (-ks * e.delta).exp()) as f32).collect() };
        let (w_main, w_cond) = (damp(&self.entries), damp(&self.cond));
        let accumulate = |out: &mut [f64], e: &GainEntry, w: f32, mask: Option<&[f64]>| {
            let (pa, qa) = (e.pa as usize, e.qa as usize);
            let a = [row(&g32, pa, n), row(&g32, pa + 1, n), row(&g32, pa + np, n), row(&g32, pa + np + 1, n)];
            let b = [row(&g32, qa, n), row(&g32, qa + 1, n), row(&g32, qa + np, n), row(&g32, qa + np + 1, n)];
            let r = row(&rho32, e.q as usize, n);
            let wa = bilinear(e.fp);
            let wb = bilinear(e.fq);
            match mask {
                None => gain_kernel(out, r, a, b, wa, wb, w),
                Some(h) => gain_kernel_masked(out, r, a, b, wa, wb, w, h, e.delta),
            }
        };
        par::for_each_row(gain, n, |ip, out| {
            out.iter_mut().for_each(|v| *v = 0.0);
            let range = self.offsets[ip]..self.offsets[ip + 1];
            let (list, ws) = (&self.entries[range.clone()], &w_main[range]);
            let mut pair_sum = vec![0.0_f32; n];
            let mut i = 0;
            while i < list.len() {
                let q = list[i].q;
                pair_sum.iter_mut().for_each(|v| *v = 0.0);
                while i < list.len() && list[i].q == q {
                    let e = &list[i];
                    let (pa, qa) = (e.pa as usize, e.qa as usize);
                    let a = [row(&g32, pa, n), row(&g32, pa + 1, n), row(&g32, pa + np, n), row(&g32, pa + np + 1, n)];
                    let b = [row(&g32, qa, n), row(&g32, qa + 1, n), row(&g32, qa + np, n), row(&g32, qa + np + 1, n)];
                    pair_kernel(&mut pair_sum, a, b, bilinear(e.fp), bilinear(e.fq), ws[i]);
                    i += 1;
                }
                for ((o, r), v) in out.iter_mut().zip(row(&rho32, q as usize, n)).zip(&pair_sum) {
                    *o += (r * v) as f64;
                }
            }
            let range = self.cond_offsets[ip]..self.cond_offsets[ip + 1];
            for (e, &w) in self.cond[range.clone()].iter().zip(&w_cond[range]) {
                if e.gain_on {
                    let q = e.q as usize;
                    accumulate(out, e, w, thresholds.as_ref().map(|h| &h[q * n..(q + 1) * n]));
                }
            }
        });
        par::for_each_row(rate, n, |ip, out| {
            out.iter_mut().for_each(|v| *v = 0.0);
            let out = &mut out[..n];
            let nu = &self.nu[ip * n_mom..(ip + 1) * n_mom];
            for (iq, &w) in nu.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                for (o, v) in out.iter_mut().zip(row(&f, iq, n)) {
                    *o += w * v;
                }
            }
            for e in &self.cond[self.cond_offsets[ip]..self.cond_offsets[ip + 1]] {
                let q = e.q as usize;
                let fq = &row(&f, q, n)[..n];
                match &thresholds {
                    None => {
                        for (o, v) in out.iter_mut().zip(fq) {
                            *o += e.w * v;
                        }
                    }
                    Some(h) => {
                        let hq = &h[q * n..(q + 1) * n];
                        for x in 0..n {
                            let on = if e.delta >= -hq[x] { e.w } else { 0.0 };
                            out[x] += on * fq[x];
                        }
                    }
                }
            }
        });
    }

    /// `Q(f) / rho_s = G / rho_s - g R`.
    fn collision_ratio(&self, g: &[f64], rho: &[f64], s: f64) -> Vec<f64> {
        let mut gain = vec![0.0; g.len()];
        let mut rate = vec![0.0; g.len()];
        self.evaluate(g, rho, s, &mut gain, &mut rate);
        for ((out, r), v) in gain.iter_mut().zip(&rate).zip(g) {
            *out -= v * r;
        }
        gain
    }
}

#[inline]
fn row<T>(v: &[T], idx: usize, n: usize) -> &[T] {
    &v[idx * n..(idx + 1) * n]
}

/// `out += w (a . wa)(b . wb)` over one spatial row.
#[inline(never)]
fn pair_kernel(out: &mut [f32], a: [&[f32]; 4], b: [&[f32]; 4], wa: [f32; 4], wb: [f32; 4], w: f32) {
    let n = out.len();
    let (a0, a1, a2, a3) = (&a[0][..n], &a[1][..n], &a[2][..n], &a[3][..n]);
    let (b0, b1, b2, b3) = (&b[0][..n], &b[1][..n], &b[2][..n], &b[3][..n]);
    for x in 0..n {
        let gp = wa[0] * a0[x] + wa[1] * a1[x] + wa[2] * a2[x] + wa[3] * a3[x];
        let gq = wb[0] * b0[x] + wb[1] * b1[x] + wb[2] * b2[x] + wb[3] * b3[x];
        out[x] += w * gp * gq;
    }
}

/// `out += w r (a . wa)(b . wb)` over one spatial row.
#[inline(never)]
fn gain_kernel(out: &mut [f64], r: &[f32], a: [&[f32]; 4], b: [&[f32]; 4], wa: [f32; 4], wb: [f32; 4], w: f32) {
    let n = out.len();
    let r = &r[..n];
    let (a0, a1, a2, a3) = (&a[0][..n], &a[1][..n], &a[2][..n], &a[3][..n]);
    let (b0, b1, b2, b3) = (&b[0][..n], &b[1][..n], &b[2][..n], &b[3][..n]);
    for x in 0..n {
        let gp = wa[0] * a0[x] + wa[1] * a1[x] + wa[2] * a2[x] + wa[3] * a3[x];
        let gq = wb[0] * b0[x] + wb[1] * b1[x] + wb[2] * b2[x] + wb[3] * b3[x];
        out[x] += (w * r[x] * gp * gq) as f64;
    }
}

/// [`gain_kernel`] restricted to the positions where `delta >= -h`.
#[allow(clippy::too_many_arguments)]
#[inline(never)]
fn gain_kernel_masked(out: &mut [f64], r: &[f32], a: [&[f32]; 4], b: [&[f32]; 4], wa: [f32; 4], wb: [f32; 4], w: f32, h: &[f64], delta: f64) {
    let n = out.len();
    let (r, h) = (&r[..n], &h[..n]);
    let (a0, a1, a2, a3) = (&a[0][..n], &a[1][..n], &a[2][..n], &a[3][..n]);
    let (b0, b1, b2, b3) = (&b[0][..n], &b[1][..n], &b[2][..n], &b[3][..n]);
    for x in 0..n {
        let on = if delta >= -h[x] { w } else { 0.0 };
        let gp = wa[0] * a0[x] + wa[1] * a1[x] + wa[2] * a2[x] + wa[3] * a3[x];
        let gq = wb[0] * b0[x] + wb[1] * b1[x] + wb[2] * b2[x] + wb[3] * b3[x];
        out[x] += (on * r[x] * gp * gq) as f64;
    }
}

/// Single-precision copy for the gain kernel; values far below the maximum are
/// flushed to zero so that no subnormal arithmetic occurs.
fn to_single(v: &[f64]) -> Vec<f32> {
    let floor = 1e-20 * v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    v.iter().map(|&x| if x.abs() < floor { 0.0 } else { x as f32 }).collect()
}

/// Moves a field between the sharp and the physical grid: `out(x, p) = g(x + sign t v(p), p)`.
fn shift_field(g: &[f64], geom: &GridGeometry, c: f64, t: f64, sign: f64) -> Vec<f64> {
    let n = geom.row_len();
    let mut out = vec![0.0; g.len()];
    if t == 0.0 {
        out.copy_from_slice(g);
        return out;
    }
    par::for_each_row(&mut out, n, |ip, row| {
        let v = velocity(&geom.momentum(ip), c);
        shift_row(&g[ip * n..(ip + 1) * n], geom.n_x, geom.dx(), [sign * t * v[0], sign * t * v[1]], row);
    });
    out
}

/// Below this log-weight a ratio `f / rho` is treated as zero.
const LN_WEIGHT_FLOOR: f64 = -700.0;

/// `ln rho` of the weight family selected by `c`.
fn ln_weight(x: &Position, p: &MomentumVec, c: f64, weights: &WeightParams) -> f64 {
    if c.is_finite() {
        ln_weight_rel(x, p, c, weights).unwrap_or(f64::NEG_INFINITY)
    } else {
        ln_weight_newt(x, p, weights)
    }
}

/// `ln rho(y - t v(p), p)` on the grid: the weight carried along characteristics.
fn ln_weight_transported(geom: &GridGeometry, c: f64, weights: &WeightParams, t: f64) -> Vec<f64> {
    let w = *weights;
    FieldGrid::from_fn(*geom, move |y, p| ln_weight(&(*y - velocity(p, c) * t), p, c, &w)).values
}

fn ratio(f: &[f64], ln_rho: &[f64]) -> Vec<f64> {
    f.iter().zip(ln_rho).map(|(v, l)| if *l < LN_WEIGHT_FLOOR { 0.0 } else { v * (-l).exp() }).collect()
}

/// The solve's weight at every time node, and the data divided by it.
struct Frames {
    ln_sharp: Vec<f64>,
    rho_phys: Vec<Vec<f64>>,
    data_ratio: Vec<Vec<f64>>,
    sharp_ratio0: Vec<f64>,
}

impl Frames {
    fn new(f0: &InitialData, cfg: &SolveConfig, times: &[f64]) -> Self {
        let mut rho_phys = Vec::with_capacity(times.len());
        let mut data_ratio = Vec::with_capacity(times.len());
        for &t in times {
            let ln_rho = ln_weight_transported(&cfg.grid, cfg.c, &cfg.weights, t);
            data_ratio.push(f0.ratio_transported(&cfg.grid, t, cfg.c, &ln_rho));
            rho_phys.push(ln_rho.iter().map(|l| l.exp()).collect());
        }
        let ln_sharp = ln_weight_transported(&cfg.grid, cfg.c, &cfg.weights, 0.0);
        let sharp_ratio0 = data_ratio[0].clone();
        Self { ln_sharp, rho_phys, data_ratio, sharp_ratio0 }
    }
}

/// Trapezoid weight of node `m` in `int_0^{t_k}`.
fn trap_weight(k: usize, m: usize, dt: f64) -> f64 {
    if k == 0 {
        0.0
    } else if m == 0 || m == k {
        0.5 * dt
    } else {
        dt
    }
}

/// A converged Picard solve.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub c: f64,
    pub geom: GridGeometry,
    pub times: Vec<f64>,
    /// `f#` at each time node.
    pub sharp: Vec<FieldGrid>,
    pub iterations: usize,
    /// Successive sup-norm gaps, one per iteration.
    pub gap_trace: Vec<f64>,
    /// `||f#||_c` after each iteration.
    pub norm_trace: Vec<f64>,
    pub final_gap: f64,
    initial: InitialData,
    weights: WeightParams,
    /// `(f# - f0) / rho` at each node.
    collision: Vec<Vec<f64>>,
}

impl Trajectory {
    /// The physical field `f(t_k, y, p)`.
    pub fn physical(&self, k: usize) -> FieldGrid {
        let t = self.times[k];
        let mut out = self.initial.transported(&self.geom, t, self.c);
        if self.collision[k].iter().all(|v| *v == 0.0) {
            return out;
        }
        let ln_rho = ln_weight_transported(&self.geom, self.c, &self.weights, t);
        let moved = shift_field(&self.collision[k], &self.geom, self.c, t, -1.0);
        for ((o, m), l) in out.values.iter_mut().zip(moved).zip(ln_rho) {
            *o += m * l.exp();
        }
        out
    }

    pub fn final_physical(&self) -> FieldGrid {
        self.physical(self.times.len() - 1)
    }

    pub fn initial(&self) -> &InitialData {
        &self.initial
    }
}

fn check_initial(f0: &InitialData, cfg: &SolveConfig) -> Result<()> {
    cfg.validate()?;
    match f0 {
        InitialData::Sampled(g) => {
            if g.geom != cfg.grid {
                return Err(domain("initial data grid differs from the solver grid"));
            }
            if g.min() < 0.0 {
                return Err(domain("initial data must be nonnegative"));
            }
        }
        InitialData::Weighted { b, c, .. } => {
            if !(*b >= 0.0 && b.is_finite()) || !(*c > 0.0) {
                return Err(domain("weighted data needs b >= 0 and c > 0"));
            }
        }
    }
    Ok(())
}

/// Picard iteration of the sharp mild form, carried out on `f / rho`.
pub fn picard_solve(f0: &InitialData, cfg: &SolveConfig) -> Result<Trajectory> {
    check_initial(f0, cfg)?;
    let geom = cfg.grid;
    let times = cfg.times();
    let nt = cfg.n_t;
    let dt = cfg.dt();
    let sharp0 = f0.sample(&geom);
    let frames = Frames::new(f0, cfg, &times);
    let scale = frames.sharp_ratio0.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let zero_run = f0.is_zero() || cfg.sigma.is_zero();
    let mut collision = vec![vec![0.0; geom.len()]; nt];
    let mut gap_trace = Vec::new();
    let mut norm_trace = Vec::new();
    let mut iterations = 0;
    let mut final_gap = 0.0;
    if !zero_run {
        let stencil = Stencil::build(cfg)?;
        let mut q_sharp = vec![Vec::new(); nt];
        q_sharp[0] = stencil.collision_ratio(&frames.data_ratio[0], &frames.rho_phys[0], 0.0);
        let tol = cfg.picard_tol * scale;
        loop {
            iterations += 1;
            for m in 1..nt {
                let moved = shift_field(&collision[m], &geom, cfg.c, times[m], -1.0);
                let g: Vec<f64> = frames.data_ratio[m].iter().zip(&moved).map(|(a, b)| a + b).collect();
                let q = stencil.collision_ratio(&g, &frames.rho_phys[m], times[m]);
                q_sharp[m] = shift_field(&q, &geom, cfg.c, times[m], 1.0);
            }
            let mut gap = 0.0_f64;
            for k in 1..nt {
                let mut next = vec![0.0; geom.len()];
                for (m, qm) in q_sharp.iter().enumerate().take(k + 1) {
                    let w = trap_weight(k, m, dt);
                    for (n, q) in next.iter_mut().zip(qm) {
                        *n += w * q;
                    }
                }
                let diff = next.iter().zip(&collision[k]).fold(0.0_f64, |g, (a, b)| g.max((a - b).abs()));
                gap = gap.max(diff);
                collision[k] = next;
            }
            gap_trace.push(gap);
            norm_trace.push(ratio_norm(&frames.sharp_ratio0, &collision));
            final_gap = gap;
            if !gap.is_finite() {
                return Err(Error::Divergence { c: cfg.c, iterations, last_gap: gap });
            }
            if gap <= tol {
                break;
            }
            let growing = gap_trace.len() >= 3 && gap >= gap_trace[gap_trace.len() - 2];
            if growing || iterations >= cfg.picard_max {
                return Err(Error::Divergence { c: cfg.c, iterations, last_gap: gap });
            }
        }
    } else {
        norm_trace.push(ratio_norm(&frames.sharp_ratio0, &collision));
    }
    let rho_sharp: Vec<f64> = frames.ln_sharp.iter().map(|l| l.exp()).collect();
    let sharp = collision
        .iter()
        .map(|cl| FieldGrid { geom, values: sharp0.values.iter().zip(cl).zip(&rho_sharp).map(|((a, b), r)| a + b * r).collect() })
        .collect();
    Ok(Trajectory {
        c: cfg.c,
        geom,
        times,
        sharp,
        iterations,
        gap_trace,
        norm_trace,
        final_gap,
        initial: f0.clone(),
        weights: cfg.weights,
        collision,
    })
}

fn ratio_norm(data: &[f64], collision: &[Vec<f64>]) -> f64 {
    collision.iter().map(|cl| data.iter().zip(cl).fold(0.0_f64, |m, (a, b)| m.max((a + b).abs()))).fold(0.0, f64::max)
}

/// `max_k max_{x,p} |f#(t_k, x, p)| / rho(x, p)` with the weight of the solve's `c`.
///
/// Nodes where the weight underflows (`ln rho < -700`) are skipped.
pub fn weighted_sup_norm(traj: &Trajectory, cfg: &SolveConfig) -> f64 {
    let ln_rho = ln_weight_transported(&cfg.grid, cfg.c, &cfg.weights, 0.0);
    traj.sharp.iter().map(|f| ratio(&f.values, &ln_rho).iter().fold(0.0_f64, |m, v| m.max(v.abs()))).fold(0.0, f64::max)
}

/// Outcome of the Kaniel-Shinbrot iteration. Fields are sharp (`f#`).
#[derive(Debug, Clone)]
pub struct KsBracket {
    pub lower: Vec<FieldGrid>,
    pub upper: Vec<FieldGrid>,
    /// `max_k sup |upper - lower|`.
    pub gap: f64,
    pub sweeps: usize,
    pub gap_trace: Vec<f64>,
    /// Smallest lower-bound value over all nodes.
    pub min_lower: f64,
}

impl KsBracket {
    /// Largest amount by which `traj` escapes the bracket.
    pub fn bracket_violation(&self, traj: &Trajectory) -> f64 {
        let mut worst = 0.0_f64;
        for k in 0..self.lower.len() {
            for ((l, u), f) in self.lower[k].values.iter().zip(&self.upper[k].values).zip(&traj.sharp[k].values) {
                worst = worst.max(l - f).max(f - u);
            }
        }
        worst
    }
}

/// A bracket iterate `(f0 (1 + e) + rho d)` in sharp variables.
#[derive(Clone)]
struct KsIterate {
    e: Vec<Vec<f64>>,
    d: Vec<Vec<f64>>,
}

impl KsIterate {
    fn constant(nt: usize, len: usize, e: f64) -> Self {
        Self { e: vec![vec![e; len]; nt], d: vec![vec![0.0; len]; nt] }
    }

    /// `f# / rho` at node `k`.
    fn sharp_ratio(&self, k: usize, data: &[f64]) -> Vec<f64> {
        data.iter().zip(&self.e[k]).zip(&self.d[k]).map(|((a, e), d)| a * (1.0 + e) + d).collect()
    }

    /// `f / rho_t` on the physical grid at node `k`.
    fn physical_ratio(&self, k: usize, frames: &Frames, cfg: &SolveConfig, t: f64) -> Vec<f64> {
        let e = shift_field(&self.e[k], &cfg.grid, cfg.c, t, -1.0);
        let d = shift_field(&self.d[k], &cfg.grid, cfg.c, t, -1.0);
        frames.data_ratio[k].iter().zip(e).zip(d).map(|((a, e), d)| a * (1.0 + e) + d).collect()
    }
}

/// Kaniel-Shinbrot monotone iteration from `lower = 0`, `upper = ks_envelope * f0`.
pub fn ks_bracket_solve(f0: &InitialData, cfg: &SolveConfig) -> Result<KsBracket> {
    check_initial(f0, cfg)?;
    let geom = cfg.grid;
    let len = geom.len();
    let times = cfg.times();
    let nt = cfg.n_t;
    let dt = cfg.dt();
    let frames = Frames::new(f0, cfg, &times);
    let rho_sharp: Vec<f64> = frames.ln_sharp.iter().map(|l| l.exp()).collect();
    let scale = f0.sample(&geom).max_abs();
    let wrap = |it: &KsIterate| -> Vec<FieldGrid> {
        (0..nt)
            .map(|k| FieldGrid { geom, values: it.sharp_ratio(k, &frames.sharp_ratio0).iter().zip(&rho_sharp).map(|(a, r)| a * r).collect() })
            .collect()
    };
    if f0.is_zero() || cfg.sigma.is_zero() {
        let fields = vec![f0.sample(&geom); nt];
        let min_lower = fields.iter().map(FieldGrid::min).fold(f64::INFINITY, f64::min);
        return Ok(KsBracket { lower: fields.clone(), upper: fields, gap: 0.0, sweeps: 0, gap_trace: vec![0.0], min_lower });
    }
    let stencil = Stencil::build(cfg)?;
    let mut lower = KsIterate::constant(nt, len, -1.0);
    let mut upper = KsIterate::constant(nt, len, cfg.ks_envelope - 1.0);
    let tol = cfg.picard_tol * scale;
    let round = 1e-12 * scale;
    let mut gap_trace = Vec::new();
    let mut sweeps = 0;
    loop {
        sweeps += 1;
        let mut gl = Vec::with_capacity(nt);
        let mut rl = Vec::with_capacity(nt);
        let mut gu = Vec::with_capacity(nt);
        let mut ru = Vec::with_capacity(nt);
        for (m, &t) in times.iter().enumerate() {
            for (it, g_out, r_out) in [(&lower, &mut gl, &mut rl), (&upper, &mut gu, &mut ru)] {
                let g = it.physical_ratio(m, &frames, cfg, t);
                let mut gain = vec![0.0; len];
                let mut rate = vec![0.0; len];
                if g.iter().any(|v| *v != 0.0) {
                    stencil.evaluate(&g, &frames.rho_phys[m], t, &mut gain, &mut rate);
                }
                g_out.push(shift_field(&gain, &geom, cfg.c, t, 1.0));
                r_out.push(shift_field(&rate, &geom, cfg.c, t, 1.0));
            }
        }
        let next_lower = exponential_step(&ru, &gl, nt, dt);
        let next_upper = exponential_step(&rl, &gu, nt, dt);
        let mut violation = 0.0_f64;
        let mut gap = 0.0_f64;
        for k in 0..nt {
            let data = &frames.sharp_ratio0;
            let (l0, l1) = (lower.sharp_ratio(k, data), next_lower.sharp_ratio(k, data));
            let (u0, u1) = (upper.sharp_ratio(k, data), next_upper.sharp_ratio(k, data));
            for i in 0..len {
                let r = rho_sharp[i];
                violation = violation.max(r * (l0[i] - l1[i])).max(r * (l1[i] - u1[i])).max(r * (u1[i] - u0[i]));
                gap = gap.max(r * (u1[i] - l1[i]));
            }
        }
        if violation > round || !gap.is_finite() {
            return Err(Error::SmallnessViolation { sweep: sweeps, violation });
        }
        lower = next_lower;
        upper = next_upper;
        gap_trace.push(gap);
        if gap <= tol || sweeps >= cfg.picard_max {
            break;
        }
    }
    let lower_f = wrap(&lower);
    let upper_f = wrap(&upper);
    let min_lower = lower_f.iter().map(FieldGrid::min).fold(f64::INFINITY, f64::min);
    let gap = *gap_trace.last().unwrap_or(&0.0);
    Ok(KsBracket { lower: lower_f, upper: upper_f, gap, sweeps, gap_trace, min_lower })
}

/// One exponential-form update: `e_k = e^{-I_k} - 1`, `d_k = sum_m W_km e^{-(I_k - I_m)} G_m`.
fn exponential_step(rate: &[Vec<f64>], gain: &[Vec<f64>], nt: usize, dt: f64) -> KsIterate {
    let len = rate[0].len();
    let mut integral = vec![vec![0.0; len]; nt];
    for k in 1..nt {
        let (done, rest) = integral.split_at_mut(k);
        for i in 0..len {
            rest[0][i] = done[k - 1][i] + 0.5 * dt * (rate[k - 1][i] + rate[k][i]);
        }
    }
    let e = integral.iter().map(|ik| ik.iter().map(|v| (-v).exp_m1()).collect()).collect();
    let d = (0..nt)
        .map(|k| {
            let mut out = vec![0.0; len];
            for m in 0..=k {
                let w = trap_weight(k, m, dt);
                if w == 0.0 {
                    continue;
                }
                for i in 0..len {
                    out[i] += w * (integral[m][i] - integral[k][i]).exp() * gain[m][i];
                }
            }
            out
        })
        .collect();
    KsIterate { e, d }
}

/// Runs [`picard_solve`] with [`weighted_data`] for every `c`, halving `b` until all converge.
/// Returns the achieved `b` with the trajectories in the order of `c_list`.
pub fn calibrate_b(base: &SolveConfig, c_list: &[f64], max_halvings: usize) -> Result<(f64, Vec<Trajectory>)> {
    let mut b = base.b;
    let mut last_err = None;
    for _ in 0..=max_halvings {
        let runs: Vec<Result<Trajectory>> = par::map_slice(c_list, |&c| {
            let cfg = SolveConfig { c, b, ..base.clone() };
            picard_solve(&weighted_data(&cfg), &cfg)
        });
        if runs.iter().all(|r| r.is_ok()) {
            return Ok((b, runs.into_iter().map(|r| r.expect("checked")).collect()));
        }
        last_err = runs.into_iter().find_map(|r| r.err());
        b *= 0.5;
    }
    Err(last_err.unwrap_or_else(|| domain("calibration failed")))
}

/// Maximum nodal error of transporting sampled data forward by `t` and back,
/// measured on the nodes whose round trip stays inside the box.
pub fn transport_roundtrip_error(data: &InitialData, geom: &GridGeometry, t: f64, c: f64) -> f64 {
    let f = data.sample(geom);
    let forward = crate::grid::free_transport(&f, t, c);
    let back = shift_field(&forward.values, geom, c, t, 1.0);
    let n = geom.row_len();
    let mut worst = 0.0_f64;
    for ip in 0..geom.n_momenta() {
        let v = velocity(&geom.momentum(ip), c);
        let reach = t * v.max_abs() + geom.dx();
        for ix in 0..n {
            let x = geom.position(ix);
            if x.max_abs() + reach > geom.x_extent {
                continue;
            }
            let i = ip * n + ix;
            worst = worst.max((back[i] - f.values[i]).abs());
        }
    }
    worst
}

/// `int_0^inf e^{-alpha |x + s v|^2} ds` by composite Gauss-Legendre quadrature.
pub fn decay_integral_quadrature(x: &Position, v: &MomentumVec, alpha: f64) -> Result<f64> {
    let (speed, s_star, _) = decay_geometry(x, v, alpha)?;
    let width = 1.0 / (alpha.sqrt() * speed);
    let end = s_star.max(0.0) + 12.0 * width;
    let panels = ((end / width).ceil() as usize * 2).max(8);
    let h = end / panels as f64;
    let rule = gauss_legendre(16);
    let mut total = 0.0;
    for k in 0..panels {
        let a = k as f64 * h;
        total += 0.5 * h * rule.integrate(|u| {
            let s = a + 0.5 * h * (u + 1.0);
            (-alpha * (*x + *v * s).norm_sq()).exp()
        });
    }
    Ok(total)
}

/// Closed form `e^{-alpha x_perp^2} sqrt(pi) erfc(sqrt(alpha) u0) / (2 |v| sqrt(alpha))`, `u0 = x.v/|v|`.
pub fn decay_integral_closed(x: &Position, v: &MomentumVec, alpha: f64) -> Result<f64> {
    let (speed, _, perp_sq) = decay_geometry(x, v, alpha)?;
    let u0 = x.dot(v) / speed;
    Ok((-alpha * perp_sq).exp() * PI.sqrt() * erfc(alpha.sqrt() * u0) / (2.0 * speed * alpha.sqrt()))
}

/// The bound `sqrt(pi / alpha) / |v|`.
pub fn decay_integral_bound(v: &MomentumVec, alpha: f64) -> f64 {
    (PI / alpha).sqrt() / v.norm()
}

fn decay_geometry(x: &Position, v: &MomentumVec, alpha: f64) -> Result<(f64, f64, f64)> {
    crate::kinematics::check_pair(x, v)?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(domain("alpha must be positive"));
    }
    let speed = v.norm();
    if speed == 0.0 {
        return Err(domain("relative velocity must be nonzero"));
    }
    let s_star = -x.dot(v) / (speed * speed);
    let perp_sq = (*x + *v * s_star).norm_sq();
    Ok((speed, s_star, perp_sq))
}

/// Layout of a persisted trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryFormat {
    /// Little-endian: magic `RBTRAJ01`, `u32` dimension, `u32` n_t, `u32` n_x,
    /// `u32` n_p, `f64` x extent, `f64` p extent, `n_t` `f64` times, then the
    /// physical field values `[k][p][x]` as `f64`.
    Binary,
    /// Whitespace-separated rows `t x1 x2 p1 p2 value` with a header line.
    Text,
}

/// Writes the physical fields `f(t_k)` of a trajectory.
pub fn write_trajectory(traj: &Trajectory, path: &Path, format: TrajectoryFormat) -> std::io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let g = traj.geom;
    match format {
        TrajectoryFormat::Binary => {
            out.write_all(b"RBTRAJ01")?;
            for v in [g.dim as u32, traj.times.len() as u32, g.n_x as u32, g.n_p as u32] {
                out.write_all(&v.to_le_bytes())?;
            }
            for v in [g.x_extent, g.p_extent] {
                out.write_all(&v.to_le_bytes())?;
            }
            for t in &traj.times {
                out.write_all(&t.to_le_bytes())?;
            }
            for k in 0..traj.times.len() {
                for v in traj.physical(k).values {
                    out.write_all(&v.to_le_bytes())?;
                }
            }
        }
        TrajectoryFormat::Text => {
            writeln!(out, "t x1 x2 p1 p2 value")?;
            let xs = g.positions();
            for (k, t) in traj.times.iter().enumerate() {
                let f = traj.physical(k);
                for ip in 0..g.n_momenta() {
                    let p = g.momentum(ip);
                    for (ix, x) in xs.iter().enumerate() {
                        let v = f.values[ip * g.row_len() + ix];
                        writeln!(out, "{t:.12e} {:.12e} {:.12e} {:.12e} {:.12e} {v:.12e}", x[0], x[1], p[0], p[1])?;
                    }
                }
            }
        }
    }
    out.flush()
}
