//! Tensor-grid quadrature of small (`d ≤ 3`) spike-and-slab posteriors.
//!
//! Every inclusion pattern `δ` gets its own grid. The exact posterior lives
//! on `ℝ^d_δ`, so only its active coordinates are integrated; the smoothed
//! posteriors live on all of `ℝ^d`. Each axis is a composite Gauss–Legendre
//! rule with a panel boundary at `0` whenever it lies inside the range, so
//! the kink of `|θ_j|` never falls inside a panel.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linmodel::{log_prior_delta, HyperState, LinearModel};
use crate::mask::InclusionMask;
use crate::prox::PriorSpec;

/// Which posterior to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Which {
    /// `π_δ e^{-h(θ|δ)}` on `ℝ^d_δ`.
    Exact,
    /// `π_δ (2πγ)^{‖δ‖₀/2} e^{-h_γ(θ|δ)}` on `ℝ^d`.
    MyApprox,
    /// `π_δ (2πγ)^{-(d-‖δ‖₀)/2} e^{-‖θ-θ_δ‖²/(2γ)} e^{-h(θ_δ|δ)}` on `ℝ^d`.
    Tilde,
}

const MAX_DIM: usize = 3;

fn default_ladder(d: usize) -> Vec<usize> {
    match d {
        0 | 1 => vec![32, 64, 128, 256, 512, 1024],
        2 => vec![32, 64, 128, 256, 512],
        _ => vec![24, 48, 96],
    }
}
const REFINE_TOL: f64 = 1e-6;
const LEAK_TOL: f64 = 1e-4;
const LEAK_TARGET: f64 = 1e-7;
const EDGE_BAND: f64 = 0.05;
const WIDEN: f64 = 1.5;
const MAX_WIDEN: usize = 8;
/// Node masses below this are skipped when taking expectations.
const NEGLIGIBLE: f64 = 1e-20;

/// Knobs for [`quad_posterior`].
#[derive(Debug, Clone, PartialEq)]
pub struct QuadOptions {
    /// Resolutions (nodes per axis) tried in order; `None` picks a default
    /// ladder by dimension.
    pub ladder: Option<Vec<usize>>,
    /// Integrate only this pattern (its weight is then 1).
    pub only_delta: Option<InclusionMask>,
    /// Axis ranges per coordinate, replacing the automatic ones. Only
    /// meaningful for the full-dimensional posteriors.
    pub bounds: Option<Vec<(f64, f64)>>,
    /// Half-width in pilot standard deviations.
    pub width_sd: f64,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { ladder: None, only_delta: None, bounds: None, width_sd: 8.0 }
    }
}

/// One 1-D composite Gauss–Legendre rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

const GL_ORDER: usize = 8;

/// Nodes and weights of the `m`-point Gauss–Legendre rule on `[-1, 1]`
/// (Golub–Welsch).
fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let jac = DMatrix::from_fn(m, m, |i, j| {
        let k = i.max(j) as f64;
        if i.abs_diff(j) == 1 {
            k / (4.0 * k * k - 1.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = jac.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..m)
        .map(|i| (eig.eigenvalues[i], 2.0 * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

impl Axis {
    /// About `res` nodes on `[lo, hi]`, with a panel boundary at `0` if it
    /// is interior.
    pub fn gauss(lo: f64, hi: f64, res: usize) -> Self {
        Self::gauss_with_breaks(lo, hi, res, &[0.0])
    }

    /// Like [`Axis::gauss`] with panel boundaries at every interior `breaks`.
    pub fn gauss_with_breaks(lo: f64, hi: f64, res: usize, breaks: &[f64]) -> Self {
        let (gx, gw) = gauss_legendre(GL_ORDER);
        let mut cuts = vec![lo];
        let mut inner: Vec<f64> = breaks.iter().cloned().filter(|&b| lo < b && b < hi).collect();
        inner.sort_by(f64::total_cmp);
        inner.dedup();
        cuts.extend(inner);
        cuts.push(hi);
        let panels = (res / GL_ORDER).max(cuts.len() - 1);
        let len = hi - lo;
        let mut nodes = Vec::with_capacity(panels * GL_ORDER + GL_ORDER);
        let mut weights = Vec::with_capacity(nodes.capacity());
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let m = ((panels as f64 * (b - a) / len).round() as usize).max(1);
            let h = (b - a) / m as f64;
            for p in 0..m {
                let mid = a + (p as f64 + 0.5) * h;
                for (x, wt) in gx.iter().zip(&gw) {
                    nodes.push(mid + 0.5 * h * x);
                    weights.push(0.5 * h * wt);
                }
            }
        }
        Self { lo, hi, nodes, weights }
    }
}

/// The grid and normalized conditional masses for one pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub delta: InclusionMask,
    /// Coordinates that vary on this grid.
    pub dims: Vec<usize>,
    pub axes: Vec<Axis>,
    /// Probability of each tensor node under `θ | δ`; sums to 1.
    pub mass: Vec<f64>,
    /// `log` of the unnormalized pattern weight.
    pub log_mass: f64,
    /// Normalized pattern weight.
    pub weight: f64,
    /// Fraction of conditional mass in the outer band of any axis.
    pub leak: f64,
    /// When set, grid coordinates are `u = θ - γ∇ℓ(θ)` rather than `θ`.
    pub shear: Option<Shear>,
}

/// The affine map `θ = A u + c` back from gradient-step coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shear {
    a: [[f64; MAX_DIM]; MAX_DIM],
    c: [f64; MAX_DIM],
    /// `log |det A|`.
    log_jac: f64,
}

impl Panel {
    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    /// Full-length `θ` at node `i`.
    pub fn point(&self, i: usize, d: usize, out: &mut [f64]) {
        self.grid_point(i, d, out);
        if let Some(sh) = &self.shear {
            let mut u = [0.0; MAX_DIM];
            u[..d].copy_from_slice(&out[..d]);
            for r in 0..d {
                out[r] = sh.c[r] + (0..d).map(|k| sh.a[r][k] * u[k]).sum::<f64>();
            }
        }
    }

    /// Grid coordinates of node `i`, before any change of variables.
    fn grid_point(&self, i: usize, d: usize, out: &mut [f64]) {
        out[..d].iter_mut().for_each(|v| *v = 0.0);
        let mut rest = i;
        for (axis, &k) in self.axes.iter().zip(&self.dims).rev() {
            let n = axis.nodes.len();
            out[k] = axis.nodes[rest % n];
            rest /= n;
        }
    }

    /// `E[f(θ) | δ]`.
    pub fn expect(&self, d: usize, f: &mut dyn FnMut(&[f64]) -> f64) -> f64 {
        let mut p = [0.0; MAX_DIM];
        let mut s = 0.0;
        for (i, &m) in self.mass.iter().enumerate() {
            if m < NEGLIGIBLE {
                continue;
            }
            self.point(i, d, &mut p);
            s += m * f(&p[..d]);
        }
        s
    }

    /// `E[f(θ) | δ]` for a vector-valued `f`, added into `acc` with weight
    /// `scale`.
    pub fn expect_into(&self, d: usize, scale: f64, f: &mut dyn FnMut(&[f64], &mut [f64]), acc: &mut [f64]) {
        let mut p = [0.0; MAX_DIM];
        let mut buf = vec![0.0; acc.len()];
        for (i, &m) in self.mass.iter().enumerate() {
            if m < NEGLIGIBLE {
                continue;
            }
            self.point(i, d, &mut p);
            f(&p[..d], &mut buf);
            let w = scale * m;
            acc.iter_mut().zip(&buf).for_each(|(a, b)| *a += w * b);
        }
    }
}

/// A posterior over `(δ, θ)` tabulated on per-pattern grids.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraturePosterior {
    pub which: Which,
    pub d: usize,
    pub gamma: Option<f64>,
    pub panels: Vec<Panel>,
    /// `log Σ_δ exp(log_mass)`.
    pub log_normalizer: f64,
    /// Nodes per axis at the accepted resolution.
    pub resolution: usize,
    /// Σ|Δw| of the pattern weights between the last two resolutions.
    pub refinement_delta: f64,
}

impl QuadraturePosterior {
    pub fn delta_weights(&self) -> Vec<(InclusionMask, f64)> {
        self.panels.iter().map(|p| (p.delta.clone(), p.weight)).collect()
    }

    /// Pattern probabilities indexed by [`InclusionMask::code`]; patterns
    /// that were not integrated get 0.
    pub fn delta_probs_by_code(&self) -> Vec<f64> {
        let mut out = vec![0.0; 1 << self.d];
        for p in &self.panels {
            out[p.delta.code() as usize] = p.weight;
        }
        out
    }

    pub fn inclusion_probs(&self) -> Vec<f64> {
        (0..self.d)
            .map(|j| self.panels.iter().filter(|p| p.delta.get(j)).map(|p| p.weight).sum())
            .collect()
    }

    /// `E[f(δ, θ)]`.
    pub fn expect(&self, f: &mut dyn FnMut(&InclusionMask, &[f64]) -> f64) -> f64 {
        self.panels
            .iter()
            .map(|p| {
                if p.weight == 0.0 {
                    0.0
                } else {
                    p.weight * p.expect(self.d, &mut |t| f(&p.delta, t))
                }
            })
            .sum()
    }

    /// `E[f(δ, θ)]` for a vector-valued `f` with `len` outputs.
    pub fn expect_many(&self, len: usize, f: &mut dyn FnMut(&InclusionMask, &[f64], &mut [f64])) -> Vec<f64> {
        let mut acc = vec![0.0; len];
        for p in &self.panels {
            if p.weight > 0.0 {
                p.expect_into(self.d, p.weight, &mut |t, out| f(&p.delta, t, out), &mut acc);
            }
        }
        acc
    }

    pub fn theta_mean(&self) -> Vec<f64> {
        (0..self.d).map(|j| self.expect(&mut |_, t| t[j])).collect()
    }

    pub fn theta_second_moment(&self) -> Vec<f64> {
        (0..self.d).map(|j| self.expect(&mut |_, t| t[j] * t[j])).collect()
    }

    /// Largest per-pattern edge leakage.
    pub fn max_leak(&self) -> f64 {
        self.panels.iter().map(|p| p.leak).fold(0.0, f64::max)
    }
}

/// The quadratic loss and elastic-net prior in fixed small storage.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SmallProblem {
    pub d: usize,
    h: [[f64; MAX_DIM]; MAX_DIM],
    b: [f64; MAX_DIM],
    c: f64,
    pub prior: PriorSpec,
    pub log_z: f64,
    pub q: f64,
    pub gamma: f64,
}

impl SmallProblem {
    pub fn new(model: &LinearModel, phi: &HyperState, gamma: f64) -> Result<Self> {
        let d = model.data().d();
        if d > MAX_DIM {
            return Err(Error::Unsupported(format!("quadrature needs d <= {MAX_DIM}, got {d}")));
        }
        let s2 = model.sigma2();
        let mut h = [[0.0; MAX_DIM]; MAX_DIM];
        let mut b = [0.0; MAX_DIM];
        for i in 0..d {
            b[i] = model.xtz()[i] / s2;
            for j in 0..d {
                h[i][j] = model.gram()[(i, j)] / s2;
            }
        }
        let c = model.data().z().norm_squared() / (2.0 * s2);
        Ok(Self { d, h, b, c, prior: phi.prior(s2), log_z: phi.log_z(s2)?, q: phi.q, gamma })
    }

    pub fn loss_grad(&self, t: &[f64]) -> (f64, [f64; MAX_DIM]) {
        let mut g = [0.0; MAX_DIM];
        let mut quad = 0.0;
        let mut lin = 0.0;
        for i in 0..self.d {
            let mut hi = 0.0;
            for j in 0..self.d {
                hi += self.h[i][j] * t[j];
            }
            g[i] = hi - self.b[i];
            quad += t[i] * hi;
            lin += t[i] * self.b[i];
        }
        (self.c - lin + 0.5 * quad, g)
    }

    /// `h(θ_δ|δ)` for `θ` already in `ℝ^d_δ`.
    pub fn h_exact(&self, t: &[f64], delta: &InclusionMask) -> f64 {
        let (l, _) = self.loss_grad(t);
        let mut p = 0.0;
        for j in 0..self.d {
            if delta.get(j) {
                p += self.prior.neg_log_prior(t[j]) + self.log_z;
            }
        }
        l + p
    }

    pub fn h_gamma(&self, t: &[f64], delta: &InclusionMask) -> f64 {
        let (l, g) = self.loss_grad(t);
        let gm = self.gamma;
        let mut v = l;
        for k in 0..self.d {
            let jk = if delta.get(k) {
                let s = self.prior.shrink(gm, t[k] - gm * g[k]);
                v += self.prior.neg_log_prior(s) + self.log_z;
                s
            } else {
                0.0
            };
            let step = jk - t[k];
            v += g[k] * step + step * step / (2.0 * gm);
        }
        v
    }

    pub fn log_density(&self, which: Which, t: &[f64], delta: &InclusionMask) -> f64 {
        let k = delta.count();
        let lp = log_prior_delta(k, self.d, self.q);
        let l2pg = (2.0 * std::f64::consts::PI * self.gamma).ln();
        match which {
            Which::Exact => lp - self.h_exact(t, delta),
            Which::MyApprox => lp + 0.5 * k as f64 * l2pg - self.h_gamma(t, delta),
            Which::Tilde => {
                let mut td = [0.0; MAX_DIM];
                let mut off = 0.0;
                for j in 0..self.d {
                    if delta.get(j) {
                        td[j] = t[j];
                    } else {
                        off += t[j] * t[j];
                    }
                }
                lp - 0.5 * (self.d - k) as f64 * l2pg - off / (2.0 * self.gamma) - self.h_exact(&td[..self.d], delta)
            }
        }
    }

    /// `r_γ(δ, θ) = ⟨∇ℓ(θ) - ∇ℓ(θ_δ), θ - θ_δ⟩ + (γ/2)‖δ·(∇ℓ(θ) + g(θ_δ))‖²`.
    pub fn r_gamma(&self, t: &[f64], delta: &InclusionMask) -> f64 {
        let mut td = [0.0; MAX_DIM];
        for j in 0..self.d {
            if delta.get(j) {
                td[j] = t[j];
            }
        }
        let (_, g) = self.loss_grad(t);
        let (_, gd) = self.loss_grad(&td[..self.d]);
        let mut inner = 0.0;
        let mut norm = 0.0;
        for j in 0..self.d {
            inner += (g[j] - gd[j]) * (t[j] - td[j]);
            if delta.get(j) {
                let v = g[j] + self.prior.subgradient(td[j]);
                norm += v * v;
            }
        }
        inner + 0.5 * self.gamma * norm
    }

    /// `θ = (I - γH)⁻¹(u - γb)`, inverting the gradient step.
    fn shear(&self) -> Shear {
        let d = self.d;
        let m = DMatrix::from_fn(d, d, |i, j| if i == j { 1.0 } else { 0.0 } - self.gamma * self.h[i][j]);
        let det = m.determinant();
        let inv = m.try_inverse().expect("I - γH is positive definite under the step rule");
        let mut a = [[0.0; MAX_DIM]; MAX_DIM];
        let mut c = [0.0; MAX_DIM];
        for i in 0..d {
            for j in 0..d {
                a[i][j] = inv[(i, j)];
                c[i] -= inv[(i, j)] * self.gamma * self.b[j];
            }
        }
        Shear { a, c, log_jac: -det.ln() }
    }

    /// Mode of `h(·|δ)` over the active coordinates by proximal gradient,
    /// and per-coordinate spreads from a Laplace-type curvature.
    fn pilot(&self, delta: &InclusionMask) -> (Vec<f64>, Vec<f64>) {
        let act = delta.active();
        let d = self.d;
        if act.is_empty() {
            return (vec![0.0; d], vec![0.0; d]);
        }
        let (l1, l2) = match self.prior {
            PriorSpec::ElasticNet { alpha, lambda1, lambda2, sigma2 } => {
                (alpha * lambda1 / sigma2, (1.0 - alpha) * lambda2 / sigma2)
            }
            other => (other.slope_at_zero(), 0.0),
        };
        let k = act.len();
        let mut p = DMatrix::zeros(k, k);
        for (a, &i) in act.iter().enumerate() {
            for (b, &j) in act.iter().enumerate() {
                p[(a, b)] = self.h[i][j];
            }
            p[(a, a)] += l2 + 0.5 * l1 * l1 + 1e-12;
        }
        let lip = p.clone().symmetric_eigen().eigenvalues.iter().cloned().fold(1e-12, f64::max);
        let step = 1.0 / lip;
        let mut t = [0.0; MAX_DIM];
        for _ in 0..20_000 {
            let (_, g) = self.loss_grad(&t[..d]);
            let mut moved = 0.0;
            for &j in &act {
                let next = self.prior.shrink(step, t[j] - step * g[j]);
                moved += (next - t[j]).abs();
                t[j] = next;
            }
            if moved < 1e-13 {
                break;
            }
        }
        let cov = p.try_inverse().unwrap_or_else(|| DMatrix::identity(k, k));
        let mut mode = vec![0.0; d];
        let mut sd = vec![0.0; d];
        for (a, &j) in act.iter().enumerate() {
            mode[j] = t[j];
            sd[j] = cov[(a, a)].max(0.0).sqrt();
        }
        (mode, sd)
    }
}

fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Varying coordinates, their ranges and optional change of variables.
/// The smoothed approximation is tabulated in gradient-step coordinates
/// unless bounds are forced, because there its second-derivative kinks are
/// the axis-aligned planes `u_j = ±γ·slope`.
struct Layout {
    dims: Vec<usize>,
    ranges: Vec<(f64, f64)>,
    breaks: Vec<Vec<f64>>,
    shear: Option<Shear>,
}

fn panel_layout(prob: &SmallProblem, which: Which, delta: &InclusionMask, opts: &QuadOptions, scale: f64) -> Layout {
    let d = prob.d;
    let dims: Vec<usize> = match which {
        Which::Exact => delta.active(),
        _ => (0..d).collect(),
    };
    if let Some(b) = &opts.bounds {
        let ranges = dims.iter().map(|&j| b[j]).collect();
        return Layout { breaks: vec![vec![0.0]; dims.len()], dims, ranges, shear: None };
    }
    let (mode, sd) = prob.pilot(delta);
    let sg = prob.gamma.sqrt();
    let half: Vec<f64> = (0..d)
        .map(|j| {
            if delta.get(j) {
                let extra = if which == Which::Exact { 0.0 } else { 6.0 * sg };
                scale * (opts.width_sd * sd[j] + extra)
            } else {
                scale * 8.0 * sg
            }
        })
        .collect();
    if which != Which::MyApprox {
        let ranges = dims.iter().map(|&j| (mode[j] - half[j], mode[j] + half[j])).collect();
        return Layout { breaks: vec![vec![0.0]; dims.len()], dims, ranges, shear: None };
    }
    // u = (I - γH)θ + γb at the pilot centre
    let g = prob.gamma;
    let t = g * prob.prior.slope_at_zero();
    let center: Vec<f64> = (0..d)
        .map(|i| mode[i] - g * ((0..d).map(|k| prob.h[i][k] * mode[k]).sum::<f64>() - prob.b[i]))
        .collect();
    let ranges = dims.iter().map(|&j| (center[j] - half[j], center[j] + half[j])).collect();
    let breaks = dims.iter().map(|&j| if delta.get(j) { vec![-t, 0.0, t] } else { vec![] }).collect();
    Layout { dims, ranges, breaks, shear: Some(prob.shear()) }
}

fn build_panel(prob: &SmallProblem, which: Which, delta: &InclusionMask, layout: Layout, res: usize) -> Panel {
    let d = prob.d;
    let axes: Vec<Axis> = layout
        .ranges
        .iter()
        .zip(&layout.breaks)
        .map(|(&(lo, hi), br)| Axis::gauss_with_breaks(lo, hi, res, br))
        .collect();
    let total: usize = axes.iter().map(|a| a.nodes.len()).product();
    let log_jac = layout.shear.map_or(0.0, |s| s.log_jac);
    let log_w: Vec<Vec<f64>> = axes.iter().map(|a| a.weights.iter().map(|w| w.ln()).collect()).collect();
    let edge: Vec<Vec<bool>> = axes
        .iter()
        .map(|a| {
            let band = EDGE_BAND * (a.hi - a.lo);
            a.nodes.iter().map(|&x| x < a.lo + band || x > a.hi - band).collect()
        })
        .collect();
    let mut panel = Panel {
        delta: delta.clone(),
        dims: layout.dims,
        axes,
        mass: vec![0.0; total],
        log_mass: 0.0,
        weight: 0.0,
        leak: 0.0,
        shear: layout.shear,
    };
    let k = panel.axes.len();
    let mut logs = vec![0.0; total];
    let mut on_edge = vec![false; total];
    let mut idx = [0usize; MAX_DIM];
    let mut u = [0.0; MAX_DIM];
    let mut p = [0.0; MAX_DIM];
    for i in 0..total {
        let mut lw = log_jac;
        let mut e = false;
        for a in 0..k {
            u[panel.dims[a]] = panel.axes[a].nodes[idx[a]];
            lw += log_w[a][idx[a]];
            e |= edge[a][idx[a]];
        }
        match &panel.shear {
            Some(sh) => {
                for r in 0..d {
                    p[r] = sh.c[r] + (0..d).map(|c| sh.a[r][c] * u[c]).sum::<f64>();
                }
            }
            None => p[..d].copy_from_slice(&u[..d]),
        }
        logs[i] = prob.log_density(which, &p[..d], delta) + lw;
        on_edge[i] = e;
        // last axis varies fastest, matching `grid_point`
        for a in (0..k).rev() {
            idx[a] += 1;
            if idx[a] < panel.axes[a].nodes.len() {
                break;
            }
            idx[a] = 0;
        }
    }
    let lse = log_sum_exp(logs.iter().cloned());
    let mut leak = 0.0;
    for ((m, l), e) in panel.mass.iter_mut().zip(&logs).zip(&on_edge) {
        *m = (l - lse).exp();
        if *e {
            leak += *m;
        }
    }
    panel.log_mass = lse;
    panel.leak = leak;
    panel
}

fn panel_at(prob: &SmallProblem, which: Which, delta: &InclusionMask, opts: &QuadOptions, res: usize) -> Result<Panel> {
    let mut scale = 1.0;
    let mut last = None;
    for _ in 0..=MAX_WIDEN {
        let layout = panel_layout(prob, which, delta, opts, scale);
        let panel = build_panel(prob, which, delta, layout, res);
        if panel.leak <= LEAK_TARGET || opts.bounds.is_some() {
            return Ok(panel);
        }
        last = Some(panel);
        scale *= WIDEN;
    }
    let panel = last.expect("at least one attempt");
    if panel.leak > LEAK_TOL {
        return Err(Error::GridLeakage { leak: panel.leak });
    }
    Ok(panel)
}

fn assemble(prob: &SmallProblem, which: Which, opts: &QuadOptions, res: usize) -> Result<(Vec<Panel>, f64)> {
    let deltas: Vec<InclusionMask> = match &opts.only_delta {
        Some(m) => vec![m.clone()],
        None => InclusionMask::enumerate(prob.d).collect(),
    };
    let mut panels = deltas
        .par_iter()
        .map(|delta| panel_at(prob, which, delta, opts, res))
        .collect::<Result<Vec<_>>>()?;
    let lse = log_sum_exp(panels.iter().map(|p| p.log_mass));
    for p in &mut panels {
        p.weight = (p.log_mass - lse).exp();
    }
    Ok((panels, lse))
}

/// Tabulate the chosen posterior at fixed `φ`. `gamma` is required for the
/// smoothed posteriors.
pub fn quad_posterior(
    model: &LinearModel,
    phi: &HyperState,
    gamma: Option<f64>,
    which: Which,
    opts: &QuadOptions,
) -> Result<QuadraturePosterior> {
    let d = model.data().d();
    if d > MAX_DIM {
        return Err(Error::Unsupported(format!("quadrature needs d <= {MAX_DIM}, got {d}")));
    }
    let g = match (which, gamma) {
        (Which::Exact, g) => g.unwrap_or(1.0),
        (_, Some(g)) if g > 0.0 => g,
        _ => return Err(Error::InvalidArgument("smoothed posteriors need gamma > 0".into())),
    };
    if let Some(m) = &opts.only_delta {
        if m.len() != d {
            return Err(Error::DimensionMismatch { what: "pattern filter", expected: d, found: m.len() });
        }
    }
    let prob = SmallProblem::new(model, phi, g)?;
    let ladder = opts
        .ladder
        .clone()
        .unwrap_or_else(|| default_ladder(d));
    let mut prev: Option<Vec<f64>> = None;
    let mut result = None;
    for &res in &ladder {
        let (panels, lse) = assemble(&prob, which, opts, res)?;
        let w: Vec<f64> = panels.iter().map(|p| p.weight).collect();
        let change = prev
            .as_ref()
            .map(|pw| pw.iter().zip(&w).map(|(a, b)| (a - b).abs()).sum::<f64>())
            .unwrap_or(f64::INFINITY);
        result = Some((panels, lse, res, change));
        if change < REFINE_TOL {
            break;
        }
        prev = Some(w);
    }
    let (panels, log_normalizer, resolution, refinement_delta) = result.expect("non-empty ladder");
    Ok(QuadraturePosterior {
        which,
        d,
        gamma: (which != Which::Exact).then_some(g),
        panels,
        log_normalizer,
        resolution,
        refinement_delta,
    })
}

/// `ϱ_γ = log E_{Π̃_γ}[e^{r_γ(δ,θ)}]`, from a tilde-posterior table. The
/// second value is the change against the next-coarser resolution.
pub fn varrho_gamma_estimate(model: &LinearModel, phi: &HyperState, gamma: f64, opts: &QuadOptions) -> Result<(f64, f64)> {
    let tilde = quad_posterior(model, phi, Some(gamma), Which::Tilde, opts)?;
    let prob = SmallProblem::new(model, phi, gamma)?;
    let est = varrho_on(&tilde, &prob);
    let coarse = tilde.resolution / 2;
    let err = if coarse >= 16 {
        let copts = QuadOptions { ladder: Some(vec![coarse]), ..opts.clone() };
        let t2 = quad_posterior(model, phi, Some(gamma), Which::Tilde, &copts)?;
        (varrho_on(&t2, &prob) - est).abs()
    } else {
        f64::NAN
    };
    Ok((est, err))
}

fn varrho_on(tilde: &QuadraturePosterior, prob: &SmallProblem) -> f64 {
    tilde.expect(&mut |delta, t| prob.r_gamma(t, delta).exp()).ln().max(0.0)
}

/// `r_γ(δ, θ)` for a linear model with an elastic-net slab.
pub fn r_gamma(model: &LinearModel, prior: &PriorSpec, gamma: f64, delta: &InclusionMask, theta: &[f64]) -> Result<f64> {
    let d = model.data().d();
    if theta.len() != d || delta.len() != d {
        return Err(Error::DimensionMismatch { what: "r_gamma inputs", expected: d, found: theta.len() });
    }
    let theta_d = delta.restrict(theta);
    let g = model.value_grad(theta).1;
    let gd = model.value_grad(&theta_d).1;
    let mut inner = 0.0;
    let mut norm = 0.0;
    for j in 0..d {
        inner += (g[j] - gd[j]) * (theta[j] - theta_d[j]);
        if delta.get(j) {
            let v = g[j] + prior.subgradient(theta_d[j]);
            norm += v * v;
        }
    }
    Ok(inner + 0.5 * gamma * norm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_axis_integrates_polynomials_exactly() {
        let a = Axis::gauss(-1.3, 2.1, 33);
        assert!((a.weights.iter().sum::<f64>() - 3.4).abs() < 1e-14);
        let s: f64 = a.nodes.iter().zip(&a.weights).map(|(x, w)| w * (x * x * x - x + 2.0)).sum();
        let f = |x: f64| x.powi(4) / 4.0 - x * x / 2.0 + 2.0 * x;
        assert!((s - (f(2.1) - f(-1.3))).abs() < 1e-12);
        assert!(a.nodes.windows(2).all(|w| w[0] < w[1]));
    }
}
