//! Metropolized Gibbs sampler for
//! `π̌_γ(δ, θ, φ | z) ∝ π_δ (2πγ)^{‖δ‖₀/2} e^{-h_γ(θ|δ)} × hyperprior(φ)`.
//!
//! One sweep updates, in order:
//!
//! 1. every `δ_j` jointly from its exact conditional (independent logits);
//! 2. the active block `θ_δ` by a truncated-drift MALA step;
//! 3. the inactive block by an independence sampler whose Gaussian proposal
//!    is the exact law of the surrogate `h̃_γ` (the envelope with `J_γ`
//!    replaced by `Prox_γ(θ|δ)`);
//! 4. `q` from its Beta conditional;
//! 5. `(λ₁, λ₂)` by an adaptive Gaussian random walk.
//!
//! The inactive proposal `N(m, γ M_cc⁻¹)`, `M = I - (γ/σ²)X'X`, is drawn by
//! conditioning a full-dimensional `N(0, γ M⁻¹)` draw on its active block,
//! so each sweep costs `O(d²)` instead of a fresh `O(d³)` factorization.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::envelope::{cap_in_place, EnvelopeContext, EnvelopePoint, SmoothLoss};
use crate::error::{Error, Result};
use crate::linmodel::{log_prior_delta, HyperState, LinearModel};
use crate::mask::InclusionMask;

/// Which vector field drives the MALA proposal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DriftKind {
    /// `Ḡ_γ = (θ - J_γ)/γ`, capped.
    #[default]
    Capped,
    /// `(I - γ∇²ℓ)(θ - J_γ)/γ`, the exact envelope gradient, capped.
    ExactGradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub gamma0: f64,
    /// Initial MALA step; `None` means `h = γ`.
    pub mala_step: Option<f64>,
    pub target_accept_mala: f64,
    pub target_accept_rwm: f64,
    /// Initial random-walk scales for `(λ₁, λ₂)`; `None` means 10% of the
    /// starting values.
    pub rwm_scale: Option<[f64; 2]>,
    pub iterations: usize,
    pub burn_in: usize,
    /// `None` means `10 √d λ₁/σ²` at the starting `λ₁`.
    pub drift_cap: Option<f64>,
    /// Pin `φ = (q, λ₁, λ₂)` at its starting value.
    pub fixed_phi: bool,
    pub drift: DriftKind,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            gamma0: 0.25,
            mala_step: None,
            target_accept_mala: 0.57,
            target_accept_rwm: 0.30,
            rwm_scale: None,
            iterations: 10_000,
            burn_in: 2_000,
            drift_cap: None,
            fixed_phi: false,
            drift: DriftKind::Capped,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.gamma0 > 0.0 && self.gamma0 <= 0.25) {
            return bad(format!("gamma0 must lie in (0, 1/4], got {}", self.gamma0));
        }
        if self.iterations > 0 && self.burn_in >= self.iterations {
            return bad(format!("burn-in {} must be below iterations {}", self.burn_in, self.iterations));
        }
        for t in [self.target_accept_mala, self.target_accept_rwm] {
            if !(t > 0.0 && t < 1.0) {
                return bad(format!("acceptance targets must lie in (0, 1), got {t}"));
            }
        }
        if let Some(h) = self.mala_step {
            if !(h > 0.0 && h.is_finite()) {
                return bad(format!("mala step must be positive, got {h}"));
            }
        }
        if let Some(c) = self.drift_cap {
            if !(c > 0.0) {
                return bad(format!("drift cap must be positive, got {c}"));
            }
        }
        if let Some(s) = self.rwm_scale {
            if !s.iter().all(|&v| v > 0.0 && v.is_finite()) {
                return bad(format!("random-walk scales must be positive, got {s:?}"));
            }
        }
        Ok(())
    }
}

/// Position of the chain: `(δ, θ, φ)` plus the completed sweep count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainState {
    pub delta: InclusionMask,
    pub theta: Vec<f64>,
    pub phi: HyperState,
    pub iter: u64,
}

impl ChainState {
    /// `θ = 0`, `δ = 0`.
    pub fn zeros(d: usize, phi: HyperState) -> Self {
        Self { delta: InclusionMask::zeros(d), theta: vec![0.0; d], phi, iter: 0 }
    }
}

/// One sweep as written to a trace. Acceptance flags are `None` when the
/// kernel had nothing to update (no active or no inactive coordinate, or
/// pinned `φ`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: u64,
    pub delta: InclusionMask,
    pub theta: Vec<f64>,
    pub q: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub log_target: f64,
    pub acc_mala: Option<bool>,
    pub acc_ind: Option<bool>,
    pub acc_rwm: Option<bool>,
    /// `J_γ(θ|δ)`, the exactly sparse image of `θ`. Not serialized.
    #[serde(skip)]
    pub prox_theta: Vec<f64>,
}

/// Receives every sweep; thinning is the sink's business.
pub trait TraceSink {
    fn record(&mut self, rec: &TraceRecord) -> Result<()>;
}

/// Discards everything.
pub struct NullSink;

impl TraceSink for NullSink {
    fn record(&mut self, _rec: &TraceRecord) -> Result<()> {
        Ok(())
    }
}

/// Keeps every record in memory.
#[derive(Default)]
pub struct VecSink(pub Vec<TraceRecord>);

impl TraceSink for VecSink {
    fn record(&mut self, rec: &TraceRecord) -> Result<()> {
        self.0.push(rec.clone());
        Ok(())
    }
}

/// Accepted / attempted counts for one kernel.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AcceptCount {
    pub accepted: u64,
    pub attempted: u64,
}

impl AcceptCount {
    fn push(&mut self, flag: Option<bool>) {
        if let Some(a) = flag {
            self.attempted += 1;
            self.accepted += a as u64;
        }
    }

    pub fn rate(&self) -> Option<f64> {
        (self.attempted > 0).then(|| self.accepted as f64 / self.attempted as f64)
    }
}

/// Post-burn-in averages and final state of a chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub iterations: usize,
    pub burn_in: usize,
    pub kept: usize,
    pub gamma: f64,
    pub mala_step: f64,
    pub drift_cap: f64,
    pub final_state: ChainState,
    pub theta_mean: Vec<f64>,
    pub prox_theta_mean: Vec<f64>,
    pub inclusion_probs: Vec<f64>,
    /// Post-burn-in frequency of `J_γ(θ|δ)_j ≠ 0`.
    pub prox_inclusion_probs: Vec<f64>,
    pub acc_mala: AcceptCount,
    pub acc_ind: AcceptCount,
    pub acc_rwm: AcceptCount,
    pub q_mean: f64,
    pub lambda1_mean: f64,
    pub lambda2_mean: f64,
}

/// Quantities shared by every chain on one model and step size.
pub struct Kernel<'a> {
    model: &'a LinearModel,
    gamma: f64,
    /// Lower Cholesky factor `L` of `M = I - (γ/σ²)X'X`.
    m_chol: DMatrix<f64>,
    m: DMatrix<f64>,
    m_inv: DMatrix<f64>,
}

impl<'a> Kernel<'a> {
    pub fn new(model: &'a LinearModel, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::InvalidArgument(format!("gamma must be positive, got {gamma}")));
        }
        let lip = model.lipschitz();
        if 4.0 * gamma * lip > 1.0 {
            return Err(Error::StepSize { gamma, lipschitz: lip });
        }
        let d = model.data().d();
        let m = DMatrix::identity(d, d) - model.gram() * (gamma / model.sigma2());
        let chol = Cholesky::new(m.clone()).ok_or(Error::NotPositiveDefinite("I - (γ/σ²)X'X"))?;
        let m_inv = chol.inverse();
        Ok(Self { model, gamma, m_chol: chol.unpack(), m, m_inv })
    }

    pub fn model(&self) -> &LinearModel {
        self.model
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn d(&self) -> usize {
        self.model.data().d()
    }

    /// Envelope context for hyperstate `φ`.
    pub fn context(&self, phi: &HyperState, drift_cap: f64) -> Result<EnvelopeContext> {
        let s2 = self.model.sigma2();
        let mut ctx = EnvelopeContext::new(self.gamma, drift_cap, phi.prior(s2))?;
        ctx.log_norm = phi.log_z(s2)?;
        Ok(ctx)
    }

    /// `log π_δ + (‖δ‖₀/2) log(2πγ) - h_γ(θ|δ) + log hyperprior(φ)`.
    pub fn log_target(&self, state: &ChainState, drift_cap: f64) -> Result<f64> {
        let (l, g) = self.model.value_grad(&state.theta);
        self.log_target_parts(state, drift_cap, l, g).map(|(lt, _)| lt)
    }

    fn log_target_parts(&self, state: &ChainState, cap: f64, l: f64, g: Vec<f64>) -> Result<(f64, EnvelopePoint)> {
        let ctx = self.context(&state.phi, cap)?;
        let ep = EnvelopePoint::from_parts(&ctx, &state.theta, &state.delta, l, g);
        let lt = self.log_target_from(&ep, state);
        if lt.is_finite() {
            Ok((lt, ep))
        } else {
            Err(Error::NonFinite("log target"))
        }
    }

    fn log_target_from(&self, ep: &EnvelopePoint, state: &ChainState) -> f64 {
        let d = self.d();
        let k = state.delta.count();
        log_prior_delta(k, d, state.phi.q) + 0.5 * k as f64 * (2.0 * std::f64::consts::PI * self.gamma).ln() - ep.value
            + state.phi.log_hyperprior(d)
    }

    /// Inclusion logits `r_j = log P(δ_j=1|·) - log P(δ_j=0|·)` at fixed
    /// `(θ, φ)`, given `∇ℓ(θ)`.
    pub fn delta_logits(&self, theta: &[f64], phi: &HyperState, grad: &[f64]) -> Result<Vec<f64>> {
        let s2 = self.model.sigma2();
        let prior = phi.prior(s2);
        let log_z = phi.log_z(s2)?;
        let g = self.gamma;
        let base = (phi.q / (1.0 - phi.q)).ln() + 0.5 * (2.0 * std::f64::consts::PI * g).ln();
        Ok((0..theta.len())
            .map(|j| {
                let dj = prior.shrink(g, theta[j] - g * grad[j]);
                let bracket = grad[j] * dj
                    + log_z
                    + prior.neg_log_prior(dj)
                    + dj * (dj - 2.0 * theta[j]) / (2.0 * g);
                base - bracket
            })
            .collect())
    }

    /// The MALA drift on the active block, capped at `cap`.
    pub fn mala_drift(&self, ctx: &EnvelopeContext, kind: DriftKind, theta: &[f64], ep: &EnvelopePoint, active: &[usize]) -> Vec<f64> {
        let mut g: Vec<f64> = match kind {
            DriftKind::Capped => active.iter().map(|&k| (theta[k] - ep.j[k]) / self.gamma).collect(),
            DriftKind::ExactGradient => {
                let full = ep.drift(ctx, theta);
                let hg = self.model.hessian_apply(theta, &full);
                active.iter().map(|&k| full[k] - self.gamma * hg[k]).collect()
            }
        };
        cap_in_place(&mut g, ctx.drift_cap);
        g
    }

    /// `log q(x → y)` of the MALA proposal on the active block, up to the
    /// normalizing constant (which is symmetric).
    pub fn mala_log_proposal(&self, step: f64, from_active: &[f64], drift_from: &[f64], to_active: &[f64]) -> f64 {
        let mut ss = 0.0;
        for i in 0..from_active.len() {
            let r = to_active[i] - from_active[i] + 0.5 * step * drift_from[i];
            ss += r * r;
        }
        -ss / (2.0 * step)
    }

    /// The Gaussian proposal for the inactive block at the current active
    /// values.
    pub fn inactive_proposal(&self, theta: &[f64], delta: &InclusionMask, phi: &HyperState) -> Result<InactiveProposal> {
        let active = delta.active();
        let inactive = delta.inactive();
        let s2 = self.model.sigma2();
        let prior = phi.prior(s2);
        let g = self.gamma;
        // b = (1/σ²) G_ca (s(θ_a) - θ_a)
        let e: Vec<f64> = active.iter().map(|&k| prior.shrink(g, theta[k]) - theta[k]).collect();
        let gram = self.model.gram();
        let b = DVector::from_iterator(
            inactive.len(),
            inactive.iter().map(|&c| active.iter().zip(&e).map(|(&a, &ea)| gram[(c, a)] * ea).sum::<f64>() / s2),
        );
        let cond = Conditioner::new(&self.m_inv, &active, &inactive)?;
        let mean = cond.solve_m_cc(&self.m_inv, &b) * -g;
        Ok(InactiveProposal { active, inactive, mean, cond })
    }

    fn sample_inactive(&self, prop: &InactiveProposal, rng: &mut ChaCha8Rng) -> DVector<f64> {
        let d = self.d();
        let xi = DVector::from_iterator(d, (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
        // x = √γ L⁻ᵀ ξ has covariance γ M⁻¹
        let x = self.m_chol.tr_solve_lower_triangular(&xi).expect("triangular factor") * self.gamma.sqrt();
        let noise = prop.cond.condition_on_zero(&self.m_inv, &x);
        noise + &prop.mean
    }

    /// Unclipped log Metropolis–Hastings ratio of a MALA move `x → y` on the
    /// active block; each side is (envelope point, active values, drift).
    pub fn mala_log_ratio(&self, step: f64, x: (&EnvelopePoint, &[f64], &[f64]), y: (&EnvelopePoint, &[f64], &[f64])) -> f64 {
        -y.0.value + x.0.value + self.mala_log_proposal(step, y.1, y.2, x.1) - self.mala_log_proposal(step, x.1, x.2, y.1)
    }

    /// Unclipped log ratio of an independence move of the inactive block
    /// from `x` to `y`; each side is (envelope point, inactive values).
    pub fn inactive_log_ratio(&self, prop: &InactiveProposal, x: (&EnvelopePoint, &[f64]), y: (&EnvelopePoint, &[f64])) -> f64 {
        -y.0.value + x.0.value + self.inactive_log_density(prop, x.1) - self.inactive_log_density(prop, y.1)
    }

    /// `log q(u)` of the inactive proposal, up to a `u`-independent constant.
    pub fn inactive_log_density(&self, prop: &InactiveProposal, u: &[f64]) -> f64 {
        let r: Vec<f64> = u.iter().zip(prop.mean.iter()).map(|(a, b)| a - b).collect();
        let mut quad = 0.0;
        for (i, &ci) in prop.inactive.iter().enumerate() {
            let mut row = 0.0;
            for (k, &ck) in prop.inactive.iter().enumerate() {
                row += self.m[(ci, ck)] * r[k];
            }
            quad += r[i] * row;
        }
        -quad / (2.0 * self.gamma)
    }
}

/// Solves with the conditional covariance of the inactive block given the
/// active block under `N(0, M⁻¹)`, which equals `(M_cc)⁻¹`.
struct Conditioner {
    active: Vec<usize>,
    inactive: Vec<usize>,
    s_aa: Option<Cholesky<f64, Dyn>>,
}

impl Conditioner {
    fn new(s: &DMatrix<f64>, active: &[usize], inactive: &[usize]) -> Result<Self> {
        let s_aa = if active.is_empty() {
            None
        } else {
            let sub = s.select_rows(active).select_columns(active);
            Some(Cholesky::new(sub).ok_or(Error::NotPositiveDefinite("active block of M⁻¹"))?)
        };
        Ok(Self { active: active.to_vec(), inactive: inactive.to_vec(), s_aa })
    }

    /// `x_c - S_ca S_aa⁻¹ x_a` for a full-length `x`.
    fn condition_on_zero(&self, s: &DMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
        let xc = DVector::from_iterator(self.inactive.len(), self.inactive.iter().map(|&c| x[c]));
        match &self.s_aa {
            None => xc,
            Some(ch) => {
                let xa = DVector::from_iterator(self.active.len(), self.active.iter().map(|&a| x[a]));
                let w = ch.solve(&xa);
                let mut out = xc;
                for (i, &c) in self.inactive.iter().enumerate() {
                    out[i] -= self.active.iter().zip(w.iter()).map(|(&a, wa)| s[(c, a)] * wa).sum::<f64>();
                }
                out
            }
        }
    }

    /// `(M_cc)⁻¹ b = S_cc b - S_ca S_aa⁻¹ S_ac b`.
    fn solve_m_cc(&self, s: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
        let mut full = DVector::zeros(s.nrows());
        for (i, &c) in self.inactive.iter().enumerate() {
            full[c] = b[i];
        }
        let y = s * full;
        self.condition_on_zero(s, &y)
    }
}

/// `N(mean, γ (M_cc)⁻¹)` on the inactive coordinates.
pub struct InactiveProposal {
    pub active: Vec<usize>,
    pub inactive: Vec<usize>,
    pub mean: DVector<f64>,
    cond: Conditioner,
}

/// Independent RNG streams, one per update type.
#[derive(Clone)]
struct Streams {
    delta: ChaCha8Rng,
    mala: ChaCha8Rng,
    ind: ChaCha8Rng,
    q: ChaCha8Rng,
    rwm: ChaCha8Rng,
}

impl Streams {
    fn new(seed: u64) -> Self {
        let make = |stream: u64| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(stream);
            r
        };
        Self { delta: make(1), mala: make(2), ind: make(3), q: make(4), rwm: make(5) }
    }
}

/// A running chain: state plus cached `ℓ(θ)`, `∇ℓ(θ)`, streams and
/// adaptation state.
pub struct Chain<'k, 'm> {
    kernel: &'k Kernel<'m>,
    config: SamplerConfig,
    pub state: ChainState,
    loss: f64,
    grad: Vec<f64>,
    streams: Streams,
    drift_cap: f64,
    mala_step: f64,
    rwm_base: [f64; 2],
    rwm_log_mult: f64,
}

impl<'k, 'm> Chain<'k, 'm> {
    pub fn new(kernel: &'k Kernel<'m>, config: SamplerConfig, init: ChainState) -> Result<Self> {
        config.validate()?;
        let d = kernel.d();
        if init.theta.len() != d || init.delta.len() != d {
            return Err(Error::DimensionMismatch { what: "initial state", expected: d, found: init.theta.len() });
        }
        init.phi.validate()?;
        let s2 = kernel.model.sigma2();
        let drift_cap = config
            .drift_cap
            .unwrap_or_else(|| EnvelopeContext::default_drift_cap(d, init.phi.lambda1, s2));
        let mala_step = config.mala_step.unwrap_or(kernel.gamma);
        let rwm_base = config
            .rwm_scale
            .unwrap_or([0.1 * init.phi.lambda1.max(1e-3), 0.1 * init.phi.lambda2.max(1e-3)]);
        let (loss, grad) = kernel.model.value_grad(&init.theta);
        let streams = Streams::new(config.seed);
        Ok(Self { kernel, config, state: init, loss, grad, streams, drift_cap, mala_step, rwm_base, rwm_log_mult: 0.0 })
    }

    pub fn drift_cap(&self) -> f64 {
        self.drift_cap
    }

    pub fn mala_step(&self) -> f64 {
        self.mala_step
    }

    fn context(&self, phi: &HyperState) -> Result<EnvelopeContext> {
        self.kernel.context(phi, self.drift_cap)
    }

    fn envelope_at(&self, theta: &[f64], delta: &InclusionMask, phi: &HyperState, l: f64, g: Vec<f64>) -> Result<EnvelopePoint> {
        Ok(EnvelopePoint::from_parts(&self.context(phi)?, theta, delta, l, g))
    }

    pub fn log_target(&self) -> Result<f64> {
        self.kernel
            .log_target_parts(&self.state, self.drift_cap, self.loss, self.grad.clone())
            .map(|(lt, _)| lt)
    }

    /// Resample every `δ_j` from its conditional.
    pub fn update_delta(&mut self) -> Result<()> {
        let r = self.kernel.delta_logits(&self.state.theta, &self.state.phi, &self.grad)?;
        for (j, rj) in r.into_iter().enumerate() {
            let p = 1.0 / (1.0 + (-rj).exp());
            let u: f64 = self.streams.delta.random();
            self.state.delta.set(j, u < p);
        }
        Ok(())
    }

    /// MALA on the active block. Returns the acceptance probability and the
    /// flag, or `None` if no coordinate is active.
    pub fn update_theta_active(&mut self) -> Result<Option<(f64, bool)>> {
        let active = self.state.delta.active();
        if active.is_empty() {
            return Ok(None);
        }
        let kind = self.config.drift;
        let h = self.mala_step;
        let ctx = self.context(&self.state.phi)?;
        let theta = &self.state.theta;
        let ep_x = EnvelopePoint::from_parts(&ctx, theta, &self.state.delta, self.loss, self.grad.clone());
        let drift_x = self.kernel.mala_drift(&ctx, kind, theta, &ep_x, &active);
        let x_a: Vec<f64> = active.iter().map(|&k| theta[k]).collect();
        let sh = h.sqrt();
        let y_a: Vec<f64> = (0..active.len())
            .map(|i| x_a[i] - 0.5 * h * drift_x[i] + sh * self.streams.mala.sample::<f64, _>(StandardNormal))
            .collect();
        let mut y = theta.clone();
        for (i, &k) in active.iter().enumerate() {
            y[k] = y_a[i];
        }
        let (ly, gy) = self.kernel.model.value_grad(&y);
        let ep_y = EnvelopePoint::from_parts(&ctx, &y, &self.state.delta, ly, gy);
        let drift_y = self.kernel.mala_drift(&ctx, kind, &y, &ep_y, &active);
        let log_alpha = self.kernel.mala_log_ratio(h, (&ep_x, &x_a, &drift_x), (&ep_y, &y_a, &drift_y));
        let prob = if log_alpha.is_nan() { 0.0 } else { log_alpha.min(0.0).exp() };
        let u: f64 = self.streams.mala.random();
        let accept = u < prob;
        if accept {
            self.state.theta = y;
            self.loss = ep_y.loss;
            self.grad = ep_y.grad;
        }
        Ok(Some((prob, accept)))
    }

    /// Independence sampler on the inactive block.
    pub fn update_theta_inactive(&mut self) -> Result<Option<bool>> {
        if self.state.delta.count() == self.state.delta.len() {
            return Ok(None);
        }
        let prop = self.kernel.inactive_proposal(&self.state.theta, &self.state.delta, &self.state.phi)?;
        let u_new = self.kernel.sample_inactive(&prop, &mut self.streams.ind);
        let u_old: Vec<f64> = prop.inactive.iter().map(|&c| self.state.theta[c]).collect();
        let mut y = self.state.theta.clone();
        for (i, &c) in prop.inactive.iter().enumerate() {
            y[c] = u_new[i];
        }
        let (ly, gy) = self.kernel.model.value_grad(&y);
        let ep_x = self.envelope_at(&self.state.theta, &self.state.delta, &self.state.phi, self.loss, self.grad.clone())?;
        let ep_y = self.envelope_at(&y, &self.state.delta, &self.state.phi, ly, gy)?;
        let log_alpha = self.kernel.inactive_log_ratio(&prop, (&ep_x, &u_old), (&ep_y, u_new.as_slice()));
        let u: f64 = self.streams.ind.random();
        let accept = !log_alpha.is_nan() && u.ln() < log_alpha;
        if accept {
            self.state.theta = y;
            self.loss = ep_y.loss;
            self.grad = ep_y.grad;
        }
        Ok(Some(accept))
    }

    /// `q ~ Beta(‖δ‖₀ + 1, d + d^u - ‖δ‖₀)`.
    pub fn update_q(&mut self) -> Result<()> {
        let d = self.kernel.d() as f64;
        let k = self.state.delta.count() as f64;
        let beta = Beta::new(k + 1.0, d + d.powf(self.state.phi.u) - k)
            .map_err(|e| Error::InvalidArgument(format!("beta conditional: {e}")))?;
        // keep q strictly inside (0, 1) so log q and log(1-q) stay finite
        self.state.phi.q = beta.sample(&mut self.streams.q).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
        Ok(())
    }

    /// Random-walk Metropolis on `(λ₁, λ₂)`. Returns the acceptance
    /// probability and the flag.
    pub fn update_lambdas(&mut self) -> Result<(f64, bool)> {
        let mult = self.rwm_log_mult.exp();
        let phi = self.state.phi;
        let l1 = phi.lambda1 + self.rwm_base[0] * mult * self.streams.rwm.sample::<f64, _>(StandardNormal);
        let l2 = phi.lambda2 + self.rwm_base[1] * mult * self.streams.rwm.sample::<f64, _>(StandardNormal);
        let u: f64 = self.streams.rwm.random();
        if !phi.lambdas_in_support(l1, l2) {
            return Ok((0.0, false));
        }
        let proposed = HyperState { lambda1: l1, lambda2: l2, ..phi };
        let cur = self.log_target()?;
        let next_state = ChainState { phi: proposed, ..self.state.clone() };
        let (next, _) = self
            .kernel
            .log_target_parts(&next_state, self.drift_cap, self.loss, self.grad.clone())?;
        let log_alpha = next - cur;
        let prob = log_alpha.min(0.0).exp();
        let accept = u < prob;
        if accept {
            self.state.phi = proposed;
        }
        Ok((prob, accept))
    }

    /// One full sweep; returns the trace record.
    pub fn sweep(&mut self) -> Result<TraceRecord> {
        let t = self.state.iter + 1;
        let in_burn_in = (t as usize) <= self.config.burn_in;
        let rate = 1.0 / (t as f64).powf(0.6);
        self.update_delta()?;
        let mala = self.update_theta_active()?;
        if let Some((prob, _)) = mala {
            if in_burn_in {
                let log_h = self.mala_step.ln() + rate * (prob - self.config.target_accept_mala);
                self.mala_step = log_h.exp();
            }
        }
        let ind = self.update_theta_inactive()?;
        let mut rwm = None;
        if !self.config.fixed_phi {
            self.update_q()?;
            let (prob, acc) = self.update_lambdas()?;
            self.rwm_log_mult += rate * (prob - self.config.target_accept_rwm);
            rwm = Some(acc);
        }
        self.state.iter = t;
        self.record(mala.map(|m| m.1), ind, rwm)
    }

    fn record(&self, acc_mala: Option<bool>, acc_ind: Option<bool>, acc_rwm: Option<bool>) -> Result<TraceRecord> {
        let (log_target, ep) = self
            .kernel
            .log_target_parts(&self.state, self.drift_cap, self.loss, self.grad.clone())?;
        let phi = &self.state.phi;
        Ok(TraceRecord {
            iter: self.state.iter,
            delta: self.state.delta.clone(),
            theta: self.state.theta.clone(),
            q: phi.q,
            lambda1: phi.lambda1,
            lambda2: phi.lambda2,
            log_target,
            acc_mala,
            acc_ind,
            acc_rwm,
            prox_theta: ep.j,
        })
    }
}

/// Run `config.iterations` sweeps from `init`, streaming every record to
/// `sink`.
pub fn run_chain(kernel: &Kernel, config: &SamplerConfig, init: ChainState, sink: &mut dyn TraceSink) -> Result<ChainSummary> {
    let mut chain = Chain::new(kernel, config.clone(), init)?;
    let d = kernel.d();
    let mut acc = Accumulator::new(d);
    let mut counts = [AcceptCount::default(); 3];
    if config.iterations == 0 {
        let rec = chain.record(None, None, None)?;
        acc.push(&rec);
    }
    for _ in 0..config.iterations {
        let rec = chain.sweep()?;
        sink.record(&rec)?;
        if rec.iter as usize > config.burn_in {
            acc.push(&rec);
            counts[0].push(rec.acc_mala);
            counts[1].push(rec.acc_ind);
            counts[2].push(rec.acc_rwm);
        }
    }
    Ok(acc.finish(config, kernel.gamma, chain.mala_step, chain.drift_cap, chain.state, counts))
}

struct Accumulator {
    n: usize,
    theta: Vec<f64>,
    prox: Vec<f64>,
    incl: Vec<f64>,
    prox_incl: Vec<f64>,
    q: f64,
    l1: f64,
    l2: f64,
}

impl Accumulator {
    fn new(d: usize) -> Self {
        Self {
            n: 0,
            theta: vec![0.0; d],
            prox: vec![0.0; d],
            incl: vec![0.0; d],
            prox_incl: vec![0.0; d],
            q: 0.0,
            l1: 0.0,
            l2: 0.0,
        }
    }

    fn push(&mut self, r: &TraceRecord) {
        self.n += 1;
        for j in 0..self.theta.len() {
            self.theta[j] += r.theta[j];
            self.prox[j] += r.prox_theta[j];
            self.incl[j] += r.delta.get(j) as u8 as f64;
            self.prox_incl[j] += (r.prox_theta[j] != 0.0) as u8 as f64;
        }
        self.q += r.q;
        self.l1 += r.lambda1;
        self.l2 += r.lambda2;
    }

    fn finish(
        self,
        config: &SamplerConfig,
        gamma: f64,
        mala_step: f64,
        drift_cap: f64,
        final_state: ChainState,
        counts: [AcceptCount; 3],
    ) -> ChainSummary {
        let n = self.n.max(1) as f64;
        let mean = |v: Vec<f64>| v.into_iter().map(|x| x / n).collect::<Vec<_>>();
        ChainSummary {
            iterations: config.iterations,
            burn_in: config.burn_in,
            kept: self.n,
            gamma,
            mala_step,
            drift_cap,
            final_state,
            theta_mean: mean(self.theta),
            prox_theta_mean: mean(self.prox),
            inclusion_probs: mean(self.incl),
            prox_inclusion_probs: mean(self.prox_incl),
            acc_mala: counts[0],
            acc_ind: counts[1],
            acc_rwm: counts[2],
            q_mean: self.q / n,
            lambda1_mean: self.l1 / n,
            lambda2_mean: self.l2 / n,
        }
    }
}
