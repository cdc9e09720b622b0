//! Seeded numerical checks against the oracles. Each returns a [`Check`]
//! whose `pass` applies the fixed tolerances documented on the function;
//! problem sizes are arguments so the same code serves quick runs and the
//! full acceptance sweep.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::diagnostics::batch_means_stderr;
use crate::envelope::{
    fb_envelope, moreau_env_oracle, moreau_env_oracle_masked, objective, surrogate_envelope, EnvelopeContext,
    EnvelopePoint, LogisticScalarLoss, SmoothLoss,
};
use crate::error::Result;
use crate::linmodel::{Dataset, HyperState, LinearModel};
use crate::mask::InclusionMask;
use crate::oracle::{
    beta_metric_bound, beta_metric_lower, cor1_bound, example1_suite, quad_posterior, r_gamma, tv_discrete,
    varrho_gamma_estimate, QuadOptions, Which,
};
use crate::prox::{prox_oracle_scalar, PriorSpec};
use crate::sampler::{run_chain, ChainState, DriftKind, Kernel, SamplerConfig, TraceRecord, TraceSink};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub metrics: BTreeMap<&'static str, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    pub fn from_metrics(name: &'static str, pass: bool, metrics: &[(&'static str, f64)]) -> Self {
        Self { name, pass, metrics: metrics.iter().copied().collect(), note: None }
    }

    /// A check that could not be evaluated.
    pub fn failed(name: &'static str, why: &str) -> Self {
        Self { name, pass: false, metrics: BTreeMap::new(), note: Some(why.to_string()) }
    }

    /// `name: PASS (k=v, ...)`.
    pub fn line(&self) -> String {
        let m: Vec<String> = self.metrics.iter().map(|(k, v)| format!("{k}={v:.4e}")).collect();
        let mut s = format!("{}: {} ({})", self.name, if self.pass { "PASS" } else { "FAIL" }, m.join(", "));
        if let Some(n) = &self.note {
            s.push_str(&format!(" {n}"));
        }
        s
    }
}

/// Gaussian design with one nonzero coefficient of size in `[0.5, 1.5]`
/// and unit noise.
pub fn small_problem(seed: u64, n: usize, d: usize) -> Result<LinearModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = DMatrix::from_fn(n, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut theta = vec![0.0; d];
    theta[0] = if rng.random::<bool>() { 1.0 } else { -1.0 } * (0.5 + rng.random::<f64>());
    let signal = &x * DVector::from_vec(theta);
    let z = DVector::from_fn(n, |i, _| signal[i] + rng.sample::<f64, _>(StandardNormal));
    LinearModel::new(Dataset::new(x, z, 1.0)?)
}

fn random_delta(rng: &mut ChaCha8Rng, d: usize, max_active: usize) -> InclusionMask {
    loop {
        let m = InclusionMask::from_bits((0..d).map(|_| rng.random::<bool>()).collect());
        if m.count() <= max_active {
            return m;
        }
    }
}

fn gaussian_vec(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> Vec<f64> {
    (0..d).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Smoothed point mass for `γ ∈ {0.01, 0.1, 0.5, π/2}`: quadrature within
/// 1e-8 of `√(2γ/π)`, sampling within 4 standard errors, envelope equal to
/// `x²/(2γ)` to 1e-12.
pub fn check_point_mass(draws: usize, seed: u64) -> Result<Check> {
    let rep = example1_suite(&[0.01, 0.1, 0.5, FRAC_PI_2], draws, seed)?;
    let fold = |f: &dyn Fn(&crate::oracle::Example1Row) -> f64| rep.rows.iter().map(f).fold(0.0, f64::max);
    Ok(Check::from_metrics(
        "point_mass_smoothing",
        rep.pass,
        &[
            ("quad_err", fold(&|r| (r.w1_quadrature - r.w1_exact).abs())),
            ("sample_z", fold(&|r| (r.w1_sampled - r.w1_exact).abs() / r.w1_stderr)),
            ("envelope_err", fold(&|r| r.envelope_err)),
        ],
    ))
}

/// `h_γ ≤ h̃_γ ≤ h` (slack 1e-9) for `γ ∈ {5, 1, 0.1}` on the scalar
/// logistic-plus-Laplace function (`a = 0.8`, `b = 0.5`) and on `instances`
/// linear models with `d ≤ 3`; the two-sided bound
/// `h(θ_δ|δ) + ‖θ-θ_δ‖²/(2γ) - r_γ ≤ h_γ(θ|δ) ≤ h(θ_δ|δ) + ‖θ-θ_δ‖²/(2γ)`
/// on the same models; and `max |h - h_γ| < 0.15` on `[-10, 10]` at
/// `γ = 0.1` for the scalar function.
pub fn check_envelope_order(instances: usize, seed: u64) -> Result<Check> {
    const SLACK: f64 = 1e-9;
    let gammas = [5.0, 1.0, 0.1];
    let mut order_viol = 0usize;
    let mut sandwich_viol = 0usize;
    let mut worst_order: f64 = f64::NEG_INFINITY;
    let mut worst_sandwich: f64 = f64::NEG_INFINITY;

    let loss = LogisticScalarLoss { a: 0.8 };
    let h = |u: &[f64]| loss.value(u) + 0.5 * u[0].abs();
    let one = InclusionMask::ones(1);
    let mut gap_fine: f64 = 0.0;
    for &g in &gammas {
        let ctx = EnvelopeContext::new(g, f64::INFINITY, PriorSpec::Laplace { lambda: 0.5 })?.without_normalizer();
        for i in -200..=200 {
            let x = [i as f64 * 0.05];
            let hg = fb_envelope(&ctx, &loss, &x, &one)?;
            let ht = moreau_env_oracle(g, &h, &x)?;
            let hx = h(&x);
            let excess = (hg - ht).max(ht - hx);
            worst_order = worst_order.max(excess);
            order_viol += (excess > SLACK) as usize;
            if g == 0.1 {
                gap_fine = gap_fine.max((hx - hg).abs());
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..instances {
        let d = 1 + i % 3;
        let model = small_problem(seed.wrapping_add(i as u64), 8 + i, d)?;
        let prior = PriorSpec::ElasticNet {
            alpha: rng.random_range(0.2..=1.0),
            lambda1: rng.random_range(0.5..3.0),
            lambda2: rng.random_range(0.5..2.0),
            sigma2: model.sigma2(),
        };
        for &g in &gammas {
            let ctx = EnvelopeContext::new(g, f64::INFINITY, prior)?;
            for k in 0..24 {
                let delta = random_delta(&mut rng, d, 2);
                let mut theta = gaussian_vec(&mut rng, d, 1.5);
                if k % 2 == 0 {
                    theta = delta.restrict(&theta);
                }
                let hg = fb_envelope(&ctx, &model, &theta, &delta)?;
                let ht = moreau_env_oracle_masked(&ctx, &model, &theta, &delta)?;
                let hx = objective(&ctx, &model, &theta, &delta);
                let excess = (hg - ht).max(ht - hx);
                worst_order = worst_order.max(excess);
                order_viol += (excess > SLACK) as usize;

                let td = delta.restrict(&theta);
                let dist2: f64 = theta.iter().zip(&td).map(|(a, b)| (a - b) * (a - b)).sum();
                let upper = objective(&ctx, &model, &td, &delta) + dist2 / (2.0 * g);
                let lower = upper - r_gamma(&model, &prior, g, &delta, &theta)?;
                let excess = (hg - upper).max(lower - hg);
                worst_sandwich = worst_sandwich.max(excess);
                sandwich_viol += (excess > SLACK) as usize;
            }
        }
    }
    let pass = order_viol == 0 && sandwich_viol == 0 && gap_fine < 0.15;
    Ok(Check::from_metrics(
        "envelope_order_and_sandwich",
        pass,
        &[
            ("order_violations", order_viol as f64),
            ("worst_order_excess", worst_order),
            ("sandwich_violations", sandwich_viol as f64),
            ("worst_sandwich_excess", worst_sandwich),
            ("max_gap_gamma_0.1", gap_fine),
        ],
    ))
}

/// Closed-form prox against golden-section search on `triples` random
/// (prior, `γ`, `x`) draws cycling through the four priors, with `γ`
/// kept where the prox objective is convex. Tolerance `1e-8·(1+|x|)`.
pub fn check_prox(triples: usize, seed: u64) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut failures = 0usize;
    for k in 0..triples {
        let frac = rng.random_range(0.05..0.95);
        let (prior, gamma) = match k % 4 {
            0 => (
                PriorSpec::ElasticNet {
                    alpha: rng.random_range(0.0..=1.0),
                    lambda1: rng.random_range(0.1..5.0),
                    lambda2: rng.random_range(0.1..5.0),
                    sigma2: rng.random_range(0.5..2.0),
                },
                rng.random_range(0.01..2.0),
            ),
            1 => (PriorSpec::Laplace { lambda: rng.random_range(0.1..5.0) }, rng.random_range(0.01..2.0)),
            2 => {
                let (alpha, lambda) = (rng.random_range(0.5..3.0), rng.random_range(0.5..2.0));
                let c = alpha * lambda;
                (PriorSpec::GenDoublePareto { alpha, lambda }, frac * c * c / (alpha + 1.0))
            }
            _ => {
                let alpha = rng.random_range(0.5..3.0);
                (PriorSpec::Mcp { alpha, lambda: rng.random_range(0.3..2.0) }, frac * alpha)
            }
        };
        let x = rng.random_range(-6.0..6.0);
        let fast = prior.shrink(gamma, x);
        match prox_oracle_scalar(&prior, gamma, x) {
            Ok(o) => {
                let ratio = (fast - o.point).abs() / (1e-8 * (1.0 + x.abs()));
                worst = worst.max(ratio);
                failures += (ratio > 1.0) as usize;
            }
            Err(_) => failures += 1,
        }
    }
    Ok(Check::from_metrics("prox_vs_oracle", failures == 0, &[("failures", failures as f64), ("worst_err_over_tol", worst)]))
}

/// On `instances` models with `d ≤ 3` at `γ₀ = 0.25`: `ϱ̂_γ ≥ 0`,
/// `ϱ̂_γ ≤` `cor1_bound`, and the lower estimate of the `d_β` gap
/// between the exact and approximate posteriors within its bound.
pub fn check_bounds(instances: usize, seed: u64) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let opts = QuadOptions::default();
    let mut viol = 0usize;
    let (mut worst_varrho_ratio, mut worst_gap_ratio): (f64, f64) = (0.0, 0.0);
    for i in 0..instances {
        let d = 1 + i % 3;
        let model = small_problem(seed.wrapping_add(1000 + i as u64), 20 + 2 * i, d)?;
        let phi = HyperState::new(
            rng.random_range(0.2..0.8),
            rng.random_range(1.0..3.0),
            1.0,
            rng.random_range(0.5..=1.0),
            2.0,
            model.lambda_max(),
        )?;
        let gamma = model.gamma_from_rule(0.25)?;
        let (v, _) = varrho_gamma_estimate(&model, &phi, gamma, &opts)?;
        let c1 = cor1_bound(&model, &phi, gamma, d)?;
        let ex = quad_posterior(&model, &phi, None, Which::Exact, &opts)?;
        let ap = quad_posterior(&model, &phi, Some(gamma), Which::MyApprox, &opts)?;
        let gap = beta_metric_lower(&ex, &ap)?;
        let bound = beta_metric_bound(gamma, d, v);
        viol += (v < 0.0) as usize + (v > c1) as usize + (gap > bound) as usize;
        worst_varrho_ratio = worst_varrho_ratio.max(v / c1);
        worst_gap_ratio = worst_gap_ratio.max(gap / bound);
    }
    Ok(Check::from_metrics(
        "bound_hierarchy",
        viol == 0,
        &[("violations", viol as f64), ("max_varrho_over_cor1", worst_varrho_ratio), ("max_gap_over_bound", worst_gap_ratio)],
    ))
}

struct StationaritySink {
    burn_in: u64,
    codes: Vec<f64>,
    theta: Vec<Vec<f64>>,
}

impl TraceSink for StationaritySink {
    fn record(&mut self, r: &TraceRecord) -> Result<()> {
        if r.iter > self.burn_in {
            self.codes[r.delta.code() as usize] += 1.0;
            for (s, &t) in self.theta.iter_mut().zip(&r.theta) {
                s.push(t);
            }
        }
        Ok(())
    }
}

/// A `d = 2` chain with pinned hyperparameters at `γ₀ = 0.25` run for
/// `sweeps` post-burn-in sweeps: total variation `Σ|p - q|` between the
/// chain's joint `δ` frequencies and the quadrature weights at most 0.02,
/// and every first and second `θ` moment within 3 batch-means standard
/// errors of quadrature.
pub fn check_stationarity(sweeps: usize, seed: u64) -> Result<Check> {
    let model = small_problem(seed, 30, 2)?;
    let phi = HyperState::new(0.5, 2.0, 1.0, 0.8, 2.0, model.lambda_max())?;
    let gamma = model.gamma_from_rule(0.25)?;
    let quad = quad_posterior(&model, &phi, Some(gamma), Which::MyApprox, &QuadOptions::default())?;
    let kernel = Kernel::new(&model, gamma)?;
    let burn_in = 5_000;
    let cfg = SamplerConfig { iterations: sweeps + burn_in, burn_in, fixed_phi: true, seed, ..Default::default() };
    let mut sink = StationaritySink { burn_in: burn_in as u64, codes: vec![0.0; 4], theta: vec![Vec::new(), Vec::new()] };
    run_chain(&kernel, &cfg, ChainState::zeros(2, phi), &mut sink)?;
    let kept = sink.theta[0].len() as f64;
    let freq: Vec<f64> = sink.codes.iter().map(|c| c / kept).collect();
    let tv = tv_discrete(&freq, &quad.delta_probs_by_code())?;
    let (m1, m2) = (quad.theta_mean(), quad.theta_second_moment());
    let mut max_z: f64 = 0.0;
    for j in 0..2 {
        for (power, target) in [(1, m1[j]), (2, m2[j])] {
            let s: Vec<f64> = sink.theta[j].iter().map(|t| t.powi(power)).collect();
            let m = s.iter().sum::<f64>() / s.len() as f64;
            max_z = max_z.max((m - target).abs() / batch_means_stderr(&s)?);
        }
    }
    Ok(Check::from_metrics("stationarity_d2", tv <= 0.02 && max_z <= 3.0, &[("tv", tv), ("max_moment_z", max_z)]))
}

fn random_state(rng: &mut ChaCha8Rng, d: usize, phi: HyperState) -> ChainState {
    let delta = InclusionMask::from_bits((0..d).map(|_| rng.random::<bool>()).collect());
    ChainState { delta, theta: gaussian_vec(rng, d, 1.5), phi, iter: 0 }
}

/// Conditional-update algebra: `δ` logits against `log_target`
/// differences (1e-9), the inactive-block proposal against `-h̃_γ` up to a
/// constant on a grid (1e-8), and the detailed-balance identity for both
/// Metropolis steps on `pairs` random pairs (1e-9, relative for large
/// ratios).
pub fn check_update_identities(pairs: usize, seed: u64) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let model = small_problem(seed.wrapping_add(1), 40, 6)?;
    let gamma = model.gamma_from_rule(0.25)?;
    let kernel = Kernel::new(&model, gamma)?;
    let mut logit_err: f64 = 0.0;
    for _ in 0..50 {
        let phi = HyperState::new(
            rng.random_range(0.05..0.95),
            rng.random_range(0.5..4.0),
            1.0,
            rng.random_range(0.1..=1.0),
            2.0,
            model.lambda_max(),
        )?;
        let st = random_state(&mut rng, 6, phi);
        let (_, g) = model.value_grad(&st.theta);
        let logits = kernel.delta_logits(&st.theta, &st.phi, &g)?;
        for (j, &lj) in logits.iter().enumerate() {
            let (mut on, mut off) = (st.clone(), st.clone());
            on.delta.set(j, true);
            off.delta.set(j, false);
            let diff = kernel.log_target(&on, f64::INFINITY)? - kernel.log_target(&off, f64::INFINITY)?;
            logit_err = logit_err.max((lj - diff).abs());
        }
    }

    let model = small_problem(seed.wrapping_add(2), 30, 4)?;
    let gamma = model.gamma_from_rule(0.25)?;
    let kernel = Kernel::new(&model, gamma)?;
    let phi = HyperState::new(0.3, 2.0, 1.0, 0.6, 2.0, model.lambda_max())?;
    let ctx = kernel.context(&phi, f64::INFINITY)?;
    let delta: InclusionMask = "1010".parse()?;
    let base = vec![0.7, 0.0, -1.2, 0.0];
    let prop = kernel.inactive_proposal(&base, &delta, &phi)?;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for a in -10..=10 {
        for b in -10..=10 {
            let u = [a as f64 * 0.03, b as f64 * 0.03];
            let mut theta = base.clone();
            theta[1] = u[0];
            theta[3] = u[1];
            let c = -surrogate_envelope(&ctx, &model, &theta, &delta)? - kernel.inactive_log_density(&prop, &u);
            lo = lo.min(c);
            hi = hi.max(c);
        }
    }
    let proposal_spread = hi - lo;

    let cap = 1e6;
    let mut db_err: f64 = 0.0;
    for _ in 0..pairs {
        let phi = HyperState::new(0.4, rng.random_range(0.5..3.0), 1.0, 0.7, 2.0, model.lambda_max())?;
        let ctx = kernel.context(&phi, cap)?;
        let x = random_state(&mut rng, 4, phi);
        let step = gaussian_vec(&mut rng, 4, 0.3);
        let lx = kernel.log_target(&x, cap)?;
        let ep = |s: &ChainState| EnvelopePoint::evaluate(&ctx, &model, &s.theta, &s.delta);
        let epx = ep(&x);
        let rel = |a: f64, b: f64| (a - b).abs() / (1.0 + b.abs());

        let active = x.delta.active();
        if !active.is_empty() {
            let mut y = x.clone();
            for &k in &active {
                y.theta[k] += step[k];
            }
            let epy = ep(&y);
            let xa: Vec<f64> = active.iter().map(|&k| x.theta[k]).collect();
            let ya: Vec<f64> = active.iter().map(|&k| y.theta[k]).collect();
            let dx = kernel.mala_drift(&ctx, DriftKind::Capped, &x.theta, &epx, &active);
            let dy = kernel.mala_drift(&ctx, DriftKind::Capped, &y.theta, &epy, &active);
            let fwd = kernel.mala_log_ratio(gamma, (&epx, &xa, &dx), (&epy, &ya, &dy));
            let bwd = kernel.mala_log_ratio(gamma, (&epy, &ya, &dy), (&epx, &xa, &dx));
            let want = kernel.log_target(&y, cap)? - lx + kernel.mala_log_proposal(gamma, &ya, &dy, &xa)
                - kernel.mala_log_proposal(gamma, &xa, &dx, &ya);
            db_err = db_err.max((fwd + bwd).abs()).max(rel(fwd, want));
        }

        let inactive = x.delta.inactive();
        if !inactive.is_empty() {
            let mut y = x.clone();
            for &k in &inactive {
                y.theta[k] += step[k];
            }
            let prop = kernel.inactive_proposal(&x.theta, &x.delta, &phi)?;
            let epy = ep(&y);
            let uo: Vec<f64> = inactive.iter().map(|&k| x.theta[k]).collect();
            let un: Vec<f64> = inactive.iter().map(|&k| y.theta[k]).collect();
            let fwd = kernel.inactive_log_ratio(&prop, (&epx, &uo), (&epy, &un));
            let bwd = kernel.inactive_log_ratio(&prop, (&epy, &un), (&epx, &uo));
            let want = kernel.log_target(&y, cap)? - lx + kernel.inactive_log_density(&prop, &uo)
                - kernel.inactive_log_density(&prop, &un);
            let gap = |s: &ChainState, e: &EnvelopePoint| -> Result<f64> {
                Ok(surrogate_envelope(&ctx, &model, &s.theta, &s.delta)? - e.value)
            };
            let via_gap = gap(&y, &epy)? - gap(&x, &epx)?;
            db_err = db_err.max((fwd + bwd).abs()).max(rel(fwd, want)).max(rel(fwd, via_gap));
        }
    }
    let pass = logit_err <= 1e-9 && proposal_spread <= 1e-8 && db_err <= 1e-9;
    Ok(Check::from_metrics(
        "update_identities",
        pass,
        &[("logit_err", logit_err), ("proposal_offset_spread", proposal_spread), ("detailed_balance_err", db_err)],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_checks_pass() {
        for c in [check_prox(200, 1).unwrap(), check_update_identities(50, 2).unwrap(), check_point_mass(5_000, 3).unwrap()] {
            assert!(c.pass, "{}", c.line());
        }
    }
}
