//! Forward-backward envelope `h_γ(θ|δ)` of `h = ℓ + P(·|δ)` and the pieces
//! built from it.
//!
//! With `J = Prox_γ(θ - γ∇ℓ(θ)|δ)`,
//!
//! ```text
//! h_γ(θ|δ) = ℓ(θ) + ⟨∇ℓ(θ), J - θ⟩ + P(J|δ) + ‖J - θ‖²/(2γ)
//!          = ℓ(θ) - (γ/2)‖∇ℓ(θ)‖² + P_γ(θ - γ∇ℓ(θ)|δ)
//! ```
//!
//! where `P(θ|δ) = Σ_{δ_j=1} (pen(θ_j) + log Z)` plus the indicator of
//! `θ_j = 0` on the inactive coordinates.

use crate::error::{check_finite, check_len, Error, Result};
use crate::mask::InclusionMask;
use crate::prox::PriorSpec;

/// A convex, twice differentiable negative log-likelihood.
pub trait SmoothLoss: Sync {
    fn dim(&self) -> usize;
    fn value(&self, theta: &[f64]) -> f64;
    fn gradient(&self, theta: &[f64]) -> Vec<f64>;

    fn value_and_gradient(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        (self.value(theta), self.gradient(theta))
    }

    /// `∇²ℓ(θ) v`.
    fn hessian_apply(&self, theta: &[f64], v: &[f64]) -> Vec<f64>;
}

/// `ℓ ≡ 0` in dimension `d`.
#[derive(Debug, Clone, Copy)]
pub struct ZeroLoss(pub usize);

impl SmoothLoss for ZeroLoss {
    fn dim(&self) -> usize {
        self.0
    }
    fn value(&self, _theta: &[f64]) -> f64 {
        0.0
    }
    fn gradient(&self, _theta: &[f64]) -> Vec<f64> {
        vec![0.0; self.0]
    }
    fn hessian_apply(&self, _theta: &[f64], _v: &[f64]) -> Vec<f64> {
        vec![0.0; self.0]
    }
}

/// Scalar logistic loss `ℓ(x) = -a x + log(1 + e^{a x})`.
#[derive(Debug, Clone, Copy)]
pub struct LogisticScalarLoss {
    pub a: f64,
}

impl LogisticScalarLoss {
    fn sigmoid(t: f64) -> f64 {
        if t >= 0.0 {
            1.0 / (1.0 + (-t).exp())
        } else {
            let e = t.exp();
            e / (1.0 + e)
        }
    }
}

impl SmoothLoss for LogisticScalarLoss {
    fn dim(&self) -> usize {
        1
    }
    fn value(&self, theta: &[f64]) -> f64 {
        let t = self.a * theta[0];
        // log(1 + e^t) - t = log(1 + e^{-t})
        if t > 0.0 {
            (-t).exp().ln_1p()
        } else {
            -t + t.exp().ln_1p()
        }
    }
    fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        vec![self.a * (Self::sigmoid(self.a * theta[0]) - 1.0)]
    }
    fn hessian_apply(&self, theta: &[f64], v: &[f64]) -> Vec<f64> {
        let s = Self::sigmoid(self.a * theta[0]);
        vec![self.a * self.a * s * (1.0 - s) * v[0]]
    }
}

/// Step size, drift cap and slab prior. `log_norm` is the per-active
/// coordinate constant `log Z` carried by `P(·|δ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeContext {
    pub gamma: f64,
    pub drift_cap: f64,
    pub prior: PriorSpec,
    pub log_norm: f64,
}

impl EnvelopeContext {
    /// Context whose `P(·|δ)` includes the prior's log normalizer (zero for
    /// the improper MCP kernel).
    pub fn new(gamma: f64, drift_cap: f64, prior: PriorSpec) -> Result<Self> {
        prior.validate()?;
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!("gamma must be positive, got {gamma}")));
        }
        if !(drift_cap > 0.0) {
            return Err(Error::InvalidArgument(format!("drift cap must be positive, got {drift_cap}")));
        }
        Ok(Self { gamma, drift_cap, prior, log_norm: prior.log_normalizer().unwrap_or(0.0) })
    }

    /// Drop the per-coordinate normalizer, so `P` is the bare penalty.
    pub fn without_normalizer(self) -> Self {
        Self { log_norm: 0.0, ..self }
    }

    /// The default cap `c = 10 √d λ₁/σ²`.
    pub fn default_drift_cap(d: usize, lambda1: f64, sigma2: f64) -> f64 {
        10.0 * (d as f64).sqrt() * lambda1 / sigma2
    }

    fn shrink(&self, x: f64) -> f64 {
        self.prior.shrink(self.gamma, x)
    }
}

/// `P(θ|δ)`; infinite if an inactive coordinate is nonzero.
pub fn penalty(ctx: &EnvelopeContext, theta: &[f64], delta: &InclusionMask) -> f64 {
    let mut total = 0.0;
    for (&t, &on) in theta.iter().zip(delta.bits()) {
        if on {
            total += ctx.prior.neg_log_prior(t) + ctx.log_norm;
        } else if t != 0.0 {
            return f64::INFINITY;
        }
    }
    total
}

/// `h(θ|δ) = ℓ(θ) + P(θ|δ)`.
pub fn objective<L: SmoothLoss + ?Sized>(ctx: &EnvelopeContext, loss: &L, theta: &[f64], delta: &InclusionMask) -> f64 {
    let p = penalty(ctx, theta, delta);
    if p.is_infinite() {
        return p;
    }
    loss.value(theta) + p
}

fn check_inputs<L: SmoothLoss + ?Sized>(loss: &L, theta: &[f64], delta: &InclusionMask) -> Result<()> {
    check_len("theta", loss.dim(), theta.len())?;
    check_len("inclusion mask", loss.dim(), delta.len())?;
    check_finite("theta", theta)
}

/// Everything the sampler needs from one envelope evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopePoint {
    /// `h_γ(θ|δ)`.
    pub value: f64,
    /// `ℓ(θ)`.
    pub loss: f64,
    /// `∇ℓ(θ)`.
    pub grad: Vec<f64>,
    /// `J_γ(θ|δ)`.
    pub j: Vec<f64>,
}

impl EnvelopePoint {
    /// Assemble from a precomputed `ℓ(θ)` and `∇ℓ(θ)` (linearized form).
    pub fn from_parts(ctx: &EnvelopeContext, theta: &[f64], delta: &InclusionMask, loss: f64, grad: Vec<f64>) -> Self {
        let g = ctx.gamma;
        let mut value = loss;
        let mut j = vec![0.0; theta.len()];
        for k in 0..theta.len() {
            let jk = if delta.get(k) {
                let v = ctx.shrink(theta[k] - g * grad[k]);
                value += ctx.prior.neg_log_prior(v) + ctx.log_norm;
                v
            } else {
                0.0
            };
            let step = jk - theta[k];
            value += grad[k] * step + step * step / (2.0 * g);
            j[k] = jk;
        }
        Self { value, loss, grad, j }
    }

    pub fn evaluate<L: SmoothLoss + ?Sized>(ctx: &EnvelopeContext, loss: &L, theta: &[f64], delta: &InclusionMask) -> Self {
        let (l, g) = loss.value_and_gradient(theta);
        Self::from_parts(ctx, theta, delta, l, g)
    }

    /// `G_γ = (θ - J)/γ`.
    pub fn drift(&self, ctx: &EnvelopeContext, theta: &[f64]) -> Vec<f64> {
        theta.iter().zip(&self.j).map(|(t, j)| (t - j) / ctx.gamma).collect()
    }
}

/// `J_γ(θ|δ) = Prox_γ(θ - γ∇ℓ(θ)|δ)`.
pub fn j_map<L: SmoothLoss + ?Sized>(ctx: &EnvelopeContext, loss: &L, theta: &[f64], delta: &InclusionMask) -> Result<Vec<f64>> {
    check_inputs(loss, theta, delta)?;
    let grad = loss.gradient(theta);
    Ok((0..theta.len())
        .map(|k| if delta.get(k) { ctx.shrink(theta[k] - ctx.gamma * grad[k]) } else { 0.0 })
        .collect())
}

/// `h_γ(θ|δ)` through the linearized form.
pub fn fb_envelope<L: SmoothLoss + ?Sized>(ctx: &EnvelopeContext, loss: &L, theta: &[f64], delta: &InclusionMask) -> Result<f64> {
    check_inputs(loss, theta, delta)?;
    let v = EnvelopePoint::evaluate(ctx, loss, theta, delta).value;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite("forward-backward envelope"))
    }
}

/// `h_γ(θ|δ)` through `ℓ - (γ/2)‖∇ℓ‖² + P_γ(θ - γ∇ℓ|δ)`.
pub fn fb_envelope_moreau_form<L: SmoothLoss + ?Sized>(
    ctx: &EnvelopeContext,
    loss: &L,
    theta: &[f64],
    delta: &InclusionMask,
) -> Result<f64> {
    check_inputs(loss, theta, delta)?;
    let (l, grad) = loss.value_and_gradient(theta);
    let g = ctx.gamma;
    let mut v = l;
    for k in 0..theta.len() {
        let w = theta[k] - g * grad[k];
        v -= 0.5 * g * grad[k] * grad[k];
        v += if delta.get(k) {
            let s = ctx.shrink(w);
            ctx.prior.neg_log_prior(s) + ctx.log_norm + (s - w) * (s - w) / (2.0 * g)
        } else {
            w * w / (2.0 * g)
        };
    }
    Ok(v)
}

/// The linearized envelope with `J_γ(θ|δ)` replaced by `Prox_γ(θ|δ)`:
/// `ℓ(θ) + ⟨∇ℓ(θ), p - θ⟩ + P(p|δ) + ‖p - θ‖²/(2γ)` with `p = δ·s_γ(θ)`.
/// For a quadratic `ℓ` it is a quadratic function of the inactive block,
/// and it bounds `h_γ(θ|δ)` from above.
pub fn surrogate_envelope<L: SmoothLoss + ?Sized>(
    ctx: &EnvelopeContext,
    loss: &L,
    theta: &[f64],
    delta: &InclusionMask,
) -> Result<f64> {
    check_inputs(loss, theta, delta)?;
    let (l, grad) = loss.value_and_gradient(theta);
    let mut v = l;
    for k in 0..theta.len() {
        let p = if delta.get(k) {
            let p = ctx.shrink(theta[k]);
            v += ctx.prior.neg_log_prior(p) + ctx.log_norm;
            p
        } else {
            0.0
        };
        let step = p - theta[k];
        v += grad[k] * step + step * step / (2.0 * ctx.gamma);
    }
    Ok(v)
}

/// `G_γ(θ|δ) = (θ - J_γ(θ|δ))/γ`.
pub fn g_drift<L: SmoothLoss + ?Sized>(ctx: &EnvelopeContext, loss: &L, theta: &[f64], delta: &InclusionMask) -> Result<Vec<f64>> {
    let j = j_map(ctx, loss, theta, delta)?;
    Ok(theta.iter().zip(&j).map(|(t, j)| (t - j) / ctx.gamma).collect())
}

/// `Ḡ_γ = c/(c ∨ ‖G_γ‖) · G_γ`.
pub fn g_drift_capped<L: SmoothLoss + ?Sized>(
    ctx: &EnvelopeContext,
    loss: &L,
    theta: &[f64],
    delta: &InclusionMask,
) -> Result<Vec<f64>> {
    let mut g = g_drift(ctx, loss, theta, delta)?;
    cap_in_place(&mut g, ctx.drift_cap);
    Ok(g)
}

/// Rescale `v` to norm at most `c`.
pub fn cap_in_place(v: &mut [f64], c: f64) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > c {
        let s = c / norm;
        v.iter_mut().for_each(|x| *x *= s);
    }
}

/// `∇h_γ(θ|δ) = (I - γ∇²ℓ(θ)) (θ - J_γ)/γ`.
pub fn grad_fb_exact<L: SmoothLoss + ?Sized>(
    ctx: &EnvelopeContext,
    loss: &L,
    theta: &[f64],
    delta: &InclusionMask,
) -> Result<Vec<f64>> {
    let g = g_drift(ctx, loss, theta, delta)?;
    let hg = loss.hessian_apply(theta, &g);
    Ok(g.iter().zip(&hg).map(|(a, b)| a - ctx.gamma * b).collect())
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section minimum of a unimodal `f` on `[lo, hi]`.
fn golden_min(f: &mut dyn FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let m = 0.5 * (a + b);
    let fm = f(m);
    [(c, fc), (d, fd), (m, fm)]
        .into_iter()
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .expect("three candidates")
}

/// Golden-section over `[center - half, center + half]`, doubling the
/// half-width while the minimizer sits at an edge.
fn golden_min_expanding(f: &mut dyn FnMut(f64) -> f64, center: f64, mut half: f64, tol: f64) -> Result<(f64, f64)> {
    for _ in 0..40 {
        let (u, fu) = golden_min(f, center - half, center + half, tol);
        if (u - center).abs() < half * (1.0 - 1e-3) {
            return Ok((u, fu));
        }
        half *= 2.0;
    }
    Err(Error::Bracket(format!("no interior minimizer near {center}")))
}

/// Reference Moreau–Yosida envelope `min_u [h(u) + ‖u - x‖²/(2γ)]` for
/// `d ≤ 2` by (nested) golden-section search. `h` must be convex.
///
/// `x` itself is always a candidate, so the result never exceeds `h(x)`.
pub fn moreau_env_oracle(gamma: f64, h: &dyn Fn(&[f64]) -> f64, x: &[f64]) -> Result<f64> {
    check_finite("oracle point", x)?;
    let half0 = 1.0 + x.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let tol = 1e-11;
    let obj = |u: &[f64]| h(u) + u.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / (2.0 * gamma);
    let best = match x.len() {
        0 => h(&[]),
        1 => golden_min_expanding(&mut |u| obj(&[u]), x[0], half0, tol)?.1,
        2 => {
            let mut inner_err = None;
            let mut outer = |u0: f64| match golden_min_expanding(&mut |u1| obj(&[u0, u1]), x[1], half0, tol) {
                Ok((_, v)) => v,
                Err(e) => {
                    inner_err = Some(e);
                    f64::INFINITY
                }
            };
            let r = golden_min_expanding(&mut outer, x[0], half0, tol)?.1;
            if let Some(e) = inner_err {
                return Err(e);
            }
            r
        }
        d => return Err(Error::Unsupported(format!("Moreau envelope oracle needs d <= 2, got {d}"))),
    };
    Ok(best.min(h(x)))
}

/// `h̃_γ(θ|δ) = min_{u ∈ ℝ^d_δ} [ℓ(u) + P(u|δ) + ‖u - θ‖²/(2γ)]`, searching
/// only the active coordinates (at most two).
pub fn moreau_env_oracle_masked<L: SmoothLoss + ?Sized>(
    ctx: &EnvelopeContext,
    loss: &L,
    theta: &[f64],
    delta: &InclusionMask,
) -> Result<f64> {
    check_inputs(loss, theta, delta)?;
    let active = delta.active();
    let inactive_part: f64 = delta.inactive().iter().map(|&k| theta[k] * theta[k]).sum::<f64>() / (2.0 * ctx.gamma);
    let x: Vec<f64> = active.iter().map(|&k| theta[k]).collect();
    let embed = |u: &[f64]| {
        let mut full = vec![0.0; theta.len()];
        for (&k, &v) in active.iter().zip(u) {
            full[k] = v;
        }
        full
    };
    let h = |u: &[f64]| objective(ctx, loss, &embed(u), delta);
    Ok(inactive_part + moreau_env_oracle(ctx.gamma, &h, &x)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linmodel::{Dataset, LinearModel};
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const LASSO: PriorSpec = PriorSpec::ElasticNet { alpha: 1.0, lambda1: 1.0, lambda2: 0.0, sigma2: 1.0 };

    fn ctx(gamma: f64, prior: PriorSpec) -> EnvelopeContext {
        EnvelopeContext::new(gamma, 1e6, prior).unwrap()
    }

    fn fig1() -> (EnvelopeContext, LogisticScalarLoss) {
        (ctx(0.1, PriorSpec::Laplace { lambda: 0.5 }).without_normalizer(), LogisticScalarLoss { a: 0.8 })
    }

    fn random_model(n: usize, d: usize, seed: u64) -> LinearModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(n, d, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let z = DVector::from_fn(n, |_, _| rng.random::<f64>() * 4.0 - 2.0);
        LinearModel::new(Dataset::new(x, z, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn logistic_loss_is_stable() {
        let l = LogisticScalarLoss { a: 0.8 };
        for x in [-1000.0, -40.0, -3.0, 0.0, 2.0, 50.0, 1000.0] {
            let t: f64 = 0.8 * x;
            let want = if t > 0.0 { (-t).exp().ln_1p() } else { -t + t.exp().ln_1p() };
            let got = l.value(&[x]);
            assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0), "{x}: {got} vs {want}");
        }
    }

    #[test]
    fn j_map_examples() {
        let c = ctx(0.25, LASSO);
        let theta = [1.0, -0.3];
        let ones = InclusionMask::ones(2);
        let j = j_map(&c, &ZeroLoss(2), &theta, &ones).unwrap();
        assert_eq!(j[0], 0.75);
        assert!((j[1] + 0.05).abs() < 1e-15);
        assert_eq!(j_map(&c, &ZeroLoss(2), &theta, &InclusionMask::zeros(2)).unwrap(), vec![0.0, 0.0]);
        let model = LinearModel::new(Dataset::new(DMatrix::identity(1, 1), DVector::zeros(1), 1.0).unwrap()).unwrap();
        assert_eq!(j_map(&c, &model, &[1.0], &InclusionMask::ones(1)).unwrap(), vec![0.5]);
    }

    #[test]
    fn example_one_envelope() {
        // ℓ ≡ 0 and P the indicator of {0}: δ = 0 in d = 1
        for gamma in [0.01, 0.5, 2.0] {
            let c = ctx(gamma, LASSO);
            for i in -20..=20 {
                let x = i as f64 * 0.37;
                let h = fb_envelope(&c, &ZeroLoss(1), &[x], &InclusionMask::zeros(1)).unwrap();
                assert!((h - x * x / (2.0 * gamma)).abs() <= 1e-12 * (1.0 + h), "{x}");
                let g = g_drift(&c, &ZeroLoss(1), &[x], &InclusionMask::zeros(1)).unwrap();
                assert_eq!(g[0], x / gamma);
            }
        }
        let half = ctx(0.5, LASSO);
        let v = moreau_env_oracle_masked(&half, &ZeroLoss(1), &[1.3], &InclusionMask::zeros(1)).unwrap();
        assert!((v - 1.69).abs() < 1e-12);
    }

    #[test]
    fn quadratic_moreau_envelope() {
        let h = |u: &[f64]| 0.5 * u[0] * u[0];
        for x in [-3.0, 0.0, 0.4, 5.0] {
            let v = moreau_env_oracle(1.0, &h, &[x]).unwrap();
            assert!((v - x * x / 4.0).abs() < 1e-9, "{x}: {v}");
        }
        let h2 = |u: &[f64]| 0.5 * u[0] * u[0] + (u[1] - 1.0).abs();
        let v = moreau_env_oracle(1.0, &h2, &[2.0, 3.0]).unwrap();
        assert!((v - (1.0 + 1.5)).abs() < 1e-9, "{v}");
        assert!(moreau_env_oracle(1.0, &h2, &[0.0; 3]).is_err());
    }

    #[test]
    fn equivalent_forms_agree() {
        let model = random_model(5, 3, 7);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for prior in [LASSO, PriorSpec::ElasticNet { alpha: 0.3, lambda1: 2.0, lambda2: 0.5, sigma2: 1.0 }] {
            let c = ctx(model.gamma_from_rule(0.25).unwrap(), prior);
            for _ in 0..200 {
                let theta: Vec<f64> = (0..3).map(|_| rng.random::<f64>() * 6.0 - 3.0).collect();
                let delta = InclusionMask::from_code(3, rng.random_range(0..8));
                let a = fb_envelope(&c, &model, &theta, &delta).unwrap();
                let b = fb_envelope_moreau_form(&c, &model, &theta, &delta).unwrap();
                assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn fixed_point_recovers_objective() {
        let c = ctx(0.25, LASSO);
        // with ℓ ≡ 0, θ = 0 is the unique fixed point of J
        let delta = InclusionMask::ones(2);
        let h = fb_envelope(&c, &ZeroLoss(2), &[0.0, 0.0], &delta).unwrap();
        assert!((h - objective(&c, &ZeroLoss(2), &[0.0, 0.0], &delta)).abs() < 1e-15);
        assert_eq!(g_drift(&c, &ZeroLoss(2), &[0.0, 0.0], &delta).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn cap_halves_double_norm() {
        let mut v = vec![6.0, 8.0];
        cap_in_place(&mut v, 5.0);
        assert_eq!(v, vec![3.0, 4.0]);
        let mut w = vec![0.3, 0.4];
        cap_in_place(&mut w, 5.0);
        assert_eq!(w, vec![0.3, 0.4]);
    }

    #[test]
    fn fig1_ordering_and_gap() {
        let (c, loss) = fig1();
        let one = InclusionMask::ones(1);
        let mut max_gap: f64 = 0.0;
        for i in 0..=200 {
            let x = -10.0 + i as f64 * 0.1;
            let hg = fb_envelope(&c, &loss, &[x], &one).unwrap();
            let ht = moreau_env_oracle_masked(&c, &loss, &[x], &one).unwrap();
            let h = objective(&c, &loss, &[x], &one);
            assert!(hg <= ht + 1e-9 && ht <= h + 1e-9, "{x}: {hg} {ht} {h}");
            max_gap = max_gap.max(h - hg);
        }
        assert!(max_gap < 0.15, "{max_gap}");
    }

    #[test]
    fn monotone_in_gamma() {
        let model = random_model(6, 3, 99);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g_rule = model.gamma_from_rule(0.25).unwrap();
        for _ in 0..100 {
            let theta: Vec<f64> = (0..3).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
            let delta = InclusionMask::from_code(3, rng.random_range(0..8));
            let small = fb_envelope(&ctx(0.3 * g_rule, LASSO), &model, &theta, &delta).unwrap();
            let large = fb_envelope(&ctx(g_rule, LASSO), &model, &theta, &delta).unwrap();
            assert!(small >= large - 1e-12, "{small} < {large}");
        }
    }

    #[test]
    fn exact_gradient_matches_finite_differences() {
        let model = random_model(5, 3, 2024);
        let c = ctx(model.gamma_from_rule(0.25).unwrap(), PriorSpec::ElasticNet {
            alpha: 0.5,
            lambda1: 0.4,
            lambda2: 1.0,
            sigma2: 1.0,
        });
        let delta: InclusionMask = "110".parse().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let threshold = c.gamma * c.prior.slope_at_zero();
        let mut checked = 0;
        while checked < 50 {
            let theta: Vec<f64> = (0..3).map(|_| rng.random::<f64>() * 6.0 - 3.0).collect();
            let grad = model.gradient(&theta);
            let stable = (0..3).all(|k| !delta.get(k) || (theta[k] - c.gamma * grad[k]).abs() > 2.0 * threshold);
            if !stable {
                continue;
            }
            checked += 1;
            let exact = grad_fb_exact(&c, &model, &theta, &delta).unwrap();
            for k in 0..3 {
                let h = 1e-5;
                let mut tp = theta.clone();
                let mut tm = theta.clone();
                tp[k] += h;
                tm[k] -= h;
                let fd = (fb_envelope(&c, &model, &tp, &delta).unwrap() - fb_envelope(&c, &model, &tm, &delta).unwrap())
                    / (2.0 * h);
                assert!((fd - exact[k]).abs() <= 1e-5 * exact[k].abs().max(1.0), "{fd} vs {}", exact[k]);
            }
        }
        // ℓ ≡ 0: exact gradient is the drift
        let z = ctx(0.25, LASSO);
        let t = [0.7, -2.0];
        let ones = InclusionMask::ones(2);
        assert_eq!(grad_fb_exact(&z, &ZeroLoss(2), &t, &ones).unwrap(), g_drift(&z, &ZeroLoss(2), &t, &ones).unwrap());
    }
}
