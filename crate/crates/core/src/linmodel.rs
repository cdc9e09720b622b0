//! Gaussian linear regression `z = Xθ + σε` with an elastic-net slab.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::envelope::SmoothLoss;
use crate::error::{check_finite, check_len, Error, Result};
use crate::prox::{log_z_elastic_net, PriorSpec};

pub use crate::special::erfcx;

const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITER: usize = 10_000;
const POWER_SEED: u64 = 0x5eed_1a4b_da3a_c0de;

/// Design matrix, response and known noise variance.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    z: DVector<f64>,
    sigma2: f64,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, z: DVector<f64>, sigma2: f64) -> Result<Self> {
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(Error::InvalidArgument("design matrix must be at least 1×1".into()));
        }
        check_len("response length vs design rows", x.nrows(), z.len())?;
        check_finite("design matrix", x.as_slice())?;
        check_finite("response", z.as_slice())?;
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::InvalidArgument(format!("noise variance must be positive, got {sigma2}")));
        }
        Ok(Self { x, z, sigma2 })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn z(&self) -> &DVector<f64> {
        &self.z
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// The same design and response with a different noise variance.
    pub fn with_sigma2(&self, sigma2: f64) -> Result<Self> {
        Self::new(self.x.clone(), self.z.clone(), sigma2)
    }

    /// `ℓ(θ) = ‖z - Xθ‖²/(2σ²)`, evaluated through the residual.
    pub fn neg_log_lik(&self, theta: &[f64]) -> Result<f64> {
        check_len("theta", self.d(), theta.len())?;
        let r = &self.z - &self.x * DVector::from_column_slice(theta);
        Ok(r.norm_squared() / (2.0 * self.sigma2))
    }

    /// `∇ℓ(θ) = -X'(z - Xθ)/σ²`.
    pub fn grad_neg_log_lik(&self, theta: &[f64]) -> Result<Vec<f64>> {
        check_len("theta", self.d(), theta.len())?;
        let r = &self.z - &self.x * DVector::from_column_slice(theta);
        let g = self.x.tr_mul(&r) / -self.sigma2;
        Ok(g.as_slice().to_vec())
    }

    /// Largest eigenvalue of `X'X` by power iteration.
    ///
    /// Iterates on whichever of `X'X` (d×d) and `XX'` (n×n) is smaller; they
    /// share their nonzero spectrum. The start vector comes from a fixed
    /// seed, so the result is deterministic.
    pub fn lambda_max(&self) -> Result<f64> {
        let a = if self.n() < self.d() {
            &self.x * self.x.transpose()
        } else {
            self.x.tr_mul(&self.x)
        };
        power_iteration(&a)
    }

    /// `κ̄(1) = max_k ‖X_k‖²/n`.
    pub fn max_column_norm2_over_n(&self) -> f64 {
        let n = self.n() as f64;
        self.x
            .column_iter()
            .map(|c| c.norm_squared())
            .fold(0.0, f64::max)
            / n
    }

    /// The default `λ₁ = 4σ√(n κ̄(1) log d)`.
    pub fn default_lambda1(&self) -> f64 {
        let d = (self.d() as f64).max(2.0);
        4.0 * self.sigma2.sqrt() * (self.n() as f64 * self.max_column_norm2_over_n() * d.ln()).sqrt()
    }
}

fn power_iteration(a: &DMatrix<f64>) -> Result<f64> {
    let m = a.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_SEED);
    let mut v = DVector::from_fn(m, |_, _| rng.random::<f64>() + 0.5);
    v /= v.norm();
    let mut estimate = 0.0;
    for iter in 0..POWER_MAX_ITER {
        let w = a * &v;
        let next = v.dot(&w);
        let norm = w.norm();
        if norm == 0.0 {
            return Ok(0.0);
        }
        v = w / norm;
        if iter > 0 && (next - estimate).abs() <= POWER_TOL * next.abs() {
            return Ok(next.max(estimate));
        }
        estimate = next;
    }
    Err(Error::PowerIteration { iterations: POWER_MAX_ITER, estimate })
}

/// Step size `γ = γ₀σ²/λ_max(X'X)`, nudged down if rounding would break
/// `(4γ/σ²) λ_max ≤ 1`.
pub fn gamma_from_rule(sigma2: f64, lambda_max: f64, gamma0: f64) -> Result<f64> {
    if !(gamma0 > 0.0 && gamma0 <= 0.25) {
        return Err(Error::InvalidArgument(format!("gamma0 must lie in (0, 1/4], got {gamma0}")));
    }
    if !(lambda_max > 0.0 && lambda_max.is_finite()) {
        return Err(Error::InvalidArgument(format!("lambda_max must be positive, got {lambda_max}")));
    }
    let mut gamma = gamma0 * sigma2 / lambda_max;
    // same expression as the kernel-side check, so both round alike
    while 4.0 * gamma * (lambda_max / sigma2) > 1.0 {
        gamma = f64::from_bits(gamma.to_bits() - 1);
    }
    Ok(gamma)
}

/// Hyperparameters `φ = (q, λ₁, λ₂)` plus the fixed `α`, `u` and the
/// support `[a_min, M]` of the uniform hyperprior on each λ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperState {
    pub q: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub alpha: f64,
    pub u: f64,
    pub a_min: f64,
    pub m_upper: f64,
}

impl HyperState {
    /// Defaults `a_min = 1e-5` and `M = λ_max / max(1-α, 1e-8)`.
    pub fn new(q: f64, lambda1: f64, lambda2: f64, alpha: f64, u: f64, lambda_max: f64) -> Result<Self> {
        let s = Self {
            q,
            lambda1,
            lambda2,
            alpha,
            u,
            a_min: 1e-5,
            m_upper: lambda_max / (1.0 - alpha).max(1e-8),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::InvalidArgument(format!("{msg}: {self:?}")));
        if !(self.q > 0.0 && self.q < 1.0) {
            return fail("q must lie in (0, 1)");
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return fail("alpha must lie in [0, 1]");
        }
        if !(self.u > 1.0) {
            return fail("u must exceed 1");
        }
        if !(self.a_min > 0.0 && self.a_min < self.m_upper) {
            return fail("need 0 < a_min < M");
        }
        if !self.lambdas_in_support(self.lambda1, self.lambda2) {
            return fail("lambdas outside [a_min, M]");
        }
        Ok(())
    }

    pub fn lambdas_in_support(&self, l1: f64, l2: f64) -> bool {
        let inside = |l: f64| l >= self.a_min && l <= self.m_upper;
        inside(l1) && inside(l2)
    }

    /// The elastic-net slab attached to this state.
    pub fn prior(&self, sigma2: f64) -> PriorSpec {
        PriorSpec::ElasticNet {
            alpha: self.alpha,
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            sigma2,
        }
    }

    /// `log Z(φ)`.
    pub fn log_z(&self, sigma2: f64) -> Result<f64> {
        log_z(self.alpha, self.lambda1, self.lambda2, sigma2)
    }

    /// `log` of the hyperprior density up to a constant: `q ~ Beta(1, d^u)`
    /// and uniform λ's on `[a_min, M]`.
    pub fn log_hyperprior(&self, d: usize) -> f64 {
        if !self.lambdas_in_support(self.lambda1, self.lambda2) || !(self.q > 0.0 && self.q < 1.0) {
            return f64::NEG_INFINITY;
        }
        ((d as f64).powf(self.u) - 1.0) * (-self.q).ln_1p()
    }
}

/// `log Z` of the elastic-net kernel `exp(-αλ₁|x|/σ² - (1-α)λ₂x²/(2σ²))`.
pub fn log_z(alpha: f64, lambda1: f64, lambda2: f64, sigma2: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) || !(sigma2 > 0.0) {
        return Err(Error::InvalidPrior(format!("alpha = {alpha}, sigma2 = {sigma2}")));
    }
    if alpha < 1.0 && !(lambda2 > 0.0) {
        return Err(Error::InvalidPrior(format!("lambda2 must be positive when alpha < 1, got {lambda2}")));
    }
    if alpha > 0.0 && !(lambda1 > 0.0) {
        return Err(Error::InvalidPrior(format!("lambda1 must be positive when alpha > 0, got {lambda1}")));
    }
    Ok(log_z_elastic_net(alpha, lambda1, lambda2, sigma2))
}

/// `log π_δ = ‖δ‖₀ log q + (d - ‖δ‖₀) log(1-q)`.
pub fn log_prior_delta(active: usize, d: usize, q: f64) -> f64 {
    let k = active as f64;
    let off = (d - active) as f64;
    let a = if active == 0 { 0.0 } else { k * q.ln() };
    let b = if active == d { 0.0 } else { off * (-q).ln_1p() };
    a + b
}

/// The quadratic loss with cached Gram quantities, used on the sampler's hot
/// path.
#[derive(Debug, Clone)]
pub struct LinearModel {
    data: Dataset,
    gram: DMatrix<f64>,
    xtz: DVector<f64>,
    zz: f64,
    lambda_max: f64,
}

impl LinearModel {
    pub fn new(data: Dataset) -> Result<Self> {
        let lambda_max = data.lambda_max()?;
        Ok(Self::with_lambda_max(data, lambda_max))
    }

    pub fn with_lambda_max(data: Dataset, lambda_max: f64) -> Self {
        let gram = data.x.tr_mul(&data.x);
        let xtz = data.x.tr_mul(&data.z);
        let zz = data.z.norm_squared();
        Self { data, gram, xtz, zz, lambda_max }
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn sigma2(&self) -> f64 {
        self.data.sigma2
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn xtz(&self) -> &DVector<f64> {
        &self.xtz
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    /// `L₁ = λ_max(X'X)/σ²`, the Lipschitz constant of `∇ℓ`.
    pub fn lipschitz(&self) -> f64 {
        self.lambda_max / self.data.sigma2
    }

    pub fn gamma_from_rule(&self, gamma0: f64) -> Result<f64> {
        gamma_from_rule(self.data.sigma2, self.lambda_max, gamma0)
    }

    /// `ℓ(θ)` and `∇ℓ(θ)` sharing one `X'Xθ` product.
    pub fn value_grad(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        let t = DVector::from_column_slice(theta);
        let gt = &self.gram * &t;
        let s2 = self.data.sigma2;
        let quad = t.dot(&gt);
        let lin = t.dot(&self.xtz);
        let value = ((self.zz - 2.0 * lin + quad) / (2.0 * s2)).max(0.0);
        let grad = (gt - &self.xtz) / s2;
        (value, grad.as_slice().to_vec())
    }
}

impl SmoothLoss for LinearModel {
    fn dim(&self) -> usize {
        self.data.d()
    }

    fn value(&self, theta: &[f64]) -> f64 {
        self.value_grad(theta).0
    }

    fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        self.value_grad(theta).1
    }

    fn value_and_gradient(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        self.value_grad(theta)
    }

    fn hessian_apply(&self, _theta: &[f64], v: &[f64]) -> Vec<f64> {
        let hv = &self.gram * DVector::from_column_slice(v) / self.data.sigma2;
        hv.as_slice().to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate_real_line;

    fn seeded_matrix(n: usize, d: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, d, |_, _| rng.random::<f64>() * 2.0 - 1.0)
    }

    #[test]
    fn likelihood_examples() {
        let data = Dataset::new(DMatrix::from_element(2, 1, 1.0), DVector::from_vec(vec![1.0, 3.0]), 1.0).unwrap();
        assert_eq!(data.neg_log_lik(&[2.0]).unwrap(), 1.0);
        assert_eq!(data.grad_neg_log_lik(&[2.0]).unwrap(), vec![0.0]);
        assert_eq!(data.neg_log_lik(&[0.0]).unwrap(), 5.0);
        assert!(data.neg_log_lik(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn rejects_bad_data() {
        let x = DMatrix::from_element(2, 2, 1.0);
        assert!(Dataset::new(x.clone(), DVector::zeros(3), 1.0).is_err());
        assert!(Dataset::new(x.clone(), DVector::zeros(2), 0.0).is_err());
        assert!(Dataset::new(x, DVector::from_vec(vec![f64::NAN, 0.0]), 1.0).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let x = seeded_matrix(6, 4, 3);
        let z = DVector::from_fn(6, |i, _| i as f64 * 0.3 - 0.7);
        let data = Dataset::new(x, z, 0.7).unwrap();
        let theta = [0.3, -1.1, 0.5, 2.0];
        let g = data.grad_neg_log_lik(&theta).unwrap();
        for j in 0..4 {
            let h = 1e-6;
            let mut tp = theta;
            let mut tm = theta;
            tp[j] += h;
            tm[j] -= h;
            let fd = (data.neg_log_lik(&tp).unwrap() - data.neg_log_lik(&tm).unwrap()) / (2.0 * h);
            assert!((fd - g[j]).abs() <= 1e-6 * g[j].abs().max(1.0), "{j}: {fd} vs {}", g[j]);
        }
        let model = LinearModel::new(data.clone()).unwrap();
        let (v, gg) = model.value_grad(&theta);
        assert!((v - data.neg_log_lik(&theta).unwrap()).abs() < 1e-12);
        for j in 0..4 {
            assert!((gg[j] - g[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn lambda_max_examples() {
        let id = Dataset::new(DMatrix::identity(4, 4), DVector::zeros(4), 1.0).unwrap();
        assert!((id.lambda_max().unwrap() - 1.0).abs() < 1e-12);
        let diag = Dataset::new(DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0])), DVector::zeros(3), 1.0)
            .unwrap();
        assert!((diag.lambda_max().unwrap() - 9.0).abs() < 1e-8);
        let x = seeded_matrix(10, 20, 11);
        let dense = x.tr_mul(&x).symmetric_eigen().eigenvalues.max();
        let data = Dataset::new(x, DVector::zeros(10), 1.0).unwrap();
        let lm = data.lambda_max().unwrap();
        assert!(((lm - dense) / dense).abs() < 1e-8, "{lm} vs {dense}");
    }

    #[test]
    fn gamma_rule() {
        assert_eq!(gamma_from_rule(1.0, 4.0, 0.25).unwrap(), 1.0 / 16.0);
        assert_eq!(gamma_from_rule(1.0, 1.0, 0.25).unwrap(), 0.25);
        assert_eq!(gamma_from_rule(2.0, 5.0, 0.01).unwrap(), 0.01 * 2.0 / 5.0);
        assert!(gamma_from_rule(1.0, 1.0, 0.3).is_err());
        assert!(gamma_from_rule(1.0, 1.0, 0.0).is_err());
        for lm in [3.0, 7.1, 0.37, 1e5 / 3.0] {
            for s2 in [0.3, 1.0, 2.7] {
                let g = gamma_from_rule(s2, lm, 0.25).unwrap();
                assert!(4.0 * g * (lm / s2) <= 1.0);
            }
        }
    }

    #[test]
    fn log_z_examples() {
        assert_eq!(log_z(1.0, 2.0, 0.0, 1.0).unwrap(), 0.0);
        let gauss = log_z(0.0, 0.0, 1.0, 1.0).unwrap();
        assert!((gauss - (2.0 * std::f64::consts::PI).sqrt().ln()).abs() < 1e-14);
        // 40-digit quadrature of the kernel
        let v = log_z(0.5, 1.0, 1.0, 1.0).unwrap();
        assert!((v - 0.780_500_993_647_560_99).abs() < 1e-13);
        assert!(log_z(0.5, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn log_z_matches_quadrature_on_grid() {
        for &alpha in &[0.0, 0.1, 0.5, 0.9, 0.99] {
            for &(l1, l2) in &[(0.1, 0.1), (1.0, 3.0), (30.0, 0.01), (5.0, 200.0)] {
                for &s2 in &[0.25, 1.0, 4.0] {
                    let p = PriorSpec::ElasticNet { alpha, lambda1: l1, lambda2: l2, sigma2: s2 };
                    let q = integrate_real_line(|x| (-p.neg_log_prior(x)).exp(), 0.0, 0.0, 1e-13).unwrap();
                    let lz = log_z(alpha, l1, l2, s2).unwrap();
                    assert!(((lz.exp() - q) / q).abs() < 1e-8, "{alpha} {l1} {l2} {s2}: {} vs {q}", lz.exp());
                }
            }
        }
    }

    #[test]
    fn log_prior_delta_examples() {
        assert!((log_prior_delta(2, 5, 0.5) + 5.0 * 2f64.ln()).abs() < 1e-14);
        assert!((log_prior_delta(0, 3, 0.1) - 3.0 * 0.9f64.ln()).abs() < 1e-14);
        assert!((log_prior_delta(2, 5, 0.2) - (2.0 * 0.2f64.ln() + 3.0 * 0.8f64.ln())).abs() < 1e-14);
    }

    #[test]
    fn hyper_state_bounds() {
        let h = HyperState::new(0.1, 1.0, 1.0, 0.5, 2.0, 10.0).unwrap();
        assert_eq!(h.m_upper, 20.0);
        assert!(h.log_hyperprior(5).is_finite());
        let out = HyperState { lambda1: 21.0, ..h };
        assert_eq!(out.log_hyperprior(5), f64::NEG_INFINITY);
        assert!(HyperState::new(0.1, 1.0, 1.0, 0.5, 0.5, 10.0).is_err());
    }
}
