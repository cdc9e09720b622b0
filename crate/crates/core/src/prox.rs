//! Scalar sparsity priors and their proximal maps.
//!
//! Every prior here is separable, so the restricted prox `Prox_γ(θ|δ)` is
//! the scalar map applied coordinatewise and masked by `δ`.

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, check_len, Error, Result};
use crate::mask::InclusionMask;
use crate::special::ln_erfcx;

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// A scalar slab prior, given through its unnormalized density kernel.
///
/// The negative log-kernels are
///
/// | prior | `-log p(u)` |
/// |---|---|
/// | `ElasticNet` | `α λ₁ \|u\| / σ² + (1-α) λ₂ u² / (2σ²)` |
/// | `Laplace` | `λ \|u\|` |
/// | `GenDoublePareto` | `(α+1) log(1 + \|u\|/(αλ))` |
/// | `Mcp` | `λ\|u\| - u²/(2α)` for `\|u\| ≤ αλ`, `αλ²/2` beyond |
///
/// all equal to zero at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PriorSpec {
    ElasticNet { alpha: f64, lambda1: f64, lambda2: f64, sigma2: f64 },
    Laplace { lambda: f64 },
    GenDoublePareto { alpha: f64, lambda: f64 },
    Mcp { alpha: f64, lambda: f64 },
}

/// Minimizer of `P(u) + (u-x)²/(2γ)` together with the minimum value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxResult {
    pub point: f64,
    pub objective_value: f64,
}

impl PriorSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = |c: bool, msg: &str| {
            if c {
                Ok(())
            } else {
                Err(Error::InvalidPrior(format!("{msg} in {self:?}")))
            }
        };
        match *self {
            PriorSpec::ElasticNet { alpha, lambda1, lambda2, sigma2 } => {
                ok((0.0..=1.0).contains(&alpha), "alpha outside [0, 1]")?;
                ok(sigma2 > 0.0 && sigma2.is_finite(), "sigma2 must be positive")?;
                ok(lambda1.is_finite() && lambda1 >= 0.0, "lambda1 must be nonnegative")?;
                ok(lambda2.is_finite() && lambda2 >= 0.0, "lambda2 must be nonnegative")?;
                ok(alpha == 0.0 || lambda1 > 0.0, "lambda1 must be positive when alpha > 0")?;
                ok(alpha == 1.0 || lambda2 > 0.0, "lambda2 must be positive when alpha < 1")
            }
            PriorSpec::Laplace { lambda } => ok(lambda > 0.0 && lambda.is_finite(), "lambda must be positive"),
            PriorSpec::GenDoublePareto { alpha, lambda } | PriorSpec::Mcp { alpha, lambda } => {
                ok(alpha > 0.0 && alpha.is_finite(), "alpha must be positive")?;
                ok(lambda > 0.0 && lambda.is_finite(), "lambda must be positive")
            }
        }
    }

    /// Whether `-log p` is convex. Only the elastic net and the Laplace
    /// prior are; the two heavy-tailed penalties are concave away from 0.
    pub fn is_convex(&self) -> bool {
        matches!(self, PriorSpec::ElasticNet { .. } | PriorSpec::Laplace { .. })
    }

    /// Whether `u ↦ P(u) + (u-x)²/(2γ)` is convex, i.e. the prox is single
    /// valued and continuous.
    pub fn prox_objective_convex(&self, gamma: f64) -> bool {
        match *self {
            PriorSpec::ElasticNet { .. } | PriorSpec::Laplace { .. } => true,
            PriorSpec::GenDoublePareto { alpha, lambda } => {
                let c = alpha * lambda;
                gamma * (alpha + 1.0) <= c * c
            }
            PriorSpec::Mcp { alpha, .. } => gamma < alpha,
        }
    }

    /// `(αλ₁/σ², (1-α)λ₂/σ²)` for the elastic net.
    fn en_weights(alpha: f64, lambda1: f64, lambda2: f64, sigma2: f64) -> (f64, f64) {
        let l1 = if alpha > 0.0 { alpha * lambda1 / sigma2 } else { 0.0 };
        let l2 = if alpha < 1.0 { (1.0 - alpha) * lambda2 / sigma2 } else { 0.0 };
        (l1, l2)
    }

    /// Right derivative of `-log p` at `0⁺`.
    pub fn slope_at_zero(&self) -> f64 {
        match *self {
            PriorSpec::ElasticNet { alpha, lambda1, lambda2, sigma2 } => {
                Self::en_weights(alpha, lambda1, lambda2, sigma2).0
            }
            PriorSpec::Laplace { lambda } | PriorSpec::Mcp { lambda, .. } => lambda,
            PriorSpec::GenDoublePareto { alpha, lambda } => (alpha + 1.0) / (alpha * lambda),
        }
    }

    /// `-log` of the unnormalized density kernel; zero at the origin.
    pub fn neg_log_prior(&self, x: f64) -> f64 {
        let a = x.abs();
        match *self {
            PriorSpec::ElasticNet { alpha, lambda1, lambda2, sigma2 } => {
                let (l1, l2) = Self::en_weights(alpha, lambda1, lambda2, sigma2);
                l1 * a + 0.5 * l2 * x * x
            }
            PriorSpec::Laplace { lambda } => lambda * a,
            PriorSpec::GenDoublePareto { alpha, lambda } => (alpha + 1.0) * (a / (alpha * lambda)).ln_1p(),
            PriorSpec::Mcp { alpha, lambda } => {
                if a <= alpha * lambda {
                    lambda * a - a * a / (2.0 * alpha)
                } else {
                    0.5 * alpha * lambda * lambda
                }
            }
        }
    }

    /// `neg_log_prior(a) - neg_log_prior(b)`, formed without cancellation
    /// when `a ≈ b`.
    pub fn neg_log_prior_diff(&self, a: f64, b: f64) -> f64 {
        let (aa, ab) = (a.abs(), b.abs());
        match *self {
            PriorSpec::ElasticNet { alpha, lambda1, lambda2, sigma2 } => {
                let (l1, l2) = Self::en_weights(alpha, lambda1, lambda2, sigma2);
                l1 * (aa - ab) + 0.5 * l2 * (a - b) * (a + b)
            }
            PriorSpec::Laplace { lambda } => lambda * (aa - ab),
            PriorSpec::GenDoublePareto { alpha, lambda } => {
                (alpha + 1.0) * ((aa - ab) / (alpha * lambda + ab)).ln_1p()
            }
            PriorSpec::Mcp { alpha, lambda } => {
                let knee = alpha * lambda;
                if aa <= knee && ab <= knee {
                    (aa - ab) * (lambda - (aa + ab) / (2.0 * alpha))
                } else {
                    self.neg_log_prior(a) - self.neg_log_prior(b)
                }
            }
        }
    }

    /// `log ∫ exp(-neg_log_prior(u)) du`, or `None` for the improper MCP
    /// kernel.
    pub fn log_normalizer(&self) -> Option<f64> {
        match *self {
            PriorSpec::ElasticNet { alpha, lambda1, lambda2, sigma2 } => {
                Some(log_z_elastic_net(alpha, lambda1, lambda2, sigma2))
            }
            PriorSpec::Laplace { lambda } => Some((2.0 / lambda).ln()),
            PriorSpec::GenDoublePareto { lambda, .. } => Some((2.0 * lambda).ln()),
            PriorSpec::Mcp { .. } => None,
        }
    }

    /// A subgradient of `-log p` at `x`, taking `sign(0) = 0`.
    pub fn subgradient(&self, x: f64) -> f64 {
        let s = sign0(x);
        let a = x.abs();
        match *self {
            PriorSpec::ElasticNet { alpha, lambda1, lambda2, sigma2 } => {
                let (l1, l2) = Self::en_weights(alpha, lambda1, lambda2, sigma2);
                l1 * s + l2 * x
            }
            PriorSpec::Laplace { lambda } => lambda * s,
            PriorSpec::GenDoublePareto { alpha, lambda } => s * (alpha + 1.0) / (alpha * lambda + a),
            PriorSpec::Mcp { alpha, lambda } => s * (lambda - a / alpha).max(0.0),
        }
    }

    /// `argmin_u [-log p(u) + (u-x)²/(2γ)]` without argument checks.
    ///
    /// When the objective is non-convex (MCP with `γ ≥ α`, GDP with large
    /// `γ`) this still returns a global minimizer, chosen among the
    /// stationary points and kinks; ties go to the point nearest 0.
    pub fn shrink(&self, gamma: f64, x: f64) -> f64 {
        let s = x.signum();
        let a = x.abs();
        match *self {
            PriorSpec::ElasticNet { alpha, lambda1, lambda2, sigma2 } => {
                let (l1, l2) = Self::en_weights(alpha, lambda1, lambda2, sigma2);
                let t = a - gamma * l1;
                if t <= 0.0 {
                    0.0
                } else {
                    s * t / (1.0 + gamma * l2)
                }
            }
            PriorSpec::Laplace { lambda } => {
                let t = a - gamma * lambda;
                if t <= 0.0 {
                    0.0
                } else {
                    s * t
                }
            }
            PriorSpec::Mcp { alpha, lambda } => s * mcp_prox_abs(alpha, lambda, gamma, a),
            PriorSpec::GenDoublePareto { alpha, lambda } => s * gdp_prox_abs(alpha, lambda, gamma, a),
        }
    }

    /// `P(u) + (u-x)²/(2γ)`.
    pub fn prox_objective(&self, gamma: f64, x: f64, u: f64) -> f64 {
        self.neg_log_prior(u) + (u - x) * (u - x) / (2.0 * gamma)
    }

    /// `(P(a) + (a-x)²/2γ) - (P(b) + (b-x)²/2γ)` without cancellation.
    fn prox_objective_diff(&self, gamma: f64, x: f64, a: f64, b: f64) -> f64 {
        self.neg_log_prior_diff(a, b) + (a - b) * ((a - x) + (b - x)) / (2.0 * gamma)
    }
}

fn sign0(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `log Z` for the elastic-net kernel `exp(-αλ₁|u|/σ² - (1-α)λ₂u²/(2σ²))`.
pub(crate) fn log_z_elastic_net(alpha: f64, lambda1: f64, lambda2: f64, sigma2: f64) -> f64 {
    if alpha >= 1.0 {
        return (2.0 * sigma2 / lambda1).ln();
    }
    let sigma = sigma2.sqrt();
    let b = (1.0 - alpha) * lambda2;
    let arg = alpha * lambda1 / (sigma * (2.0 * b).sqrt());
    sigma.ln() + 0.5 * (2.0 * std::f64::consts::PI / b).ln() + ln_erfcx(arg)
}

/// Firm-threshold prox of MCP on `|x|`, by comparing all candidate minimizers.
fn mcp_prox_abs(alpha: f64, lambda: f64, gamma: f64, a: f64) -> f64 {
    let knee = alpha * lambda;
    let p = PriorSpec::Mcp { alpha, lambda };
    let mut cands = [0.0, f64::NAN, f64::NAN, knee];
    if gamma != alpha {
        let u = (a - gamma * lambda) / (1.0 - gamma / alpha);
        if u > 0.0 && u < knee {
            cands[1] = u;
        }
    }
    if a >= knee {
        cands[2] = a;
    }
    // the convex regime has a unique answer; skip the comparison there
    if gamma < alpha {
        return if a >= knee {
            a
        } else if a <= gamma * lambda {
            0.0
        } else {
            cands[1]
        };
    }
    best_candidate(&p, gamma, a, &cands)
}

fn best_candidate(p: &PriorSpec, gamma: f64, a: f64, cands: &[f64]) -> f64 {
    let mut best = 0.0;
    for &u in cands.iter().filter(|u| u.is_finite()) {
        if p.prox_objective_diff(gamma, a, u, best) < 0.0 {
            best = u;
        }
    }
    best
}

/// Prox of the generalized double Pareto penalty on `|x|`.
///
/// On `v ≥ 0` the stationarity condition is `g(v) = 0` with
/// `g(v) = (α+1)γ/(c+v) + v - |x|`, `c = αλ`. `g` is convex with its minimum
/// at `v* = √((α+1)γ) - c`, so the only candidate local minimizer is the
/// largest root, which lies in `[max(v*, 0), |x|]` where `g` increases.
/// Newton from the right end converges monotonically there; a bisection
/// guard covers rounding. The root is compared against `v = 0`.
fn gdp_prox_abs(alpha: f64, lambda: f64, gamma: f64, a: f64) -> f64 {
    let c = alpha * lambda;
    let k = (alpha + 1.0) * gamma;
    let g = |v: f64| k / (c + v) + v - a;
    let lo0 = (k.sqrt() - c).max(0.0);
    if lo0 >= a || g(lo0) >= 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (lo0, a);
    let mut v = a;
    for _ in 0..200 {
        let gv = g(v);
        if gv > 0.0 {
            hi = v;
        } else {
            lo = v;
        }
        if gv == 0.0 || hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        let dg = 1.0 - k / ((c + v) * (c + v));
        let mut next = v - gv / dg;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if next == v {
            break;
        }
        v = next;
    }
    let p = PriorSpec::GenDoublePareto { alpha, lambda };
    if g(0.0) < 0.0 {
        v
    } else {
        best_candidate(&p, gamma, a, &[v])
    }
}

/// Checked scalar prox: `argmin_u [-log p(u) + (u-x)²/(2γ)]`.
pub fn shrink_scalar(prior: &PriorSpec, gamma: f64, x: f64) -> Result<f64> {
    prior.validate()?;
    check_step(gamma)?;
    check_finite("prox argument", &[x])?;
    Ok(prior.shrink(gamma, x))
}

/// `Prox_γ(θ|δ) = δ·s_γ(θ)`.
pub fn prox_restricted(prior: &PriorSpec, gamma: f64, theta: &[f64], delta: &InclusionMask) -> Result<Vec<f64>> {
    prior.validate()?;
    check_step(gamma)?;
    check_len("inclusion mask", theta.len(), delta.len())?;
    check_finite("prox argument", theta)?;
    Ok(theta
        .iter()
        .zip(delta.bits())
        .map(|(&t, &on)| if on { prior.shrink(gamma, t) } else { 0.0 })
        .collect())
}

fn check_step(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("step size must be positive, got {gamma}")))
    }
}

/// Golden-section reference for the scalar prox.
///
/// Searches `[x-B, x+B]` with `B = |x| + 10γ·slope(0)`, narrowing to a width
/// of `1e-12·max(1, |x|)`. Comparisons use [`PriorSpec::neg_log_prior_diff`],
/// so they stay meaningful when the two probes agree to many digits. Only
/// reliable when the prox objective is unimodal.
pub fn prox_oracle_scalar(prior: &PriorSpec, gamma: f64, x: f64) -> Result<ProxResult> {
    prior.validate()?;
    check_step(gamma)?;
    check_finite("prox argument", &[x])?;
    let half = x.abs() + 10.0 * gamma * prior.slope_at_zero();
    if half == 0.0 {
        return Ok(ProxResult { point: 0.0, objective_value: 0.0 });
    }
    let (lo0, hi0) = (x - half, x + half);
    let tol = 1e-12 * x.abs().max(1.0);
    let (mut a, mut b) = (lo0, hi0);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    while b - a > tol {
        if prior.prox_objective_diff(gamma, x, c, d) <= 0.0 {
            b = d;
            d = c;
            c = b - INV_PHI * (b - a);
        } else {
            a = c;
            c = d;
            d = a + INV_PHI * (b - a);
        }
    }
    let mut point = 0.5 * (a + b);
    // snap to the kink when it is inside the final bracket
    if a <= 0.0 && b >= 0.0 && prior.prox_objective_diff(gamma, x, 0.0, point) <= 0.0 {
        point = 0.0;
    }
    let edge = 4.0 * tol;
    if point - lo0 < edge || hi0 - point < edge {
        return Err(Error::Bracket(format!(
            "minimizer {point} reached the bracket edge [{lo0}, {hi0}] for x = {x}, gamma = {gamma}, {prior:?}"
        )));
    }
    Ok(ProxResult { point, objective_value: prior.prox_objective(gamma, x, point) })
}

/// Checked `-log p(x)`.
pub fn neg_log_prior(prior: &PriorSpec, x: f64) -> Result<f64> {
    prior.validate()?;
    check_finite("prior argument", &[x])?;
    Ok(prior.neg_log_prior(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    const LASSO: PriorSpec = PriorSpec::ElasticNet { alpha: 1.0, lambda1: 1.0, lambda2: 0.0, sigma2: 1.0 };
    const RIDGE: PriorSpec = PriorSpec::ElasticNet { alpha: 0.0, lambda1: 0.0, lambda2: 4.0, sigma2: 1.0 };

    #[test]
    fn elastic_net_examples() {
        assert_eq!(shrink_scalar(&LASSO, 0.25, 0.2).unwrap(), 0.0);
        assert_eq!(shrink_scalar(&LASSO, 0.25, 1.0).unwrap(), 0.75);
        assert_eq!(shrink_scalar(&RIDGE, 0.25, 1.0).unwrap(), 0.5);
        // the kink itself resolves to zero
        assert_eq!(shrink_scalar(&LASSO, 0.25, -0.25).unwrap(), 0.0);
        for (p, x, want) in [(LASSO, 1.0, 0.75), (RIDGE, 1.0, 0.5)] {
            let o = prox_oracle_scalar(&p, 0.25, x).unwrap();
            assert!((o.point - want).abs() < 1e-10, "{p:?}: {}", o.point);
        }
    }

    #[test]
    fn mcp_identity_beyond_knee() {
        let p = PriorSpec::Mcp { alpha: 3.0, lambda: 1.0 };
        assert_eq!(shrink_scalar(&p, 0.1, 5.0).unwrap(), 5.0);
    }

    #[test]
    fn laplace_oracle() {
        let p = PriorSpec::Laplace { lambda: 1.0 };
        let o = prox_oracle_scalar(&p, 1.0, 3.0).unwrap();
        assert!((o.point - 2.0).abs() < 1e-8);
        assert_eq!(p.shrink(1.0, 3.0), 2.0);
        let z = prox_oracle_scalar(&LASSO, 0.25, 0.0).unwrap();
        assert_eq!((z.point, z.objective_value), (0.0, 0.0));
    }

    #[test]
    fn gdp_matches_closed_form_root() {
        // (α+1)γ/(c+v) + v - |x| = 0 with α=λ=1, γ=1/2, x=2 is v² - v - 1 = 0
        let p = PriorSpec::GenDoublePareto { alpha: 1.0, lambda: 1.0 };
        let want = 1.618_033_988_749_894_9;
        let got = shrink_scalar(&p, 0.5, 2.0).unwrap();
        assert!((got - want).abs() < 1e-14, "{got}");
        let o = prox_oracle_scalar(&p, 0.5, 2.0).unwrap();
        assert!((o.point - got).abs() < 1e-8);
    }

    #[test]
    fn restricted_prox() {
        let on = InclusionMask::ones(2);
        assert_eq!(prox_restricted(&LASSO, 0.25, &[1.0, 0.2], &on).unwrap(), vec![0.75, 0.0]);
        let first: InclusionMask = "10".parse().unwrap();
        assert_eq!(prox_restricted(&LASSO, 0.25, &[1.0, 99.0], &first).unwrap(), vec![0.75, 0.0]);
        let off = InclusionMask::zeros(2);
        assert_eq!(prox_restricted(&LASSO, 0.25, &[3.0, -7.0], &off).unwrap(), vec![0.0, 0.0]);
        assert!(prox_restricted(&LASSO, 0.25, &[1.0], &on).is_err());
    }

    #[test]
    fn neg_log_prior_examples() {
        let p = PriorSpec::ElasticNet { alpha: 1.0, lambda1: 2.0, lambda2: 0.0, sigma2: 1.0 };
        assert_eq!(neg_log_prior(&p, 1.5).unwrap(), 3.0);
        assert_eq!(neg_log_prior(&p, 0.0).unwrap(), 0.0);
        assert_eq!(neg_log_prior(&PriorSpec::Laplace { lambda: 1.0 }, -2.0).unwrap(), 2.0);
        assert!(neg_log_prior(&p, f64::NAN).is_err());
    }

    #[test]
    fn invalid_priors_rejected() {
        let bad = PriorSpec::ElasticNet { alpha: 1.5, lambda1: 1.0, lambda2: 1.0, sigma2: 1.0 };
        assert!(shrink_scalar(&bad, 0.1, 1.0).is_err());
        assert!(shrink_scalar(&PriorSpec::Laplace { lambda: -1.0 }, 0.1, 1.0).is_err());
        assert!(shrink_scalar(&LASSO, 0.0, 1.0).is_err());
        assert!(shrink_scalar(&LASSO, 0.1, f64::INFINITY).is_err());
    }

    #[test]
    fn nonconvex_mcp_picks_global_minimizer() {
        // γ > α makes the objective non-convex; compare against a dense grid
        let p = PriorSpec::Mcp { alpha: 1.0, lambda: 1.0 };
        let gamma = 2.0;
        for i in 0..400 {
            let x = -4.0 + i as f64 * 0.02;
            let got = p.shrink(gamma, x);
            let best = (0..=80_000)
                .map(|k| -4.0 + k as f64 * 1e-4)
                .map(|u| p.prox_objective(gamma, x, u))
                .fold(f64::INFINITY, f64::min);
            assert!(p.prox_objective(gamma, x, got) <= best + 1e-9, "x = {x}");
        }
    }
}
