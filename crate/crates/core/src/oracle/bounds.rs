//! Closed-form upper bounds on `ϱ_γ` and on the β-metric gap.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linmodel::{HyperState, LinearModel};

/// Constants entering the general bound on `ϱ_γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremBoundInputs {
    /// `λ_max(X'X)/σ²`.
    pub l1: f64,
    /// Curvature constant; taken equal to `l1` for the linear model.
    pub l2: f64,
    /// `max_δ c(δ) = (αλ₁/σ²)² d`.
    pub max_c: f64,
    /// `ℓ(0) + max_δ P(0|δ)`.
    pub r_bound: f64,
}

impl TheoremBoundInputs {
    pub fn from_model(model: &LinearModel, phi: &HyperState) -> Result<Self> {
        let s2 = model.sigma2();
        let d = model.data().d() as f64;
        let l1 = model.lambda_max() / s2;
        let slope = phi.alpha * phi.lambda1 / s2;
        let ell0 = model.data().z().norm_squared() / (2.0 * s2);
        let log_z = phi.log_z(s2)?;
        Ok(Self { l1, l2: l1, max_c: slope * slope * d, r_bound: ell0 + (d * log_z).max(0.0) })
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [("l1", self.l1), ("l2", self.l2), ("max_c", self.max_c)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// `3γ[½ max_δ c(δ) + d(L₁ + 2L₂) + L₂ R]`, valid when `4γ max(L₁, L₂) ≤ 1`.
pub fn thm2_bound(inputs: &TheoremBoundInputs, gamma: f64, d: usize) -> Result<f64> {
    inputs.validate()?;
    if gamma == 0.0 {
        return Ok(0.0);
    }
    let lip = inputs.l1.max(inputs.l2);
    if !(gamma > 0.0) || 4.0 * gamma * lip > 1.0 + 1e-12 {
        return Err(Error::StepSize { gamma, lipschitz: lip });
    }
    let d = d as f64;
    Ok(3.0 * gamma * (0.5 * inputs.max_c + d * (inputs.l1 + 2.0 * inputs.l2) + inputs.l2 * inputs.r_bound))
}

/// `(3γ/2)(αλ₁/σ²)² d + (3γ/σ²) λ_max (3d + ‖z‖²/(2σ²))`, valid under the
/// step-size rule `γ ≤ σ²/(4λ_max)`.
pub fn cor1_bound(model: &LinearModel, phi: &HyperState, gamma: f64, d: usize) -> Result<f64> {
    if gamma == 0.0 {
        return Ok(0.0);
    }
    let s2 = model.sigma2();
    let lmax = model.lambda_max();
    if !(gamma > 0.0) || 4.0 * gamma * lmax / s2 > 1.0 + 1e-12 {
        return Err(Error::StepSize { gamma, lipschitz: lmax / s2 });
    }
    let slope = phi.alpha * phi.lambda1 / s2;
    let d = d as f64;
    let zz = model.data().z().norm_squared();
    Ok(1.5 * gamma * slope * slope * d + 3.0 * gamma / s2 * lmax * (3.0 * d + zz / (2.0 * s2)))
}

/// `√(γd) + 2(1 - e^{-ϱ})`.
pub fn beta_metric_bound(gamma: f64, d: usize, varrho: f64) -> f64 {
    if gamma == 0.0 {
        return 0.0;
    }
    (gamma * d as f64).sqrt() + 2.0 * (1.0 - (-varrho).exp())
}
