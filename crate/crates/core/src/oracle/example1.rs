//! The Gaussian-smoothed point mass: `ν = δ₀` against `ν_γ = N(0, γ)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::envelope::{fb_envelope, EnvelopeContext, ZeroLoss};
use crate::error::{Error, Result};
use crate::mask::InclusionMask;
use crate::prox::PriorSpec;
use crate::quad::integrate;

/// Checks for one `γ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example1Row {
    pub gamma: f64,
    /// `√(2γ/π)`.
    pub w1_exact: f64,
    pub w1_quadrature: f64,
    pub w1_sampled: f64,
    pub w1_stderr: f64,
    /// Largest `|h_γ(x) - x²/(2γ)|` over the probe grid.
    pub envelope_err: f64,
    /// Total variation to the point mass.
    pub tv: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example1Report {
    pub rows: Vec<Example1Row>,
    pub pass: bool,
}

/// Run the three checks for each `γ` with `draws` Gaussian samples.
pub fn example1_suite(gammas: &[f64], draws: usize, seed: u64) -> Result<Example1Report> {
    let mut rows = Vec::with_capacity(gammas.len());
    for (k, &gamma) in gammas.iter().enumerate() {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!("gamma must be > 0, got {gamma}")));
        }
        let w1_exact = (2.0 * gamma / std::f64::consts::PI).sqrt();
        let sd = gamma.sqrt();
        let dens = |x: f64| x * (-x * x / (2.0 * gamma)).exp() / (2.0 * std::f64::consts::PI * gamma).sqrt();
        let w1_quadrature = 2.0 * integrate(dens, 0.0, 40.0 * sd, 1e-14, 1e-13)?;

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let normal = Normal::new(0.0, sd).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let n = draws.max(2);
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let a: f64 = normal.sample(&mut rng);
            let a = a.abs();
            s += a;
            s2 += a * a;
        }
        let mean = s / n as f64;
        let var = (s2 / n as f64 - mean * mean) * n as f64 / (n - 1) as f64;
        let w1_stderr = (var / n as f64).sqrt();

        let ctx = EnvelopeContext::new(gamma, f64::INFINITY, PriorSpec::Laplace { lambda: 1.0 })?;
        let spike = InclusionMask::zeros(1);
        let mut envelope_err: f64 = 0.0;
        for i in -200..=200 {
            let x = i as f64 * 0.05 * sd;
            let v = fb_envelope(&ctx, &ZeroLoss(1), &[x], &spike)?;
            envelope_err = envelope_err.max((v - x * x / (2.0 * gamma)).abs());
        }
        // ν_γ puts no mass on {0}; ν puts all of it there.
        let tv = 2.0;
        let pass = (w1_quadrature - w1_exact).abs() <= 1e-8 && (mean - w1_exact).abs() <= 4.0 * w1_stderr && envelope_err <= 1e-12;
        rows.push(Example1Row { gamma, w1_exact, w1_quadrature, w1_sampled: mean, w1_stderr, envelope_err, tv, pass });
    }
    let pass = rows.iter().all(|r| r.pass);
    Ok(Example1Report { rows, pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pi_over_two_has_unit_distance() {
        let r = example1_suite(&[std::f64::consts::FRAC_PI_2, 0.5], 20_000, 7).unwrap();
        assert!((r.rows[0].w1_exact - 1.0).abs() < 1e-15);
        assert!((r.rows[1].w1_exact - 0.564_189_583_547_756_3).abs() < 1e-12);
        assert!(r.pass);
        assert!(r.rows.iter().all(|row| row.tv == 2.0));
    }
}
