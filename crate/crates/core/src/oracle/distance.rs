//! Distances between tabulated posteriors and simple sample-based metrics.

use crate::error::{Error, Result};
use crate::mask::InclusionMask;

use super::quadrature::QuadraturePosterior;

/// `Σ|p - q|` over two probability vectors. This is the `‖f‖_∞ ≤ 1`
/// normalization, so disjoint supports give 2.
pub fn tv_discrete(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch { what: "probability vectors", expected: p.len(), found: q.len() });
    }
    Ok(p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum())
}

/// Total variation between two posteriors tabulated on the same grids.
pub fn tv_distance(p: &QuadraturePosterior, q: &QuadraturePosterior) -> Result<f64> {
    if p.d != q.d || p.panels.len() != q.panels.len() {
        return Err(Error::InvalidArgument("grid mismatch: different pattern sets".into()));
    }
    let mut tv = 0.0;
    for (a, b) in p.panels.iter().zip(&q.panels) {
        if a.delta != b.delta || a.dims != b.dims || a.axes != b.axes {
            return Err(Error::InvalidArgument(format!("grid mismatch at pattern {}", a.delta)));
        }
        tv += a.mass.iter().zip(&b.mass).map(|(x, y)| (a.weight * x - b.weight * y).abs()).sum::<f64>();
    }
    Ok(tv)
}

/// `W₁` between the empirical law of `samples` and a point mass.
pub fn wasserstein1_1d(samples: &[f64], point: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyTrace);
    }
    Ok(samples.iter().map(|x| (x - point).abs()).sum::<f64>() / samples.len() as f64)
}

const RADII: [f64; 5] = [0.05, 0.1, 0.25, 0.5, 1.0];

/// A lower estimate of the bounded-Lipschitz distance: the largest gap
/// `|E_p f - E_q f|` over a fixed family with `‖f‖_∞ + ‖f‖_L ≤ 1` for the
/// metric `√(‖δ-δ'‖₀² + ‖θ-θ'‖²)`.
pub fn beta_metric_lower(p: &QuadraturePosterior, q: &QuadraturePosterior) -> Result<f64> {
    if p.d != q.d {
        return Err(Error::DimensionMismatch { what: "posterior dimension", expected: p.d, found: q.d });
    }
    let d = p.d;
    let means = p.theta_mean();
    let patterns: Vec<InclusionMask> = InclusionMask::enumerate(d).collect();
    let len = RADII.len() * (4 * d + 1) + d + patterns.len();
    let mut family = |dl: &InclusionMask, th: &[f64], out: &mut [f64]| {
        let mut k = 0;
        let off: f64 = (0..d).filter(|&j| !dl.get(j)).map(|j| th[j] * th[j]).sum::<f64>().sqrt();
        for &a in &RADII {
            let t = 1.0 / (1.0 + a);
            for j in 0..d {
                for c in [0.0, means[j]] {
                    out[k] = t * (th[j] - c).clamp(-a, a);
                    out[k + 1] = t * (th[j] - c).abs().min(a);
                    k += 2;
                }
            }
            out[k] = t * off.min(a);
            k += 1;
        }
        for j in 0..d {
            out[k] = if dl.get(j) { 0.5 } else { 0.0 };
            k += 1;
        }
        for m in &patterns {
            out[k] = if dl == m { 0.5 } else { 0.0 };
            k += 1;
        }
    };
    let ep = p.expect_many(len, &mut family);
    let eq = q.expect_many(len, &mut family);
    Ok(ep.iter().zip(&eq).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discrete_tv_conventions() {
        assert_eq!(tv_discrete(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        assert_eq!(tv_discrete(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 2.0);
        assert!(tv_discrete(&[1.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn w1_to_point() {
        assert_eq!(wasserstein1_1d(&[-1.0, 3.0], 0.0).unwrap(), 2.0);
        assert!(wasserstein1_1d(&[], 0.0).is_err());
    }
}
