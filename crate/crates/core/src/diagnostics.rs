//! Run metrics (support recovery, relative error) and MCMC mixing summaries.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::InclusionMask;
use crate::sampler::TraceRecord;

/// The data-generating coefficients and their support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthSpec {
    pub theta: Vec<f64>,
    pub delta: InclusionMask,
}

impl TruthSpec {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        crate::error::check_finite("true coefficients", &theta)?;
        let delta = InclusionMask::from_bits(theta.iter().map(|t| t.abs() > 0.0).collect());
        Ok(Self { theta, delta })
    }

    pub fn sparsity(&self) -> usize {
        self.delta.count()
    }
}

/// `‖θ - θ★‖ / ‖θ★‖`.
pub fn relative_error(theta: &[f64], truth: &[f64]) -> Result<f64> {
    crate::error::check_len("estimate vs truth", truth.len(), theta.len())?;
    let denom = truth.iter().map(|t| t * t).sum::<f64>().sqrt();
    if denom == 0.0 {
        return Err(Error::Degenerate("relative error against a zero truth vector".into()));
    }
    let num = theta.iter().zip(truth).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    Ok(num / denom)
}

/// Sensitivity, precision and their harmonic mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportScores {
    pub sen: f64,
    pub prec: f64,
    pub f: f64,
}

/// Support-recovery scores of `selected` against `truth`. An empty
/// selection has precision 1 and F-score 0.
pub fn sen_prec_f(selected: &[bool], truth: &InclusionMask) -> Result<SupportScores> {
    crate::error::check_len("selection vs truth", truth.len(), selected.len())?;
    let positives = truth.count();
    if positives == 0 {
        return Err(Error::InvalidArgument("true support is empty".into()));
    }
    let picked = selected.iter().filter(|&&s| s).count();
    let hits = selected.iter().zip(truth.bits()).filter(|(s, t)| **s && **t).count();
    let sen = hits as f64 / positives as f64;
    if picked == 0 {
        return Ok(SupportScores { sen, prec: 1.0, f: 0.0 });
    }
    let prec = hits as f64 / picked as f64;
    let f = if sen + prec > 0.0 { 2.0 * sen * prec / (sen + prec) } else { 0.0 };
    Ok(SupportScores { sen, prec, f })
}

/// [`sen_prec_f`] on the exact test `|θ_j| > 0`.
pub fn sen_prec_f_theta(theta: &[f64], truth: &InclusionMask) -> Result<SupportScores> {
    let sel: Vec<bool> = theta.iter().map(|t| t.abs() > 0.0).collect();
    sen_prec_f(&sel, truth)
}

/// [`sen_prec_f`] after thresholding marginal probabilities at `cut`.
pub fn sen_prec_f_probs(probs: &[f64], truth: &InclusionMask, cut: f64) -> Result<SupportScores> {
    let sel: Vec<bool> = probs.iter().map(|&p| p > cut).collect();
    sen_prec_f(&sel, truth)
}

/// Sample autocorrelations at lags `0..=max_lag`, normalized by `n` at
/// every lag.
pub fn autocorr(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = series.len();
    if n == 0 {
        return Err(Error::EmptyTrace);
    }
    if n <= max_lag {
        return Err(Error::InvalidArgument(format!("series of length {n} is too short for lag {max_lag}")));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let c: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let c0 = c.iter().map(|x| x * x).sum::<f64>();
    if c0 <= 0.0 {
        return Err(Error::Degenerate("autocorrelation of a constant series".into()));
    }
    Ok((0..=max_lag)
        .map(|k| c[..n - k].iter().zip(&c[k..]).map(|(a, b)| a * b).sum::<f64>() / c0)
        .collect())
}

/// Monte Carlo standard error of the mean by non-overlapping batch means
/// with `⌊√n⌋` batches.
pub fn batch_means_stderr(series: &[f64]) -> Result<f64> {
    let n = series.len();
    if n < 4 {
        return Err(Error::EmptyTrace);
    }
    let batches = (n as f64).sqrt().floor() as usize;
    let size = n / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| series[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - grand) * (m - grand)).sum::<f64>() / (batches - 1) as f64;
    Ok((var / batches as f64).sqrt())
}

/// `n / (1 + 2 Σ ρ_k)`, summing lags until the first non-positive
/// autocorrelation (or `max_lag`).
pub fn effective_sample_size(series: &[f64], max_lag: usize) -> Result<f64> {
    let lag = max_lag.min(series.len().saturating_sub(1));
    let rho = autocorr(series, lag)?;
    let tail: f64 = rho[1..].iter().take_while(|&&r| r > 0.0).sum();
    Ok(series.len() as f64 / (1.0 + 2.0 * tail))
}

/// Per-kernel acceptance rates; `None` when a kernel never ran.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceRates {
    pub mala: Option<f64>,
    pub ind: Option<f64>,
    pub rwm: Option<f64>,
}

pub fn acceptance_rates(trace: &[TraceRecord]) -> Result<AcceptanceRates> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let rate = |pick: fn(&TraceRecord) -> Option<bool>| {
        let (mut a, mut n) = (0usize, 0usize);
        for r in trace {
            if let Some(acc) = pick(r) {
                n += 1;
                a += acc as usize;
            }
        }
        (n > 0).then(|| a as f64 / n as f64)
    };
    Ok(AcceptanceRates { mala: rate(|r| r.acc_mala), ind: rate(|r| r.acc_ind), rwm: rate(|r| r.acc_rwm) })
}

/// Mean of `δ_j` over records with `iter > burn_in`.
pub fn inclusion_probs(trace: &[TraceRecord], burn_in: u64) -> Result<Vec<f64>> {
    let kept: Vec<&TraceRecord> = trace.iter().filter(|r| r.iter > burn_in).collect();
    let first = kept.first().ok_or(Error::EmptyTrace)?;
    let d = first.delta.len();
    let mut p = vec![0.0; d];
    for r in &kept {
        for (j, pj) in p.iter_mut().enumerate() {
            *pj += r.delta.get(j) as u8 as f64;
        }
    }
    p.iter_mut().for_each(|x| *x /= kept.len() as f64);
    Ok(p)
}

/// Write rows of numbers under a header as CSV.
pub fn write_csv_table<W: Write>(out: W, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(|e| Error::Csv { line: 1, msg: e.to_string() })?;
    for (i, row) in rows.iter().enumerate() {
        if row.len() != header.len() {
            return Err(Error::DimensionMismatch { what: "CSV row width", expected: header.len(), found: row.len() });
        }
        w.write_record(row.iter().map(|v| format!("{v}")))
            .map_err(|e| Error::Csv { line: i as u64 + 2, msg: e.to_string() })?;
    }
    w.flush()?;
    Ok(())
}
