//! Plug-in noise variance from a cross-validated lasso.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linmodel::Dataset;

/// Largest KKT violation accepted from [`lasso_fista`].
pub const KKT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoFit {
    pub beta: Vec<f64>,
    pub lambda: f64,
    /// Number of nonzero coefficients.
    pub support: usize,
    /// `½‖z - Xβ‖² + λ‖β‖₁`.
    pub objective: f64,
    pub iterations: usize,
    /// Largest KKT violation at `beta`.
    pub kkt: f64,
}

/// Precomputed `X'X`, `X'z` and `‖z‖²` for repeated fits on one design.
pub struct LassoProblem {
    gram: DMatrix<f64>,
    xtz: DVector<f64>,
    zz: f64,
    lipschitz: f64,
}

impl LassoProblem {
    pub fn new(data: &Dataset) -> Result<Self> {
        let lipschitz = data.lambda_max()?;
        Ok(Self {
            gram: data.x().tr_mul(data.x()),
            xtz: data.x().tr_mul(data.z()),
            zz: data.z().norm_squared(),
            lipschitz,
        })
    }

    pub fn dim(&self) -> usize {
        self.xtz.len()
    }

    /// `‖X'z‖_∞`, the smallest penalty with an all-zero solution.
    pub fn lambda_null(&self) -> f64 {
        self.xtz.amax()
    }

    fn objective(&self, beta: &DVector<f64>, lambda: f64) -> f64 {
        let gb = &self.gram * beta;
        0.5 * beta.dot(&gb) - beta.dot(&self.xtz) + 0.5 * self.zz + lambda * beta.lp_norm(1)
    }

    /// `X'(z - Xβ)`.
    fn correlation(&self, beta: &DVector<f64>) -> DVector<f64> {
        &self.xtz - &self.gram * beta
    }

    /// Largest violation of `c_j = λ sign(β_j)` on the support and
    /// `|c_j| ≤ λ` off it, with `c = X'(z - Xβ)`.
    pub fn kkt_residual(&self, beta: &[f64], lambda: f64) -> f64 {
        let b = DVector::from_column_slice(beta);
        let c = self.correlation(&b);
        b.iter()
            .zip(c.iter())
            .map(|(&bj, &cj)| if bj != 0.0 { (cj - lambda * bj.signum()).abs() } else { (cj.abs() - lambda).max(0.0) })
            .fold(0.0, f64::max)
    }

    /// Solve the lasso at `lambda`, optionally warm-started.
    pub fn fit(&self, lambda: f64, tol: f64, max_iter: usize, warm: Option<&[f64]>) -> Result<LassoFit> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("lasso penalty must be positive, got {lambda}")));
        }
        let d = self.dim();
        if self.lipschitz <= 0.0 {
            return Ok(self.finish(DVector::zeros(d), lambda, 0));
        }
        let step = 1.0 / self.lipschitz;
        let mut beta = match warm {
            Some(w) if w.len() == d => DVector::from_column_slice(w),
            _ => DVector::zeros(d),
        };
        let mut prev = beta.clone();
        let mut t = 1.0_f64;
        let mut obj = self.objective(&beta, lambda);
        let mut inner_tol = tol;
        let mut iter = 0;
        while iter < max_iter {
            iter += 1;
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let y = &beta + (&beta - &prev) * ((t - 1.0) / t_next);
            let grad = &self.gram * &y - &self.xtz;
            let next = (&y - grad * step).map(|v| soft(v, lambda * step));
            let next_obj = self.objective(&next, lambda);
            if next_obj > obj {
                // restart: drop momentum and redo from the current iterate
                t = 1.0;
                prev = beta.clone();
                continue;
            }
            prev = std::mem::replace(&mut beta, next);
            t = t_next;
            let change = (obj - next_obj).abs() / obj.abs().max(1.0);
            obj = next_obj;
            if change < inner_tol {
                if let Some(polished) = self.polish(&beta, lambda) {
                    return Ok(self.finish(polished, lambda, iter));
                }
                if self.kkt_residual(beta.as_slice(), lambda) <= KKT_TOL {
                    return Ok(self.finish(beta, lambda, iter));
                }
                inner_tol = (inner_tol * 0.01).max(1e-18);
            }
        }
        if let Some(polished) = self.polish(&beta, lambda) {
            return Ok(self.finish(polished, lambda, iter));
        }
        Err(Error::LassoNotConverged { iterations: iter, beta: beta.as_slice().to_vec() })
    }

    /// Solve the stationarity equations on the current support with its
    /// signs; accept only if the result is sign-consistent and satisfies
    /// the KKT conditions.
    fn polish(&self, beta: &DVector<f64>, lambda: f64) -> Option<DVector<f64>> {
        let support: Vec<usize> = (0..beta.len()).filter(|&j| beta[j] != 0.0).collect();
        if support.is_empty() {
            return (self.kkt_residual(beta.as_slice(), lambda) <= KKT_TOL).then(|| beta.clone());
        }
        let g = self.gram.select_rows(&support).select_columns(&support);
        let rhs = DVector::from_iterator(support.len(), support.iter().map(|&j| self.xtz[j] - lambda * beta[j].signum()));
        let b = Cholesky::new(g)?.solve(&rhs);
        let mut out = DVector::zeros(beta.len());
        for (i, &j) in support.iter().enumerate() {
            if b[i].signum() != beta[j].signum() || b[i] == 0.0 {
                return None;
            }
            out[j] = b[i];
        }
        (self.kkt_residual(out.as_slice(), lambda) <= KKT_TOL).then_some(out)
    }

    fn finish(&self, beta: DVector<f64>, lambda: f64, iterations: usize) -> LassoFit {
        let kkt = self.kkt_residual(beta.as_slice(), lambda);
        LassoFit {
            support: beta.iter().filter(|b| **b != 0.0).count(),
            objective: self.objective(&beta, lambda),
            beta: beta.as_slice().to_vec(),
            lambda,
            iterations,
            kkt,
        }
    }
}

fn soft(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Accelerated proximal gradient for `½‖z - Xβ‖² + λ‖β‖₁` with step
/// `1/λ_max(X'X)` and restart on objective increase.
pub fn lasso_fista(data: &Dataset, lambda: f64, tol: f64, max_iter: usize) -> Result<LassoFit> {
    LassoProblem::new(data)?.fit(lambda, tol, max_iter, None)
}

/// `count` log-spaced penalties from `‖X'z‖_∞` down to `0.01·‖X'z‖_∞`.
pub fn lambda_grid(data: &Dataset, count: usize) -> Vec<f64> {
    let top = data.x().tr_mul(data.z()).amax();
    if count <= 1 {
        return vec![top];
    }
    (0..count)
        .map(|i| top * 10f64.powf(-2.0 * i as f64 / (count - 1) as f64))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub lambda: f64,
    pub grid: Vec<f64>,
    /// Mean held-out squared error per grid point.
    pub errors: Vec<f64>,
}

const CV_TOL: f64 = 1e-10;
const CV_MAX_ITER: usize = 200_000;

/// K-fold cross-validation over `grid`. Rows are shuffled once with `seed`
/// and cut into contiguous folds. Ties go to the larger penalty.
pub fn cv_select_lambda(data: &Dataset, folds: usize, grid: &[f64], seed: u64) -> Result<CvResult> {
    let n = data.n();
    if folds < 2 || n < folds {
        return Err(Error::InvalidArgument(format!("need 2 <= folds <= n, got folds={folds}, n={n}")));
    }
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty penalty grid".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut sorted = grid.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let per_fold = (0..folds)
        .into_par_iter()
        .map(|k| {
            let lo = k * n / folds;
            let hi = (k + 1) * n / folds;
            let test: Vec<usize> = order[lo..hi].to_vec();
            let train: Vec<usize> = order[..lo].iter().chain(&order[hi..]).cloned().collect();
            if train.is_empty() || test.is_empty() {
                return Err(Error::Degenerate("empty cross-validation fold"));
            }
            let xtr = data.x().select_rows(&train);
            let ztr = DVector::from_iterator(train.len(), train.iter().map(|&i| data.z()[i]));
            let prob = LassoProblem::new(&Dataset::new(xtr, ztr, data.sigma2())?)?;
            let xte = data.x().select_rows(&test);
            let zte = DVector::from_iterator(test.len(), test.iter().map(|&i| data.z()[i]));
            let mut warm: Option<Vec<f64>> = None;
            let mut sse = Vec::with_capacity(sorted.len());
            for &lam in &sorted {
                let fit = prob.fit(lam, CV_TOL, CV_MAX_ITER, warm.as_deref())?;
                let r = &zte - &xte * DVector::from_column_slice(&fit.beta);
                sse.push(r.norm_squared());
                warm = Some(fit.beta);
            }
            Ok(sse)
        })
        .collect::<Result<Vec<_>>>()?;
    let errors: Vec<f64> = (0..sorted.len())
        .map(|i| per_fold.iter().map(|f| f[i]).sum::<f64>() / n as f64)
        .collect();
    // sorted is descending, so the first minimum is the largest penalty
    let best = errors
        .iter()
        .enumerate()
        .fold(0, |b, (i, &e)| if e < errors[b] { i } else { b });
    Ok(CvResult { lambda: sorted[best], grid: sorted, errors })
}

/// `‖z - Xβ̂‖² / (n - ŝ)`.
pub fn sigma2_hat(data: &Dataset, fit: &LassoFit) -> Result<f64> {
    let n = data.n();
    if fit.support >= n {
        return Err(Error::SaturatedFit { support: fit.support, n });
    }
    let r = data.z() - data.x() * DVector::from_column_slice(&fit.beta);
    Ok(r.norm_squared() / (n - fit.support) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EbEstimate {
    pub sigma2: f64,
    pub cv: CvResult,
    pub fit: LassoFit,
}

/// Cross-validate the penalty, refit on all rows, and return `σ̂²`.
pub fn estimate_sigma2(data: &Dataset, folds: usize, grid_size: usize, seed: u64) -> Result<EbEstimate> {
    let grid = lambda_grid(data, grid_size);
    let cv = cv_select_lambda(data, folds, &grid, seed)?;
    let fit = lasso_fista(data, cv.lambda, CV_TOL, CV_MAX_ITER)?;
    let sigma2 = sigma2_hat(data, &fit)?;
    Ok(EbEstimate { sigma2, cv, fit })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthogonal_design_is_soft_thresholding() {
        let x = DMatrix::identity(3, 3);
        let z = DVector::from_vec(vec![2.0, -0.5, 1.2]);
        let data = Dataset::new(x, z, 1.0).unwrap();
        let fit = lasso_fista(&data, 1.0, 1e-12, 10_000).unwrap();
        let want = [2.0 - 1.0, 0.0, 1.2 - 1.0];
        assert!(fit.beta.iter().zip(&want).all(|(a, b)| (a - b).abs() < 1e-12), "{:?}", fit.beta);
        assert!(fit.kkt <= KKT_TOL);
    }

    #[test]
    fn null_penalty_gives_zero() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.5, -0.3, 2.0, 0.7, 0.1]);
        let z = DVector::from_vec(vec![0.4, -1.0, 0.9]);
        let data = Dataset::new(x, z, 1.0).unwrap();
        let top = lambda_grid(&data, 5)[0];
        let fit = lasso_fista(&data, top, 1e-12, 10_000).unwrap();
        assert!(fit.beta.iter().all(|b| *b == 0.0));
        assert_eq!(sigma2_hat(&data, &fit).unwrap(), data.z().norm_squared() / 3.0);
    }

    #[test]
    fn saturated_fit_is_rejected() {
        let data = Dataset::new(DMatrix::identity(2, 2), DVector::from_vec(vec![3.0, 3.0]), 1.0).unwrap();
        let fit = lasso_fista(&data, 0.1, 1e-12, 10_000).unwrap();
        assert!(matches!(sigma2_hat(&data, &fit), Err(Error::SaturatedFit { .. })));
    }
}
