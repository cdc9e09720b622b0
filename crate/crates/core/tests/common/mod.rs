#![allow(dead_code)]

use moreau_slab::{Dataset, HyperState, LinearModel};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// A small seeded regression problem with a sparse truth.
pub fn small_instance(seed: u64, n: usize, d: usize) -> LinearModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = DMatrix::from_fn(n, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut theta = vec![0.0; d];
    theta[0] = if rng.random::<bool>() { 1.0 } else { -1.0 } * (0.5 + rng.random::<f64>());
    let signal = &x * DVector::from_vec(theta);
    let z = DVector::from_fn(n, |i, _| signal[i] + rng.sample::<f64, _>(StandardNormal));
    LinearModel::new(Dataset::new(x, z, 1.0).unwrap()).unwrap()
}

pub fn hyper(model: &LinearModel, q: f64, lambda1: f64, alpha: f64) -> HyperState {
    HyperState::new(q, lambda1, 1.0, alpha, 2.0, model.lambda_max()).unwrap()
}
