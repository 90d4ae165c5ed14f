//! Shared fixtures for the criterion benchmarks.

use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use odbss::models::{sigmoid, Family, ModelSpec};
use odbss::Dataset;

/// Synthetic logistic dataset with AR(1)-like correlated covariates.
pub fn logistic_dataset(n: usize, p: usize, seed: u64) -> (Dataset, ModelSpec, DVector<f64>) {
    let model = ModelSpec::new(Family::LogisticNoIntercept, p);
    let beta = DVector::from_element(p, 0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = DMatrix::zeros(n, p);
    for i in 0..n {
        let mut prev: f64 = rng.sample(StandardNormal);
        for j in 0..p {
            let z: f64 = rng.sample(StandardNormal);
            prev = 0.5 * prev + (1.0 - 0.25_f64).sqrt() * z;
            x[(i, j)] = prev;
        }
    }
    let y = DVector::from_fn(n, |i, _| {
        let z = x.row(i).transpose();
        if rng.gen::<f64>() < sigmoid(z.dot(&beta)) {
            1.0
        } else {
            0.0
        }
    });
    (Dataset::new(x, y).unwrap(), model, beta)
}
