//! One-vs-rest linear SVM trained with the Pegasos stochastic sub-gradient
//! method on the L2-regularised hinge loss.
//!
//! The intercept is handled as an extra constant-one feature and is
//! regularised along with the weights.

use rand::seq::SliceRandom;

use super::{LabeledDataset, LinearParams, SparseRows};
use crate::seed;

pub fn fit(ds: &LabeledDataset, classes: usize, strength: f64, epochs: usize, run_seed: u64) -> LinearParams {
    let rows = SparseRows::from_dataset(ds);
    let mut weights = Vec::with_capacity(classes);
    let mut biases = Vec::with_capacity(classes);
    for class in 0..classes {
        let targets: Vec<f64> = ds
            .labels
            .iter()
            .map(|l| if l.index() == class { 1.0 } else { -1.0 })
            .collect();
        let mut rng = seed::rng(run_seed, "lsvm-order", class as u64);
        let (w, b) = pegasos(&rows, &targets, strength, epochs, &mut rng);
        weights.push(w);
        biases.push(b);
    }
    LinearParams { weights, biases }
}

fn pegasos(rows: &SparseRows, targets: &[f64], lambda: f64, epochs: usize, rng: &mut seed::Rng) -> (Vec<f64>, f64) {
    let dim = rows.dim;
    // w = scale * v, with v[dim] holding the intercept.
    let mut v = vec![0f64; dim + 1];
    let mut scale = 1.0f64;
    let mut order: Vec<usize> = (0..targets.len()).collect();
    let mut t = 0u64;
    for _ in 0..epochs {
        order.shuffle(rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let margin = targets[i] * scale * (rows.dot(i, &v[..dim]) + v[dim]);
            let shrink = 1.0 - eta * lambda;
            if shrink <= 0.0 {
                v.fill(0.0);
                scale = 1.0;
            } else {
                scale *= shrink;
            }
            if margin < 1.0 {
                let step = eta * targets[i] / scale;
                rows.axpy(i, step, &mut v[..dim]);
                v[dim] += step;
            }
            if scale < 1e-9 {
                v.iter_mut().for_each(|x| *x *= scale);
                scale = 1.0;
            }
        }
    }
    v.iter_mut().for_each(|x| *x *= scale);
    let bias = v.pop().unwrap_or(0.0);
    (v, bias)
}
