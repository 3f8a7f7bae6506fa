//! Multinomial logistic regression with a ridge penalty, fitted by batch
//! gradient descent.
//!
//! Objective over parameters `theta = [W (classes x dim, row-major), b (classes)]`:
//!
//! ```text
//! L(theta) = 1/N * sum_i -log softmax(W x_i + b)[y_i] + ridge/2 * |W|^2
//! ```
//!
//! The intercepts are not penalised.

use serde::{Deserialize, Serialize};

use super::{LabeledDataset, LinearParams, SparseRows};

pub const MAX_ITERATIONS: usize = 5000;
pub const GRADIENT_TOLERANCE: f64 = 1e-6;

/// A concrete softmax problem; exposes loss and gradient for checking.
pub struct SoftmaxProblem {
    rows: SparseRows,
    labels: Vec<usize>,
    classes: usize,
    ridge: f64,
}

impl SoftmaxProblem {
    pub fn new(ds: &LabeledDataset, classes: usize, ridge: f64) -> Self {
        SoftmaxProblem {
            rows: SparseRows::from_dataset(ds),
            labels: ds.labels.iter().map(|l| l.index()).collect(),
            classes,
            ridge,
        }
    }

    pub fn param_len(&self) -> usize {
        self.classes * (self.rows.dim + 1)
    }

    fn logits(&self, theta: &[f64], i: usize, out: &mut [f64]) {
        let dim = self.rows.dim;
        let bias = &theta[self.classes * dim..];
        for (c, o) in out.iter_mut().enumerate() {
            let w = &theta[c * dim..(c + 1) * dim];
            *o = bias[c] + self.rows.dot(i, w);
        }
    }

    pub fn loss(&self, theta: &[f64]) -> f64 {
        let dim = self.rows.dim;
        let n = self.labels.len() as f64;
        let mut z = vec![0f64; self.classes];
        let mut data = 0.0;
        for (i, &y) in self.labels.iter().enumerate() {
            self.logits(theta, i, &mut z);
            data += log_sum_exp(&z) - z[y];
        }
        let penalty: f64 = theta[..self.classes * dim].iter().map(|w| w * w).sum();
        data / n + 0.5 * self.ridge * penalty
    }

    pub fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        let dim = self.rows.dim;
        let n = self.labels.len() as f64;
        let mut grad = vec![0f64; theta.len()];
        let mut z = vec![0f64; self.classes];
        for (i, &y) in self.labels.iter().enumerate() {
            self.logits(theta, i, &mut z);
            softmax_in_place(&mut z);
            z[y] -= 1.0;
            for (c, &r) in z.iter().enumerate() {
                let r = r / n;
                self.rows.axpy(i, r, &mut grad[c * dim..(c + 1) * dim]);
                grad[self.classes * dim + c] += r;
            }
        }
        for (g, w) in grad.iter_mut().zip(theta).take(self.classes * dim) {
            *g += self.ridge * w;
        }
        grad
    }

    /// Upper bound on the gradient's Lipschitz constant.
    fn smoothness(&self) -> f64 {
        let max_sq = (0..self.labels.len())
            .map(|i| self.rows.norm_sq(i) + 1.0)
            .fold(0.0, f64::max);
        0.5 * max_sq + self.ridge
    }
}

/// Outcome of a fit, kept for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub iterations: usize,
    pub gradient_norm: f64,
}

pub fn fit(ds: &LabeledDataset, classes: usize, ridge: f64) -> (LinearParams, FitSummary) {
    let problem = SoftmaxProblem::new(ds, classes, ridge);
    let step = 1.0 / problem.smoothness();
    let mut theta = vec![0f64; problem.param_len()];
    let mut summary = FitSummary {
        iterations: 0,
        gradient_norm: f64::INFINITY,
    };
    for it in 0..MAX_ITERATIONS {
        let grad = problem.gradient(&theta);
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        summary = FitSummary {
            iterations: it,
            gradient_norm: norm,
        };
        if norm < GRADIENT_TOLERANCE {
            break;
        }
        theta.iter_mut().zip(&grad).for_each(|(t, g)| *t -= step * g);
        summary.iterations = it + 1;
    }
    let dim = ds.dim;
    let params = LinearParams {
        weights: theta[..classes * dim].chunks_exact(dim).map(<[f64]>::to_vec).collect(),
        biases: theta[classes * dim..].to_vec(),
    };
    (params, summary)
}

pub(crate) fn log_sum_exp(z: &[f64]) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

pub(crate) fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    z.iter_mut().for_each(|v| *v /= sum);
}
