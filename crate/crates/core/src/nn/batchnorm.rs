//! Batch normalization over the sample axis.
//!
//! Activations are `features × batch` matrices. Training mode normalizes with
//! the batch mean and (biased) variance and folds them into the running
//! statistics; evaluation mode only reads the running statistics.

use nalgebra::{DMatrix, DVector};

/// Running-statistics momentum: `running ← momentum·running + (1−momentum)·batch`.
pub const BN_MOMENTUM: f64 = 0.9;
/// Variance floor added before the square root.
pub const BN_EPS: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    pub running_mean: DVector<f64>,
    pub running_var: DVector<f64>,
    pub momentum: f64,
    pub eps: f64,
}

/// What the backward pass needs from a forward normalization.
#[derive(Debug, Clone)]
pub struct BatchNormCache {
    pub normalized: DMatrix<f64>,
    pub inv_std: DVector<f64>,
    pub used_batch_stats: bool,
}

impl BatchNorm {
    pub fn new(features: usize) -> Self {
        Self {
            running_mean: DVector::zeros(features),
            running_var: DVector::from_element(features, 1.0),
            momentum: BN_MOMENTUM,
            eps: BN_EPS,
        }
    }

    pub fn features(&self) -> usize {
        self.running_mean.len()
    }

    /// Normalizes without touching the running statistics. Returns the cache
    /// and, in training mode, the batch `(mean, var)`.
    pub fn normalize(
        &self,
        x: &DMatrix<f64>,
        training: bool,
    ) -> (BatchNormCache, Option<(DVector<f64>, DVector<f64>)>) {
        let n = x.ncols();
        let (mean, var, stats) = if training && n > 0 {
            let mean = x.column_mean();
            let mut var = DVector::zeros(x.nrows());
            for (i, v) in var.iter_mut().enumerate() {
                let mu = mean[i];
                *v = x.row(i).iter().map(|xi| (xi - mu) * (xi - mu)).sum::<f64>() / n as f64;
            }
            (mean.clone(), var.clone(), Some((mean, var)))
        } else {
            (self.running_mean.clone(), self.running_var.clone(), None)
        };
        let inv_std = var.map(|v| 1.0 / (v + self.eps).sqrt());
        let mut normalized = x.clone();
        for (i, mut row) in normalized.row_iter_mut().enumerate() {
            let (mu, s) = (mean[i], inv_std[i]);
            row.iter_mut().for_each(|v| *v = (*v - mu) * s);
        }
        (
            BatchNormCache {
                normalized,
                inv_std,
                used_batch_stats: stats.is_some(),
            },
            stats,
        )
    }

    /// Normalizes and, in training mode, updates the running statistics.
    pub fn forward(&mut self, x: &DMatrix<f64>, training: bool) -> BatchNormCache {
        let (cache, stats) = self.normalize(x, training);
        if let Some((mean, var)) = stats {
            self.absorb(&mean, &var);
        }
        cache
    }

    pub fn absorb(&mut self, mean: &DVector<f64>, var: &DVector<f64>) {
        let m = self.momentum;
        self.running_mean = &self.running_mean * m + mean * (1.0 - m);
        self.running_var = &self.running_var * m + var * (1.0 - m);
    }

    /// Gradient with respect to the un-normalized input given the gradient
    /// with respect to the normalized output.
    pub fn backward(cache: &BatchNormCache, grad_normalized: &DMatrix<f64>) -> DMatrix<f64> {
        let mut grad = grad_normalized.clone();
        if !cache.used_batch_stats {
            for (i, mut row) in grad.row_iter_mut().enumerate() {
                let s = cache.inv_std[i];
                row.iter_mut().for_each(|g| *g *= s);
            }
            return grad;
        }
        let n = grad.ncols() as f64;
        for i in 0..grad.nrows() {
            let s = cache.inv_std[i];
            let xhat = cache.normalized.row(i);
            let dxhat = grad_normalized.row(i);
            let sum_d: f64 = dxhat.iter().sum();
            let sum_dx: f64 = dxhat.iter().zip(xhat.iter()).map(|(d, x)| d * x).sum();
            for j in 0..grad.ncols() {
                grad[(i, j)] = s / n * (n * dxhat[j] - sum_d - xhat[j] * sum_dx);
            }
        }
        grad
    }
}
