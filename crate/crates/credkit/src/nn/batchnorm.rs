//! Batch normalization over the channel axis of [N, C, H, W] activations.
//! Training normalizes by batch statistics and folds them into running
//! estimates; inference normalizes by the running estimates alone.

use super::real::Real;
use super::tensor::Tensor;
use super::Mode;
use crate::error::{CredError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BnParams<T> {
    pub gamma: Tensor<T>,
    pub beta: Tensor<T>,
    pub running_mean: Tensor<T>,
    pub running_var: Tensor<T>,
    pub epsilon: T,
    pub momentum: T,
}

/// Intermediates needed by the backward pass and the running-stat update.
#[derive(Debug, Clone)]
pub struct BnCache<T> {
    pub x_hat: Tensor<T>,
    pub inv_std: Vec<T>,
    pub batch_mean: Vec<T>,
    pub batch_var: Vec<T>,
}

impl<T: Real> BnParams<T> {
    /// Identity-initialized: gamma 1, beta 0, running stats (0, 1).
    pub fn identity(channels: usize) -> Self {
        let mut gamma = Tensor::zeros(&[channels]);
        let mut running_var = Tensor::zeros(&[channels]);
        for v in &mut gamma.data {
            *v = T::ONE;
        }
        for v in &mut running_var.data {
            *v = T::ONE;
        }
        BnParams {
            gamma,
            beta: Tensor::zeros(&[channels]),
            running_mean: Tensor::zeros(&[channels]),
            running_var,
            epsilon: T::from_f64(1e-5),
            momentum: T::from_f64(0.1),
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.numel()
    }

    /// Normalize by batch statistics; does not touch the running estimates
    /// (call [`update_running`](Self::update_running) afterwards) so the
    /// forward pass stays pure for finite-difference checks.
    pub fn forward_train(&self, x: &Tensor<T>) -> Result<(Tensor<T>, BnCache<T>)> {
        let [n, c, h, w] = dims4(x, self.channels())?;
        if n < 2 {
            return Err(CredError::BatchTooSmall(n));
        }
        let m = T::from_f64((n * h * w) as f64);
        let plane = h * w;
        let sample = c * plane;

        let mut batch_mean = vec![T::ZERO; c];
        let mut batch_var = vec![T::ZERO; c];
        for ci in 0..c {
            let mut sum = T::ZERO;
            for ni in 0..n {
                let base = ni * sample + ci * plane;
                for v in &x.data[base..base + plane] {
                    sum += *v;
                }
            }
            let mean = sum / m;
            let mut var = T::ZERO;
            for ni in 0..n {
                let base = ni * sample + ci * plane;
                for v in &x.data[base..base + plane] {
                    let d = *v - mean;
                    var += d * d;
                }
            }
            batch_mean[ci] = mean;
            batch_var[ci] = var / m;
        }

        let inv_std: Vec<T> = batch_var
            .iter()
            .map(|&v| T::ONE / (v + self.epsilon).sqrt())
            .collect();
        let mut x_hat = x.zeros_like();
        let mut y = x.zeros_like();
        for ni in 0..n {
            for ci in 0..c {
                let base = ni * sample + ci * plane;
                let (mean, istd) = (batch_mean[ci], inv_std[ci]);
                let (g, b) = (self.gamma.data[ci], self.beta.data[ci]);
                for i in base..base + plane {
                    let xh = (x.data[i] - mean) * istd;
                    x_hat.data[i] = xh;
                    y.data[i] = g * xh + b;
                }
            }
        }
        Ok((
            y,
            BnCache {
                x_hat,
                inv_std,
                batch_mean,
                batch_var,
            },
        ))
    }

    pub fn forward_infer(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let [n, c, h, w] = dims4(x, self.channels())?;
        let plane = h * w;
        let sample = c * plane;
        let mut y = x.zeros_like();
        for ci in 0..c {
            let istd = T::ONE / (self.running_var.data[ci] + self.epsilon).sqrt();
            let mean = self.running_mean.data[ci];
            let (g, b) = (self.gamma.data[ci], self.beta.data[ci]);
            for ni in 0..n {
                let base = ni * sample + ci * plane;
                for i in base..base + plane {
                    y.data[i] = g * (x.data[i] - mean) * istd + b;
                }
            }
        }
        Ok(y)
    }

    /// Fold the batch statistics of one training step into the running
    /// estimates: running <- (1-momentum)*running + momentum*batch.
    pub fn update_running(&mut self, cache: &BnCache<T>) {
        let keep = T::ONE - self.momentum;
        for ci in 0..self.channels() {
            self.running_mean.data[ci] =
                keep * self.running_mean.data[ci] + self.momentum * cache.batch_mean[ci];
            self.running_var.data[ci] =
                keep * self.running_var.data[ci] + self.momentum * cache.batch_var[ci];
        }
    }

    /// Gradients for the training-mode forward. Returns (dx, dgamma, dbeta).
    pub fn backward(
        &self,
        cache: &BnCache<T>,
        dy: &Tensor<T>,
    ) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
        let [n, c, h, w] = dims4(&cache.x_hat, self.channels())?;
        if dy.shape != cache.x_hat.shape {
            return Err(CredError::ShapeMismatch(format!(
                "bn backward: dy {:?} vs x {:?}",
                dy.shape, cache.x_hat.shape
            )));
        }
        let plane = h * w;
        let sample = c * plane;
        let m = T::from_f64((n * h * w) as f64);

        let mut dgamma = Tensor::zeros(&[c]);
        let mut dbeta = Tensor::zeros(&[c]);
        for ci in 0..c {
            let mut dg = T::ZERO;
            let mut db = T::ZERO;
            for ni in 0..n {
                let base = ni * sample + ci * plane;
                for i in base..base + plane {
                    dg += dy.data[i] * cache.x_hat.data[i];
                    db += dy.data[i];
                }
            }
            dgamma.data[ci] = dg;
            dbeta.data[ci] = db;
        }

        // dx = gamma*inv_std/m * (m*dy - dbeta - x_hat*dgamma), the batch-stat
        // chain rule collapsed into sums already at hand
        let mut dx = cache.x_hat.zeros_like();
        for ci in 0..c {
            let k = self.gamma.data[ci] * cache.inv_std[ci] / m;
            let (dg, db) = (dgamma.data[ci], dbeta.data[ci]);
            for ni in 0..n {
                let base = ni * sample + ci * plane;
                for i in base..base + plane {
                    dx.data[i] = k * (m * dy.data[i] - db - cache.x_hat.data[i] * dg);
                }
            }
        }
        Ok((dx, dgamma, dbeta))
    }
}

/// One-call convenience matching the two-mode contract; train mode also
/// folds this batch into the running statistics.
pub fn batchnorm<T: Real>(x: &Tensor<T>, p: &mut BnParams<T>, mode: Mode) -> Result<Tensor<T>> {
    match mode {
        Mode::Train => {
            let (y, cache) = p.forward_train(x)?;
            p.update_running(&cache);
            Ok(y)
        }
        Mode::Infer => p.forward_infer(x),
    }
}

fn dims4<T: Real>(x: &Tensor<T>, channels: usize) -> Result<[usize; 4]> {
    if x.shape.len() != 4 || x.shape[1] != channels {
        return Err(CredError::ShapeMismatch(format!(
            "batchnorm expects [N, {channels}, H, W], got {:?}",
            x.shape
        )));
    }
    Ok([x.shape[0], x.shape[1], x.shape[2], x.shape[3]])
}
