//! Bias-corrected adaptive moment optimizer over flat parameter slices.
//! The caller supplies parameters and gradients as aligned slice lists in a
//! fixed order; moments are kept per slice.

use super::real::Real;
use crate::error::{CredError, Result};

#[derive(Debug, Clone)]
pub struct AdamState<T> {
    pub alpha: T,
    pub beta1: T,
    pub beta2: T,
    pub epsilon: T,
    pub step: u64,
    pub m: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
}

impl<T: Real> AdamState<T> {
    /// Moments sized to `lens`, one entry per parameter tensor.
    pub fn new(alpha: f64, lens: &[usize]) -> Self {
        AdamState {
            alpha: T::from_f64(alpha),
            beta1: T::from_f64(0.9),
            beta2: T::from_f64(0.999),
            epsilon: T::from_f64(1e-8),
            step: 0,
            m: lens.iter().map(|&l| vec![T::ZERO; l]).collect(),
            v: lens.iter().map(|&l| vec![T::ZERO; l]).collect(),
        }
    }

    /// One update: m and v track the gradient and its square, the step uses
    /// the bias-corrected ratio.
    pub fn step(&mut self, params: &mut [&mut [T]], grads: &[&[T]]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(CredError::ShapeMismatch(format!(
                "adam: {} params, {} grads, {} moment slots",
                params.len(),
                grads.len(),
                self.m.len()
            )));
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = T::from_f64(1.0 - self.beta1.to_f64().powi(t));
        let bc2 = T::from_f64(1.0 - self.beta2.to_f64().powi(t));
        let one = T::ONE;
        for k in 0..params.len() {
            if params[k].len() != grads[k].len() || params[k].len() != self.m[k].len() {
                return Err(CredError::ShapeMismatch(format!(
                    "adam slot {k}: param {} grad {} moment {}",
                    params[k].len(),
                    grads[k].len(),
                    self.m[k].len()
                )));
            }
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            for i in 0..params[k].len() {
                let g = grads[k][i];
                m[i] = self.beta1 * m[i] + (one - self.beta1) * g;
                v[i] = self.beta2 * v[i] + (one - self.beta2) * g * g;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                params[k][i] -= self.alpha * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
        Ok(())
    }
}
