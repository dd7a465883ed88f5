//! Fully connected layer applied row-wise, so a [T, in] sequence maps to
//! [T, out] independently per time step.

use super::real::Real;
use super::tensor::Tensor;
use crate::error::{CredError, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseParams<T> {
    /// [out, in]
    pub w: Tensor<T>,
    /// [out]
    pub b: Tensor<T>,
}

impl<T: Real> DenseParams<T> {
    pub fn zeros(input: usize, output: usize) -> Self {
        DenseParams {
            w: Tensor::zeros(&[output, input]),
            b: Tensor::zeros(&[output]),
        }
    }

    /// Scaled-normal init with variance 2/fan_in; biases zero.
    pub fn init(input: usize, output: usize, rng: &mut Rng) -> Self {
        let std = (2.0 / input as f64).sqrt();
        let mut p = Self::zeros(input, output);
        for v in &mut p.w.data {
            *v = T::from_f64(rng.next_gauss() * std);
        }
        p
    }

    pub fn input_size(&self) -> usize {
        self.w.shape[1]
    }

    pub fn output_size(&self) -> usize {
        self.w.shape[0]
    }

    /// x: [rows, in] (or [in] treated as one row) -> same-rank output.
    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let (rows, input) = row_view(x)?;
        if input != self.input_size() {
            return Err(CredError::ShapeMismatch(format!(
                "dense expects {} inputs, got {}",
                self.input_size(),
                input
            )));
        }
        let output = self.output_size();
        let mut out = vec![T::ZERO; rows * output];
        for r in 0..rows {
            let xr = &x.data[r * input..(r + 1) * input];
            let or = &mut out[r * output..(r + 1) * output];
            for (o, out_v) in or.iter_mut().enumerate() {
                let wrow = &self.w.data[o * input..(o + 1) * input];
                let mut acc = self.b.data[o];
                for (wi, xi) in wrow.iter().zip(xr) {
                    acc += *wi * *xi;
                }
                *out_v = acc;
            }
        }
        let shape = if x.shape.len() == 1 {
            vec![output]
        } else {
            vec![rows, output]
        };
        Tensor::from_vec(&shape, out)
    }

    /// Gradients for the row-wise forward: returns (dx, grads).
    pub fn backward(&self, x: &Tensor<T>, dy: &Tensor<T>) -> Result<(Tensor<T>, DenseParams<T>)> {
        let (rows, input) = row_view(x)?;
        let output = self.output_size();
        if dy.numel() != rows * output {
            return Err(CredError::ShapeMismatch(format!(
                "dense backward: dy has {} values, expected {}",
                dy.numel(),
                rows * output
            )));
        }
        let mut grads = DenseParams::zeros(input, output);
        let mut dx = x.zeros_like();
        for r in 0..rows {
            let xr = &x.data[r * input..(r + 1) * input];
            let dyr = &dy.data[r * output..(r + 1) * output];
            let dxr = &mut dx.data[r * input..(r + 1) * input];
            for (o, &g) in dyr.iter().enumerate() {
                grads.b.data[o] += g;
                let wrow = &self.w.data[o * input..(o + 1) * input];
                let gwrow = &mut grads.w.data[o * input..(o + 1) * input];
                for i in 0..input {
                    gwrow[i] += g * xr[i];
                    dxr[i] += g * wrow[i];
                }
            }
        }
        Ok((dx, grads))
    }
}

/// Interpret a tensor as rows of its trailing dimension.
fn row_view<T: Real>(x: &Tensor<T>) -> Result<(usize, usize)> {
    match x.shape.len() {
        1 => Ok((1, x.shape[0])),
        2 => Ok((x.shape[0], x.shape[1])),
        _ => Err(CredError::ShapeMismatch(format!(
            "dense expects 1-d or 2-d input, got {:?}",
            x.shape
        ))),
    }
}
