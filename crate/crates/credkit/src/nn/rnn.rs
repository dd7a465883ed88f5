//! Vanilla recurrent cell: hidden update through tanh, per-step output
//! through a sigmoid readout. Kept forward-only; the network proper uses
//! the LSTM variant.

use super::activation::{sigmoid, tanh};
use super::real::Real;
use super::tensor::Tensor;
use crate::error::{CredError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RnnParams<T> {
    /// [hidden, hidden]
    pub w_aa: Tensor<T>,
    /// [hidden, input]
    pub w_ax: Tensor<T>,
    /// [hidden]
    pub b_a: Tensor<T>,
    /// [output, hidden]
    pub w_ya: Tensor<T>,
    /// [output]
    pub b_y: Tensor<T>,
}

impl<T: Real> RnnParams<T> {
    pub fn zeros(input: usize, hidden: usize, output: usize) -> Self {
        RnnParams {
            w_aa: Tensor::zeros(&[hidden, hidden]),
            w_ax: Tensor::zeros(&[hidden, input]),
            b_a: Tensor::zeros(&[hidden]),
            w_ya: Tensor::zeros(&[output, hidden]),
            b_y: Tensor::zeros(&[output]),
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_aa.shape[0]
    }
}

/// a_t = tanh(W_aa a_prev + W_ax x_t + b_a); y_t = sigmoid(W_ya a_t + b_y).
pub fn rnn_cell<T: Real>(
    x_t: &Tensor<T>,
    a_prev: &Tensor<T>,
    p: &RnnParams<T>,
) -> Result<(Tensor<T>, Tensor<T>)> {
    let hidden = p.hidden();
    let input = p.w_ax.shape[1];
    let output = p.w_ya.shape[0];
    if x_t.numel() != input || a_prev.numel() != hidden {
        return Err(CredError::ShapeMismatch(format!(
            "rnn_cell: x {} (want {input}), a_prev {} (want {hidden})",
            x_t.numel(),
            a_prev.numel()
        )));
    }
    let mut a = Tensor::zeros(&[hidden]);
    for i in 0..hidden {
        let mut acc = p.b_a.data[i];
        for j in 0..hidden {
            acc += p.w_aa.at2(i, j) * a_prev.data[j];
        }
        for j in 0..input {
            acc += p.w_ax.at2(i, j) * x_t.data[j];
        }
        a.data[i] = tanh(acc);
    }
    let mut y = Tensor::zeros(&[output]);
    for i in 0..output {
        let mut acc = p.b_y.data[i];
        for j in 0..hidden {
            acc += p.w_ya.at2(i, j) * a.data[j];
        }
        y.data[i] = sigmoid(acc);
    }
    Ok((a, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn zero_parameters_give_half_output() {
        let p = RnnParams::<f64>::zeros(3, 4, 2);
        let x = Tensor::from_vec(&[3], vec![1.0, -2.0, 0.5]).unwrap();
        let a_prev = Tensor::zeros(&[4]);
        let (a, y) = rnn_cell(&x, &a_prev, &p).unwrap();
        assert!(a.data.iter().all(|&v| v == 0.0));
        assert!(y.data.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn identity_input_path() {
        let mut p = RnnParams::<f64>::zeros(3, 3, 1);
        for i in 0..3 {
            p.w_ax.data[i * 3 + i] = 1.0;
        }
        let x = Tensor::from_vec(&[3], vec![0.3, -0.7, 2.0]).unwrap();
        let (a, _) = rnn_cell(&x, &Tensor::zeros(&[3]), &p).unwrap();
        for i in 0..3 {
            assert!((a.data[i] - x.data[i].tanh()).abs() < 1e-15);
        }
    }

    #[test]
    fn matches_two_line_oracle() {
        let mut rng = Rng::new(21);
        let mut p = RnnParams::<f64>::zeros(3, 4, 2);
        for t in [
            &mut p.w_aa,
            &mut p.w_ax,
            &mut p.b_a,
            &mut p.w_ya,
            &mut p.b_y,
        ] {
            for v in &mut t.data {
                *v = rng.uniform(-0.8, 0.8);
            }
        }
        let x = Tensor::from_vec(&[3], vec![0.1, 0.4, -0.9]).unwrap();
        let a_prev = Tensor::from_vec(&[4], vec![0.2, -0.1, 0.7, 0.0]).unwrap();
        let (a, y) = rnn_cell(&x, &a_prev, &p).unwrap();

        // independent scalar-loop evaluation of the two defining lines
        for i in 0..4 {
            let z: f64 = (0..4)
                .map(|j| p.w_aa.at2(i, j) * a_prev.data[j])
                .sum::<f64>()
                + (0..3).map(|j| p.w_ax.at2(i, j) * x.data[j]).sum::<f64>()
                + p.b_a.data[i];
            assert!((a.data[i] - z.tanh()).abs() < 1e-12);
        }
        for i in 0..2 {
            let z: f64 = (0..4).map(|j| p.w_ya.at2(i, j) * a.data[j]).sum::<f64>() + p.b_y.data[i];
            assert!((y.data[i] - 1.0 / (1.0 + (-z).exp())).abs() < 1e-12);
        }
    }
}
