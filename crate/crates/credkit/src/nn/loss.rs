//! Binary cross-entropy over probability tensors, with the fused
//! probability-from-logit gradient used by the training loop.

use super::real::Real;
use super::tensor::Tensor;
use crate::error::{CredError, Result};

const CLAMP: f64 = 1e-7;

/// loss = -mean(y ln p + (1-y) ln(1-p)) with p clamped to
/// [1e-7, 1-1e-7]; also returns d loss / d p per element.
pub fn bce_loss<T: Real>(p_hat: &Tensor<T>, y: &Tensor<T>) -> Result<(T, Tensor<T>)> {
    if p_hat.shape != y.shape {
        return Err(CredError::ShapeMismatch(format!(
            "bce shapes differ: {:?} vs {:?}",
            p_hat.shape, y.shape
        )));
    }
    let lo = T::from_f64(CLAMP);
    let hi = T::from_f64(1.0 - CLAMP);
    let n = T::from_f64(p_hat.numel() as f64);
    let mut loss = T::ZERO;
    let mut grad = p_hat.zeros_like();
    for (i, (&p, &t)) in p_hat.data.iter().zip(&y.data).enumerate() {
        let p = p.max(lo).min(hi);
        loss -= t * p.ln() + (T::ONE - t) * (T::ONE - p).ln();
        grad.data[i] = (p - t) / (p * (T::ONE - p)) / n;
    }
    Ok((loss / n, grad))
}

/// Gradient of mean BCE with respect to the logit z where p = sigmoid(z):
/// simply (p - y)/n. Numerically safe where the chained form underflows at
/// saturated probabilities.
pub fn bce_sigmoid_grad<T: Real>(p_hat: &Tensor<T>, y: &Tensor<T>) -> Result<Tensor<T>> {
    if p_hat.shape != y.shape {
        return Err(CredError::ShapeMismatch(format!(
            "bce shapes differ: {:?} vs {:?}",
            p_hat.shape, y.shape
        )));
    }
    let n = T::from_f64(p_hat.numel() as f64);
    let mut grad = p_hat.zeros_like();
    for (i, (&p, &t)) in p_hat.data.iter().zip(&y.data).enumerate() {
        grad.data[i] = (p - t) / n;
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::activation::dsigmoid_from_y;
    use crate::nn::gradcheck::grad_check;
    use crate::rng::Rng;

    #[test]
    fn perfect_prediction_is_near_zero() {
        let p = Tensor::from_vec(&[2], vec![1.0_f64, 0.0]).unwrap();
        let y = Tensor::from_vec(&[2], vec![1.0, 0.0]).unwrap();
        let (loss, _) = bce_loss(&p, &y).unwrap();
        assert!(loss > 0.0 && loss < 2e-7, "loss {loss}");
    }

    #[test]
    fn uncertain_prediction_is_ln_two() {
        let p = Tensor::from_vec(&[4], vec![0.5_f64; 4]).unwrap();
        let y = Tensor::from_vec(&[4], vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        let (loss, _) = bce_loss(&p, &y).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = Rng::new(33);
        let y = Tensor::from_vec(&[6], vec![1.0, 0.0, 1.0, 1.0, 0.0, 0.0]).unwrap();
        let p: Vec<f64> = (0..6).map(|_| rng.uniform(0.05, 0.95)).collect();
        let run = |t: &[f64]| -> f64 {
            let pt = Tensor::from_vec(&[6], t.to_vec()).unwrap();
            bce_loss(&pt, &y).unwrap().0
        };
        let (_, grad) = bce_loss(&Tensor::from_vec(&[6], p.clone()).unwrap(), &y).unwrap();
        let err = grad_check(run, &p, &grad.data, 1e-6);
        assert!(err < 1e-6, "max rel err {err}");
    }

    #[test]
    fn fused_grad_equals_chained_form_in_interior() {
        let mut rng = Rng::new(34);
        let p: Vec<f64> = (0..8).map(|_| rng.uniform(0.05, 0.95)).collect();
        let yv: Vec<f64> = (0..8).map(|i| (i % 2) as f64).collect();
        let pt = Tensor::from_vec(&[8], p.clone()).unwrap();
        let yt = Tensor::from_vec(&[8], yv).unwrap();
        let (_, dp) = bce_loss(&pt, &yt).unwrap();
        let dz = bce_sigmoid_grad(&pt, &yt).unwrap();
        for i in 0..8 {
            let chained = dp.data[i] * dsigmoid_from_y(p[i]);
            assert!((dz.data[i] - chained).abs() < 1e-12);
        }
    }

    #[test]
    fn shape_mismatch_rejected() {
        let p = Tensor::<f64>::zeros(&[3]);
        let y = Tensor::<f64>::zeros(&[4]);
        assert!(matches!(bce_loss(&p, &y), Err(CredError::ShapeMismatch(_))));
    }
}
