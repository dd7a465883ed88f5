//! Residual combination y = F(x) + x. The sum short-circuits elements where
//! the branch output is exactly zero, so a silent branch (for example one
//! ending in a zero-initialized convolution) is a bitwise identity map.

use super::real::Real;
use super::tensor::Tensor;
use crate::error::{CredError, Result};

/// Elementwise x + fx with matching shapes.
pub fn residual_add<T: Real>(x: &Tensor<T>, fx: &Tensor<T>) -> Result<Tensor<T>> {
    if x.shape != fx.shape {
        return Err(CredError::ShapeMismatch(format!(
            "residual shapes differ: {:?} vs {:?}",
            x.shape, fx.shape
        )));
    }
    let data = x
        .data
        .iter()
        .zip(&fx.data)
        .map(|(&a, &b)| if b == T::ZERO { a } else { a + b })
        .collect();
    Tensor::from_vec(&x.shape, data)
}

/// Apply a residual branch and add the shortcut.
pub fn residual_apply<T: Real>(
    x: &Tensor<T>,
    branch: impl FnOnce(&Tensor<T>) -> Result<Tensor<T>>,
) -> Result<Tensor<T>> {
    let fx = branch(x)?;
    residual_add(x, &fx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn zero_branch_is_bitwise_identity() {
        let x = Tensor::from_vec(&[5], vec![1.5, -0.0, 0.0, f64::MIN_POSITIVE, -7.25]).unwrap();
        let y = residual_apply(&x, |t| Ok(t.zeros_like())).unwrap();
        for (a, b) in x.data.iter().zip(&y.data) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn identity_branch_doubles() {
        let x = Tensor::from_vec(&[3], vec![1.0, -2.0, 0.5]).unwrap();
        let y = residual_apply(&x, |t| Ok(t.clone())).unwrap();
        assert_eq!(y.data, vec![2.0, -4.0, 1.0]);
    }

    #[test]
    fn matches_separate_sum() {
        let mut rng = Rng::new(4);
        let x = Tensor::from_vec(&[8], (0..8).map(|_| rng.uniform(-1.0, 1.0)).collect()).unwrap();
        let fx = Tensor::from_vec(&[8], (0..8).map(|_| rng.uniform(-1.0, 1.0)).collect()).unwrap();
        let y = residual_apply(&x, |_| Ok(fx.clone())).unwrap();
        for i in 0..8 {
            assert!((y.data[i] - (x.data[i] + fx.data[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn shape_mismatch_rejected() {
        let x = Tensor::<f64>::zeros(&[4]);
        let err = residual_apply(&x, |_| Ok(Tensor::zeros(&[5])));
        assert!(matches!(err, Err(CredError::ShapeMismatch(_))));
    }
}
