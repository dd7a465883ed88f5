//! Elementwise activations and their derivatives expressed in terms of the
//! activation output (the form every backward pass needs).

use super::real::Real;
use super::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActKind {
    Tanh,
    Sigmoid,
}

/// Saturating logistic function; exact {0,1} limits for large |z| instead of
/// overflowing exp.
pub fn sigmoid<T: Real>(z: T) -> T {
    if z >= T::ZERO {
        T::ONE / (T::ONE + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::ONE + e)
    }
}

pub fn tanh<T: Real>(z: T) -> T {
    z.tanh()
}

pub fn relu<T: Real>(z: T) -> T {
    z.max(T::ZERO)
}

/// d tanh / dz given y = tanh(z).
pub fn dtanh_from_y<T: Real>(y: T) -> T {
    T::ONE - y * y
}

/// d sigmoid / dz given y = sigmoid(z).
pub fn dsigmoid_from_y<T: Real>(y: T) -> T {
    y * (T::ONE - y)
}

/// d relu / dz given y = relu(z); the subgradient at 0 is taken as 0.
pub fn drelu_from_y<T: Real>(y: T) -> T {
    if y > T::ZERO {
        T::ONE
    } else {
        T::ZERO
    }
}

pub fn activation<T: Real>(kind: ActKind, z: &Tensor<T>) -> Tensor<T> {
    match kind {
        ActKind::Tanh => z.map(tanh),
        ActKind::Sigmoid => z.map(sigmoid),
    }
}
