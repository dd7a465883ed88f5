//! Minimal neural-network engine: tensors, layers with handwritten backward
//! passes, binary cross-entropy, the Adam optimizer, and finite-difference
//! gradient verification. No autodiff graph; the layer set is small and
//! fixed, and `gradcheck` is the safety net for every backward pass.

pub mod activation;
pub mod adam;
pub mod batchnorm;
pub mod conv;
pub mod dense;
pub mod gradcheck;
pub mod loss;
pub mod lstm;
pub mod real;
pub mod residual;
pub mod rnn;
pub mod tensor;

pub use activation::{
    activation, drelu_from_y, dsigmoid_from_y, dtanh_from_y, relu, sigmoid, tanh, ActKind,
};
pub use adam::AdamState;
pub use batchnorm::{batchnorm, BnCache, BnParams};
pub use conv::{conv2d, conv2d_backward, ConvParams};
pub use dense::DenseParams;
pub use gradcheck::grad_check;
pub use loss::{bce_loss, bce_sigmoid_grad};
pub use lstm::{
    bilstm_backward, bilstm_layer, bilstm_layer_cached, lstm_cell, lstm_layer, lstm_layer_backward,
    lstm_layer_cached, Direction, LstmParams,
};
pub use real::Real;
pub use residual::{residual_add, residual_apply};
pub use rnn::{rnn_cell, RnnParams};
pub use tensor::Tensor;

/// Whether normalization layers use batch statistics (training) or their
/// running estimates (inference).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}
