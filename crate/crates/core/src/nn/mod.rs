//! Minimal double-precision kernel: matrices, LSTM, self-attention, dense
//! and dropout layers, analytic gradients, Adam, and a finite-difference
//! gradient checker.

pub mod activation;
pub mod adam;
pub mod attention;
pub mod dense;
pub mod dropout;
pub mod gradcheck;
pub mod lstm;
pub mod matrix;
pub mod network;

use thiserror::Error;

pub use activation::{sigmoid, softmax, Activation};
pub use adam::{adam_update, clip_global_norm, AdamState};
pub use attention::{attention_weights, self_attention};
pub use dense::{dense_forward, DenseParams};
pub use dropout::{dropout, dropout_mask};
pub use gradcheck::{finite_diff_check, GradCheckReport};
pub use lstm::{lstm_forward, lstm_step, LstmOutput, LstmParams};
pub use matrix::Matrix;
pub use network::{loss_and_gradient, mean_squared_error, Example, Network};

#[derive(Debug, Error)]
pub enum NnError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("empty input sequence")]
    EmptySequence,
    #[error("invalid configuration: {0}")]
    Config(String),
}
