//! Hyperparameters, the tuning grid they are drawn from, and named presets.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::nn::Activation;

pub const HIDDEN_UNITS: [usize; 5] = [32, 64, 128, 216, 512];
pub const BATCH_SIZES: [usize; 3] = [16, 32, 64];
pub const ACTIVATIONS: [Activation; 3] = [Activation::Relu, Activation::Sigmoid, Activation::Tanh];
/// Shared bounds of the three dropout rates and the learning rate.
pub const RATE_RANGE: (f64, f64) = (0.0001, 0.01);

pub const PRESET_OPTIMAL_EVOTION: &str = "optimal-evotion";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub hidden_units: usize,
    /// Dropout on LSTM input connections.
    pub lstm_dropout: f64,
    /// Dropout on hidden-to-hidden connections, one mask per sequence.
    pub recurrent_dropout: f64,
    /// Dropout on the attention context.
    pub layer_dropout: f64,
    pub dense_activation: Activation,
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl HyperParams {
    /// Tuned settings reported for the hearing-aid cohort.
    pub fn optimal_evotion() -> Self {
        Self {
            hidden_units: 128,
            lstm_dropout: 0.0002,
            recurrent_dropout: 0.0041,
            layer_dropout: 0.0008,
            dense_activation: Activation::Tanh,
            learning_rate: 0.0013,
            batch_size: 32,
        }
    }

    pub fn preset(name: &str) -> Result<Self, ModelError> {
        match name {
            PRESET_OPTIMAL_EVOTION => Ok(Self::optimal_evotion()),
            other => Err(ModelError::Config(format!("unknown preset `{other}`"))),
        }
    }

    /// Checks every value against the tuning grid.
    pub fn validate(&self) -> Result<(), ModelError> {
        if !HIDDEN_UNITS.contains(&self.hidden_units) {
            return Err(ModelError::Config(format!(
                "hidden_units {} not in {HIDDEN_UNITS:?}",
                self.hidden_units
            )));
        }
        if !BATCH_SIZES.contains(&self.batch_size) {
            return Err(ModelError::Config(format!(
                "batch_size {} not in {BATCH_SIZES:?}",
                self.batch_size
            )));
        }
        if !ACTIVATIONS.contains(&self.dense_activation) {
            return Err(ModelError::Config(format!(
                "dense activation {} not in relu/sigmoid/tanh",
                self.dense_activation
            )));
        }
        let (lo, hi) = RATE_RANGE;
        for (name, v) in [
            ("lstm_dropout", self.lstm_dropout),
            ("recurrent_dropout", self.recurrent_dropout),
            ("layer_dropout", self.layer_dropout),
            ("learning_rate", self.learning_rate),
        ] {
            if !(lo..=hi).contains(&v) {
                return Err(ModelError::Config(format!("{name} {v} outside [{lo}, {hi}]")));
            }
        }
        Ok(())
    }
}

/// Random-search sampler over the tuning grid: categorical settings uniform,
/// rates log-uniform.
#[derive(Debug, Clone, Copy, Default)]
pub struct SearchSpace;

impl SearchSpace {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> HyperParams {
        HyperParams {
            hidden_units: HIDDEN_UNITS[rng.gen_range(0..HIDDEN_UNITS.len())],
            lstm_dropout: log_uniform(rng, RATE_RANGE),
            recurrent_dropout: log_uniform(rng, RATE_RANGE),
            layer_dropout: log_uniform(rng, RATE_RANGE),
            dense_activation: ACTIVATIONS[rng.gen_range(0..ACTIVATIONS.len())],
            learning_rate: log_uniform(rng, RATE_RANGE),
            batch_size: BATCH_SIZES[rng.gen_range(0..BATCH_SIZES.len())],
        }
    }
}

fn log_uniform<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    let v = rng.gen_range(lo.ln()..=hi.ln()).exp();
    v.clamp(lo, hi)
}
