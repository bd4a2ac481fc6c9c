//! attn-ED and the Vanilla LSTM baseline: construction, training, random
//! hyperparameter search, inference in original units, and checkpoints.

pub mod attn_ed;
pub mod checkpoint;
pub mod hyper;
pub mod search;
pub mod train;
pub mod vanilla;

use std::fmt;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use attn_ed::{build_attn_ed, AttnEdModel, AttnEdShape};
pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_VERSION};
pub use hyper::{HyperParams, SearchSpace, PRESET_OPTIMAL_EVOTION};
pub use search::{hyper_search, SearchConfig, SearchOutcome, Trial};
pub use train::{train, EarlyStopping, TrainConfig, TrainReport};
pub use vanilla::{build_vanilla_lstm, VanillaLstm};

use crate::nn::{Matrix, Network, NnError};
use crate::prep::{PreparedDataset, ScalerParams, Split};
use crate::seed::mix_seed;

pub const MAX_DAILY_USAGE_S: f64 = 86_400.0;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error(
        "non-finite loss {loss} at epoch {epoch}, batch {batch_index} (learning rate {learning_rate}); \
         lower the learning rate"
    )]
    NonFiniteLoss {
        epoch: usize,
        batch_index: usize,
        learning_rate: f64,
        loss: f64,
    },
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("checkpoint i/o error: {0}")]
    Io(String),
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
    #[error("checkpoint version {found} is not supported (expected {expected})")]
    Version { found: u32, expected: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "attn-ed")]
    AttnEd,
    #[serde(rename = "vanilla")]
    Vanilla,
}

impl ModelKind {
    pub const ALL: [ModelKind; 2] = [ModelKind::AttnEd, ModelKind::Vanilla];

    /// File-name friendly identifier.
    pub fn slug(self) -> &'static str {
        match self {
            ModelKind::AttnEd => "attn-ed",
            ModelKind::Vanilla => "vanilla",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::AttnEd => "attn-ED",
            ModelKind::Vanilla => "Vanilla LSTM",
        })
    }
}

impl FromStr for ModelKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "attn-ed" | "attn_ed" | "attned" => Ok(ModelKind::AttnEd),
            "vanilla" | "vanilla-lstm" | "lstm" => Ok(ModelKind::Vanilla),
            other => Err(format!("unknown model `{other}` (expected attn-ed or vanilla)")),
        }
    }
}

/// Either forecaster behind one [`Network`] implementation.
#[derive(Debug, Clone, PartialEq)]
pub enum ForecastNet {
    AttnEd(AttnEdModel),
    Vanilla(VanillaLstm),
}

impl ForecastNet {
    pub fn kind(&self) -> ModelKind {
        match self {
            ForecastNet::AttnEd(_) => ModelKind::AttnEd,
            ForecastNet::Vanilla(_) => ModelKind::Vanilla,
        }
    }
}

macro_rules! delegate {
    ($self:ident, $m:ident => $e:expr) => {
        match $self {
            ForecastNet::AttnEd($m) => $e,
            ForecastNet::Vanilla($m) => $e,
        }
    };
}

impl Network for ForecastNet {
    fn param_blocks(&self) -> Vec<(String, usize)> {
        delegate!(self, m => m.param_blocks())
    }

    fn params_flat(&self) -> Vec<f64> {
        delegate!(self, m => m.params_flat())
    }

    fn set_params_flat(&mut self, flat: &[f64]) {
        delegate!(self, m => m.set_params_flat(flat))
    }

    fn output_len(&self) -> usize {
        delegate!(self, m => m.output_len())
    }

    fn forward(&self, input: &Matrix) -> Result<Vec<f64>, NnError> {
        delegate!(self, m => m.forward(input))
    }

    fn accumulate_gradient(
        &self,
        input: &Matrix,
        target: &[f64],
        dropout: Option<&mut ChaCha8Rng>,
        scale: f64,
        grad: &mut [f64],
    ) -> Result<f64, NnError> {
        delegate!(self, m => m.accumulate_gradient(input, target, dropout, scale, grad))
    }
}

/// A trained forecaster together with what inference needs: the input
/// scaler and the column layout.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub net: ForecastNet,
    pub scaler: ScalerParams,
    pub feature_names: Vec<String>,
    pub usage_index: usize,
    pub window_len: usize,
    pub horizon: usize,
    /// Named hyperparameter preset, when one was used.
    pub preset: Option<String>,
    pub seed: u64,
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        self.net.kind()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Forecast in scaled units.
    pub fn predict_scaled(&self, window: &Matrix) -> Result<Vec<f64>, ModelError> {
        if window.shape() != (self.window_len, self.n_features()) {
            return Err(ModelError::Nn(NnError::Dimension(format!(
                "expected a {}x{} window, got {}x{}",
                self.window_len,
                self.n_features(),
                window.rows(),
                window.cols()
            ))));
        }
        Ok(self.net.forward(window)?)
    }

    /// Forecast usage in seconds per day, clamped to `[0, 86400]`. The window
    /// must already be scaled with [`TrainedModel::scaler`].
    pub fn predict(&self, window: &Matrix) -> Result<Vec<f64>, ModelError> {
        Ok(self
            .predict_scaled(window)?
            .into_iter()
            .map(|y| self.scaler.invert_value(self.usage_index, y).clamp(0.0, MAX_DAILY_USAGE_S))
            .collect())
    }
}

pub fn predict(model: &TrainedModel, window: &Matrix) -> Result<Vec<f64>, ModelError> {
    model.predict(window)
}

/// Run-level training options; per-model settings come from the
/// hyperparameters (attn-ED) or the fixed baseline constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitOptions {
    pub max_epochs: usize,
    pub patience: Option<usize>,
    pub clip_norm: f64,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_epochs: train::DEFAULT_MAX_EPOCHS,
            patience: Some(train::DEFAULT_PATIENCE),
            clip_norm: train::DEFAULT_CLIP_NORM,
            seed: 0,
        }
    }
}

/// Builds and trains a model on the dataset's train and validation samples.
pub fn fit(
    kind: ModelKind,
    hp: &HyperParams,
    preset: Option<&str>,
    ds: &PreparedDataset,
    opts: &FitOptions,
) -> Result<(TrainedModel, TrainReport), ModelError> {
    let (l, h, f) = (ds.window_len(), ds.horizon(), ds.n_features());
    let init_seed = mix_seed(opts.seed, 1);
    let (mut net, batch_size, learning_rate, dropout) = match kind {
        ModelKind::AttnEd => {
            hp.validate()?;
            let shape = AttnEdShape {
                window_len: l,
                horizon: h,
                n_features: f,
                feedback_feature: ds.usage_index(),
            };
            let m = AttnEdModel::new(*hp, shape, init_seed)?;
            (ForecastNet::AttnEd(m), hp.batch_size, hp.learning_rate, true)
        }
        ModelKind::Vanilla => (
            ForecastNet::Vanilla(build_vanilla_lstm(l, f, h, init_seed)),
            vanilla::VANILLA_BATCH_SIZE,
            vanilla::VANILLA_LEARNING_RATE,
            false,
        ),
    };
    let cfg = TrainConfig {
        max_epochs: opts.max_epochs,
        patience: opts.patience,
        batch_size,
        learning_rate,
        clip_norm: opts.clip_norm,
        seed: mix_seed(opts.seed, 2),
        dropout,
    };
    let train_set = ds.examples(Split::Train);
    let val_set = ds.examples(Split::Val);
    let report = train(&mut net, &train_set, &val_set, &cfg)?;
    let model = TrainedModel {
        net,
        scaler: ds.scaler.clone(),
        feature_names: ds.feature_names.clone(),
        usage_index: ds.usage_index(),
        window_len: l,
        horizon: h,
        preset: preset.map(str::to_string),
        seed: opts.seed,
    };
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Activation;

    fn scaler() -> ScalerParams {
        ScalerParams {
            feature_names: vec!["Usage".into(), "x".into()],
            mean: vec![30_000.0, 0.0],
            std: vec![10_000.0, 1.0],
            min: vec![-3.0, -1.0],
            max: vec![3.0, 1.0],
            constant: vec![false, false],
            fitted_on_train: true,
        }
    }

    fn model(kind: ModelKind) -> TrainedModel {
        let net = match kind {
            ModelKind::AttnEd => {
                let hp = HyperParams {
                    hidden_units: 4,
                    dense_activation: Activation::Relu,
                    ..HyperParams::optimal_evotion()
                };
                let shape = AttnEdShape {
                    window_len: 3,
                    horizon: 14,
                    n_features: 2,
                    feedback_feature: 0,
                };
                ForecastNet::AttnEd(AttnEdModel::new(hp, shape, 1).unwrap())
            }
            ModelKind::Vanilla => ForecastNet::Vanilla(VanillaLstm::new(3, 2, 14, 4, 1)),
        };
        TrainedModel {
            net,
            scaler: scaler(),
            feature_names: vec!["Usage".into(), "x".into()],
            usage_index: 0,
            window_len: 3,
            horizon: 14,
            preset: None,
            seed: 1,
        }
    }

    #[test]
    fn predictions_are_repeatable_clamped_and_sized() {
        let w = Matrix::from_rows(&[vec![0.2, 0.9], vec![0.4, -0.3], vec![1.0, 0.0]]).unwrap();
        for kind in ModelKind::ALL {
            let m = model(kind);
            let a = m.predict(&w).unwrap();
            assert_eq!(a, m.predict(&w).unwrap());
            assert_eq!(a.len(), 14);
            assert!(a.iter().all(|v| (0.0..=MAX_DAILY_USAGE_S).contains(v)));
        }
    }

    #[test]
    fn clamp_applies_to_extreme_outputs() {
        let mut m = model(ModelKind::Vanilla);
        if let ForecastNet::Vanilla(v) = &mut m.net {
            v.head.bias.iter_mut().for_each(|b| *b = 100.0);
        }
        let w = Matrix::zeros(3, 2);
        assert!(m.predict(&w).unwrap().iter().all(|&v| v == MAX_DAILY_USAGE_S));
    }

    #[test]
    fn wrong_window_shape_is_a_dimension_error() {
        let m = model(ModelKind::AttnEd);
        assert!(matches!(
            m.predict(&Matrix::zeros(4, 2)),
            Err(ModelError::Nn(NnError::Dimension(_)))
        ));
    }

    #[test]
    fn kind_names() {
        assert_eq!("attn-ed".parse::<ModelKind>().unwrap(), ModelKind::AttnEd);
        assert_eq!("Vanilla".parse::<ModelKind>().unwrap(), ModelKind::Vanilla);
        assert!("gru".parse::<ModelKind>().is_err());
        assert_eq!(ModelKind::Vanilla.to_string(), "Vanilla LSTM");
    }
}
