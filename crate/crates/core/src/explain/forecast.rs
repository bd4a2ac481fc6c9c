//! SHAP explanations of trained forecasters over prepared windows.

use std::path::Path;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::kernel::{kernel_shap_with, ShapMode, ShapOptions};
use super::{global_aggregate, ExplainError, GlobalImportance, ShapExplanation};
use crate::metrics::Scope;
use crate::model::TrainedModel;
use crate::nn::Matrix;
use crate::prep::{PreparedDataset, Sample, Split};
use crate::seed::mix_seed;

/// Scalar derived from the H-day forecast (seconds).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplainTarget {
    HorizonMean,
    /// Zero-based forecast day.
    Day(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainConfig {
    /// Training windows drawn as the background set.
    pub background_size: usize,
    /// Coalitions in sampled mode.
    pub n_samples: usize,
    /// Cap on explained test windows per scope.
    pub max_instances: usize,
    pub target: ExplainTarget,
    pub mode: ShapMode,
    pub seed: u64,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        Self {
            background_size: 100,
            n_samples: 2048,
            max_instances: 200,
            target: ExplainTarget::HorizonMean,
            mode: ShapMode::Auto,
            seed: 0,
        }
    }
}

impl ExplainConfig {
    pub fn validate(&self) -> Result<(), ExplainError> {
        if self.background_size == 0 || self.max_instances == 0 {
            return Err(ExplainError::Protocol(
                "background_size and max_instances must be positive".into(),
            ));
        }
        Ok(())
    }
}

fn check_shape(model: &TrainedModel, input: &Matrix, what: &str) -> Result<(), ExplainError> {
    if input.shape() != (model.window_len, model.n_features()) {
        return Err(ExplainError::Dimension(format!(
            "{what} is {}x{}, model expects {}x{}",
            input.rows(),
            input.cols(),
            model.window_len,
            model.n_features()
        )));
    }
    Ok(())
}

/// Explains one forecast window. Players are the model's named input
/// features; display values are window means in original units.
pub fn explain_forecast(
    model: &TrainedModel,
    window: &Sample,
    background: &[&Sample],
    cfg: &ExplainConfig,
) -> Result<ShapExplanation, ExplainError> {
    if let Some(b) = background.iter().find(|b| b.split == Split::Test) {
        return Err(ExplainError::Protocol(format!(
            "background window (participant {}, {}) comes from the test split",
            b.participant_id, b.start_date
        )));
    }
    if let ExplainTarget::Day(d) = cfg.target {
        if d >= model.horizon {
            return Err(ExplainError::Protocol(format!(
                "target day {d} is outside the {}-day horizon",
                model.horizon
            )));
        }
    }
    check_shape(model, &window.input, "window")?;
    for b in background {
        check_shape(model, &b.input, "background window")?;
    }
    let target = cfg.target;
    let model_fn = |x: &Matrix| {
        let y = model.predict(x).expect("window shape checked");
        match target {
            ExplainTarget::HorizonMean => y.iter().sum::<f64>() / y.len() as f64,
            ExplainTarget::Day(d) => y[d],
        }
    };
    let bg: Vec<Matrix> = background.iter().map(|b| b.input.clone()).collect();
    let opts = ShapOptions {
        n_samples: cfg.n_samples,
        seed: cfg.seed,
        mode: cfg.mode,
    };
    let mut e = kernel_shap_with(model_fn, &window.input, &bg, &opts)?;
    e.feature_names = model.feature_names.clone();
    e.feature_values = e
        .feature_values
        .iter()
        .enumerate()
        .map(|(j, &v)| model.scaler.invert_value(j, v))
        .collect();
    Ok(e)
}

/// Uniform draw without replacement from the training windows, kept in
/// dataset order.
pub fn sample_background(ds: &PreparedDataset, size: usize, seed: u64) -> Vec<&Sample> {
    let train = ds.samples_in(Split::Train);
    pick(train, size, seed)
}

fn pick<T: Copy>(items: Vec<T>, size: usize, seed: u64) -> Vec<T> {
    if items.len() <= size {
        return items;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = index::sample(&mut rng, items.len(), size).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| items[i]).collect()
}

/// SHA-256 over the background windows' identity and contents.
pub fn background_fingerprint(background: &[&Sample]) -> String {
    let mut h = Sha256::new();
    for s in background {
        h.update(s.participant_id.to_le_bytes());
        h.update(s.start_date.to_string().as_bytes());
        for v in s.input.as_slice() {
            h.update(v.to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainedWindow {
    pub participant_id: u32,
    pub start_date: chrono::NaiveDate,
    #[serde(flatten)]
    pub explanation: ShapExplanation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainReport {
    pub scope: Scope,
    pub model: String,
    pub target: ExplainTarget,
    pub seed: u64,
    pub background_size: usize,
    pub background_fingerprint: String,
    pub global: GlobalImportance,
    pub explanations: Vec<ExplainedWindow>,
}

impl ExplainReport {
    pub fn shap_explanations(&self) -> Vec<ShapExplanation> {
        self.explanations.iter().map(|w| w.explanation.clone()).collect()
    }

    pub fn write_json(&self, path: &Path) -> Result<(), ExplainError> {
        let text = serde_json::to_string_pretty(self).map_err(|e| ExplainError::Io(e.to_string()))?;
        std::fs::write(path, text + "\n").map_err(|e| ExplainError::Io(format!("{}: {e}", path.display())))
    }
}

/// Explains the test windows inside `scope`, at most `max_instances` of
/// them, against a training-split background.
pub fn explain_scope(
    model: &TrainedModel,
    ds: &PreparedDataset,
    scope: Scope,
    cfg: &ExplainConfig,
) -> Result<ExplainReport, ExplainError> {
    cfg.validate()?;
    let test: Vec<&Sample> = ds
        .samples_in(Split::Test)
        .into_iter()
        .filter(|s| scope.includes(s.participant_id))
        .collect();
    if test.is_empty() {
        return Err(ExplainError::Empty(format!("no test windows in scope {scope}")));
    }
    let instances = pick(test, cfg.max_instances, mix_seed(cfg.seed, 1));
    let background = sample_background(ds, cfg.background_size, mix_seed(cfg.seed, 2));
    if background.is_empty() {
        return Err(ExplainError::Empty("no training windows for the background".into()));
    }
    let mut explanations = Vec::with_capacity(instances.len());
    for (k, s) in instances.iter().enumerate() {
        let e = explain_forecast(model, s, &background, cfg)?;
        log::debug!("explained window {}/{} (participant {})", k + 1, instances.len(), s.participant_id);
        explanations.push(ExplainedWindow {
            participant_id: s.participant_id,
            start_date: s.start_date,
            explanation: e,
        });
    }
    let plain: Vec<ShapExplanation> = explanations.iter().map(|w| w.explanation.clone()).collect();
    Ok(ExplainReport {
        scope,
        model: model.kind().to_string(),
        target: cfg.target,
        seed: cfg.seed,
        background_size: background.len(),
        background_fingerprint: background_fingerprint(&background),
        global: global_aggregate(&plain)?,
        explanations,
    })
}
