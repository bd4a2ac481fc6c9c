//! Random search over the tuning grid. Trial settings are drawn up front
//! from one seeded stream, then trained in parallel; the outcome does not
//! depend on scheduling.

use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AttnEdModel, AttnEdShape, HyperParams, ModelError, SearchSpace, TrainConfig};
use crate::nn::Example;
use crate::seed::mix_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub budget: usize,
    /// Epoch cap per trial.
    pub max_epochs: usize,
    pub patience: Option<usize>,
    pub clip_norm: f64,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            budget: 60,
            max_epochs: 100,
            patience: Some(super::train::DEFAULT_PATIENCE),
            clip_norm: super::train::DEFAULT_CLIP_NORM,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub index: usize,
    pub hyper: HyperParams,
    pub seed: u64,
    /// Infinite when training diverged.
    pub best_val_mse: f64,
    pub epochs_run: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub best: HyperParams,
    pub best_trial: usize,
    pub trials: Vec<Trial>,
}

impl SearchOutcome {
    pub fn write_trials_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(
            w,
            "trial,hidden_units,lstm_dropout,recurrent_dropout,layer_dropout,dense_activation,learning_rate,batch_size,best_val_mse,epochs_run,error"
        )?;
        for t in &self.trials {
            let h = &t.hyper;
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{}",
                t.index,
                h.hidden_units,
                h.lstm_dropout,
                h.recurrent_dropout,
                h.layer_dropout,
                h.dense_activation,
                h.learning_rate,
                h.batch_size,
                t.best_val_mse,
                t.epochs_run,
                t.error.as_deref().unwrap_or("").replace(',', ";")
            )?;
        }
        w.flush()
    }
}

/// The trial settings a search with `budget` and `seed` evaluates.
pub fn trial_settings(space: &SearchSpace, budget: usize, seed: u64) -> Vec<HyperParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..budget).map(|_| space.sample(&mut rng)).collect()
}

pub fn hyper_search(
    space: &SearchSpace,
    cfg: &SearchConfig,
    shape: AttnEdShape,
    train_set: &[Example<'_>],
    val_set: &[Example<'_>],
) -> Result<SearchOutcome, ModelError> {
    if cfg.budget == 0 {
        return Err(ModelError::Config("search budget must be at least 1".into()));
    }
    let settings = trial_settings(space, cfg.budget, cfg.seed);
    let trials: Vec<Trial> = settings
        .into_par_iter()
        .enumerate()
        .map(|(index, hyper)| run_trial(index, hyper, cfg, shape, train_set, val_set))
        .collect::<Result<_, _>>()?;

    let mut best: Option<&Trial> = None;
    for t in &trials {
        if t.best_val_mse.is_finite() && best.map_or(true, |b| t.best_val_mse < b.best_val_mse) {
            best = Some(t);
        }
    }
    let best = best.ok_or_else(|| ModelError::Config("every search trial diverged".into()))?;
    Ok(SearchOutcome {
        best: best.hyper,
        best_trial: best.index,
        trials: trials.clone(),
    })
}

fn run_trial(
    index: usize,
    hyper: HyperParams,
    cfg: &SearchConfig,
    shape: AttnEdShape,
    train_set: &[Example<'_>],
    val_set: &[Example<'_>],
) -> Result<Trial, ModelError> {
    let seed = mix_seed(cfg.seed, 1 + index as u64);
    let mut net = AttnEdModel::new(hyper, shape, mix_seed(seed, 1))?;
    let tc = TrainConfig {
        max_epochs: cfg.max_epochs,
        patience: cfg.patience,
        batch_size: hyper.batch_size,
        learning_rate: hyper.learning_rate,
        clip_norm: cfg.clip_norm,
        seed: mix_seed(seed, 2),
        dropout: true,
    };
    let (best_val_mse, epochs_run, error) = match super::train(&mut net, train_set, val_set, &tc) {
        Ok(r) => (r.best_val_mse, r.epochs_run(), None),
        Err(e @ ModelError::NonFiniteLoss { .. }) => (f64::INFINITY, 0, Some(e.to_string())),
        Err(e) => return Err(e),
    };
    log::info!("trial {index}: val MSE {best_val_mse:.6} after {epochs_run} epochs");
    Ok(Trial {
        index,
        hyper,
        seed,
        best_val_mse,
        epochs_run,
        error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Matrix;

    fn data() -> (Vec<Matrix>, Vec<Vec<f64>>) {
        let xs: Vec<Matrix> = (0..6)
            .map(|i| Matrix::from_vec(2, 1, vec![0.1 * i as f64, 0.1 * i as f64 + 0.05]).unwrap())
            .collect();
        let ys: Vec<Vec<f64>> = (0..6).map(|i| vec![0.1 * i as f64 + 0.1]).collect();
        (xs, ys)
    }

    fn shape() -> AttnEdShape {
        AttnEdShape {
            window_len: 2,
            horizon: 1,
            n_features: 1,
            feedback_feature: 0,
        }
    }

    fn run(budget: usize, seed: u64) -> SearchOutcome {
        let (xs, ys) = data();
        let set: Vec<Example<'_>> = xs.iter().zip(&ys).map(|(x, y)| (x, y.as_slice())).collect();
        let cfg = SearchConfig {
            budget,
            max_epochs: 2,
            seed,
            ..SearchConfig::default()
        };
        let settings = trial_settings(&SearchSpace, budget, seed);
        let outcome = hyper_search(&SearchSpace, &cfg, shape(), &set, &set).unwrap();
        assert_eq!(outcome.trials.iter().map(|t| t.hyper).collect::<Vec<_>>(), settings);
        outcome
    }

    #[test]
    fn budget_one_returns_that_trial() {
        let o = run(1, 5);
        assert_eq!(o.trials.len(), 1);
        assert_eq!(o.best_trial, 0);
        assert_eq!(o.best, o.trials[0].hyper);
    }

    #[test]
    fn reproducible_and_on_grid() {
        let a = run(3, 9);
        let b = run(3, 9);
        assert_eq!(a, b);
        for t in &a.trials {
            t.hyper.validate().unwrap();
        }
        let min = a.trials.iter().map(|t| t.best_val_mse).fold(f64::INFINITY, f64::min);
        assert_eq!(a.trials[a.best_trial].best_val_mse, min);
        assert!(a.trials.iter().take(a.best_trial).all(|t| t.best_val_mse > min));
    }

    #[test]
    fn zero_budget_rejected() {
        let (xs, ys) = data();
        let set: Vec<Example<'_>> = xs.iter().zip(&ys).map(|(x, y)| (x, y.as_slice())).collect();
        let cfg = SearchConfig {
            budget: 0,
            ..SearchConfig::default()
        };
        assert!(hyper_search(&SearchSpace, &cfg, shape(), &set, &set).is_err());
    }
}
