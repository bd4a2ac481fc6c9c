//! Mini-batch Adam on MSE with validation-based early stopping.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::nn::{adam_update, clip_global_norm, loss_and_gradient, mean_squared_error, AdamState, Example, Network};
use crate::seed::mix_seed;

pub const DEFAULT_MAX_EPOCHS: usize = 500;
pub const DEFAULT_PATIENCE: usize = 20;
pub const DEFAULT_CLIP_NORM: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_epochs: usize,
    /// `None` disables early stopping.
    pub patience: Option<usize>,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub clip_norm: f64,
    pub seed: u64,
    pub dropout: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_epochs: DEFAULT_MAX_EPOCHS,
            patience: Some(DEFAULT_PATIENCE),
            batch_size: 32,
            learning_rate: 0.001,
            clip_norm: DEFAULT_CLIP_NORM,
            seed: 0,
            dropout: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub train_mse: Vec<f64>,
    pub val_mse: Vec<f64>,
    /// 1-based.
    pub best_epoch: usize,
    pub best_val_mse: f64,
    pub stopped_early: bool,
    pub epoch_seconds: Vec<f64>,
    pub wall_time_s: f64,
    pub seed: u64,
}

impl TrainReport {
    pub fn epochs_run(&self) -> usize {
        self.val_mse.len()
    }

    /// `epoch,train_mse,val_mse,elapsed_s`
    pub fn write_log_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "epoch,train_mse,val_mse,elapsed_s")?;
        for e in 0..self.epochs_run() {
            writeln!(
                out,
                "{},{},{},{:.3}",
                e + 1,
                self.train_mse[e],
                self.val_mse[e],
                self.epoch_seconds[e]
            )?;
        }
        out.flush()
    }
}

/// Tracks the best validation loss; signals a stop after `patience` epochs
/// without strict improvement.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: Option<usize>,
    best: f64,
    best_epoch: usize,
    since_best: usize,
}

impl EarlyStopping {
    pub fn new(patience: Option<usize>) -> Self {
        Self {
            patience,
            best: f64::INFINITY,
            best_epoch: 0,
            since_best: 0,
        }
    }

    /// Records `epoch`'s loss; returns `(improved, should_stop)`.
    pub fn observe(&mut self, epoch: usize, val_loss: f64) -> (bool, bool) {
        let improved = val_loss < self.best;
        if improved {
            self.best = val_loss;
            self.best_epoch = epoch;
            self.since_best = 0;
        } else {
            self.since_best += 1;
        }
        let stop = self.patience.is_some_and(|p| self.since_best >= p);
        (improved, stop)
    }

    pub fn best(&self) -> (usize, f64) {
        (self.best_epoch, self.best)
    }
}

pub fn train<N: Network>(
    net: &mut N,
    train_set: &[Example<'_>],
    val_set: &[Example<'_>],
    cfg: &TrainConfig,
) -> Result<TrainReport, ModelError> {
    if train_set.is_empty() || val_set.is_empty() {
        return Err(ModelError::Config("training and validation sets must be non-empty".into()));
    }
    if cfg.batch_size == 0 {
        return Err(ModelError::Config("batch size must be positive".into()));
    }
    let start = Instant::now();
    let mut adam = AdamState::new(net.param_count(), cfg.learning_rate);
    let mut params = net.params_flat();
    let mut best_params = params.clone();
    let mut stopper = EarlyStopping::new(cfg.patience);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut report = TrainReport {
        train_mse: Vec::new(),
        val_mse: Vec::new(),
        best_epoch: 0,
        best_val_mse: f64::INFINITY,
        stopped_early: false,
        epoch_seconds: Vec::new(),
        wall_time_s: 0.0,
        seed: cfg.seed,
    };

    for epoch in 1..=cfg.max_epochs {
        let mut shuffle_rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, epoch as u64));
        order.shuffle(&mut shuffle_rng);

        let mut weighted_loss = 0.0;
        for (batch_index, idx) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<Example<'_>> = idx.iter().map(|&i| train_set[i]).collect();
            let dropout_seed = cfg
                .dropout
                .then(|| mix_seed(mix_seed(cfg.seed, epoch as u64), 1 + batch_index as u64));
            let (loss, mut grad) = loss_and_gradient(net, &batch, dropout_seed)?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(ModelError::NonFiniteLoss {
                    epoch,
                    batch_index,
                    learning_rate: cfg.learning_rate,
                    loss,
                });
            }
            weighted_loss += loss * batch.len() as f64;
            clip_global_norm(&mut grad, cfg.clip_norm);
            adam_update(&mut params, &grad, &mut adam);
            net.set_params_flat(&params);
        }

        let val = mean_squared_error(net, val_set)?;
        if !val.is_finite() {
            return Err(ModelError::NonFiniteLoss {
                epoch,
                batch_index: usize::MAX,
                learning_rate: cfg.learning_rate,
                loss: val,
            });
        }
        report.train_mse.push(weighted_loss / train_set.len() as f64);
        report.val_mse.push(val);
        report.epoch_seconds.push(start.elapsed().as_secs_f64());
        log::debug!(
            "epoch {epoch}: train {:.6} val {:.6}",
            report.train_mse[epoch - 1],
            val
        );

        let (improved, stop) = stopper.observe(epoch, val);
        if improved {
            best_params.copy_from_slice(&params);
        }
        if stop {
            report.stopped_early = epoch < cfg.max_epochs;
            break;
        }
    }

    net.set_params_flat(&best_params);
    let (best_epoch, best_val) = stopper.best();
    report.best_epoch = best_epoch;
    report.best_val_mse = best_val;
    report.wall_time_s = start.elapsed().as_secs_f64();
    Ok(report)
}
