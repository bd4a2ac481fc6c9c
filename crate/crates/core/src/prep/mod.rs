//! Minute logs to windowed, scaled daily series.
//!
//! Pipeline order: usage intervals and daily aggregation, trajectory-mean
//! imputation, chronological split labels, scaling fitted on training days,
//! z-score outlier removal, a VIF report on training days, and finally
//! windowing over consecutive days.

mod daily;
mod impute;
mod intervals;
pub mod io;
mod outliers;
mod scaler;
mod split;
mod vif;
mod windows;

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

pub use daily::{aggregate_daily, aggregate_daily_with, aggregate_participant, synthetic_daily, DailyRecord, FEATURE_NAMES, N_FEATURES, USAGE};
pub use impute::{impute_participant, impute_trajectory_mean};
pub use intervals::{daily_usage, day_of, segment_intervals, MidnightPolicy, UsageInterval, DEFAULT_D_MAX_S};
pub use io::{load_dataset, write_dataset};
pub use outliers::flag_outliers_zscore;
pub use scaler::{apply_scaler, fit_scaler, invert_scaler, ScalerParams};
pub use split::{split_counts, split_per_participant, Split, MIN_SPLIT_DAYS};
pub use vif::{compute_vif, VifReport, DEFAULT_VIF_THRESHOLD};
pub use windows::{make_windows, Sample, WindowDay};

use crate::ingest::MinuteLog;
use crate::nn::{Example, Matrix};

#[derive(Debug, thiserror::Error)]
pub enum PrepError {
    #[error("timestamps out of order: {0}")]
    Ordering(String),
    #[error("participant {participant}: feature {feature} is never observed")]
    Imputation { participant: u32, feature: String },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid prep configuration: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("malformed dataset file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrepConfig {
    /// Longest gap, in seconds, inside one usage interval.
    pub d_max_s: i64,
    pub midnight: MidnightPolicy,
    pub z_threshold: f64,
    pub remove_outliers: bool,
    pub vif_threshold: f64,
    /// Drop features at or above the VIF threshold. Off by default: the two
    /// sex indicators always sum to one and would both be dropped.
    pub vif_drop: bool,
    pub window_len: usize,
    pub horizon: usize,
}

impl Default for PrepConfig {
    fn default() -> Self {
        Self {
            d_max_s: DEFAULT_D_MAX_S,
            midnight: MidnightPolicy::Split,
            z_threshold: 3.0,
            remove_outliers: true,
            vif_threshold: DEFAULT_VIF_THRESHOLD,
            vif_drop: false,
            window_len: 14,
            horizon: 14,
        }
    }
}

impl PrepConfig {
    pub fn validate(&self) -> Result<(), PrepError> {
        if self.d_max_s <= 0 {
            return Err(PrepError::Config("d_max_s must be positive".into()));
        }
        if self.window_len == 0 || self.horizon == 0 {
            return Err(PrepError::Config("window_len and horizon must be positive".into()));
        }
        if !(self.z_threshold > 0.0) || !(self.vif_threshold >= 1.0) {
            return Err(PrepError::Config("z_threshold must be positive and vif_threshold at least 1".into()));
        }
        Ok(())
    }
}

/// An imputed day in original units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyRow {
    pub participant_id: u32,
    pub date: NaiveDate,
    pub split: Split,
    pub outlier: bool,
    /// All [`FEATURE_NAMES`] columns.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantSummary {
    pub participant_id: u32,
    pub retained: bool,
    pub n_days: usize,
    pub train_days: usize,
    pub val_days: usize,
    pub test_days: usize,
    pub first_date: Option<NaiveDate>,
    pub last_date: Option<NaiveDate>,
    pub imputed_cells: usize,
    pub outlier_days: usize,
    pub train_windows: usize,
    pub val_windows: usize,
    pub test_windows: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreparedDataset {
    pub config: PrepConfig,
    /// Columns of every sample input, a subset of [`FEATURE_NAMES`].
    pub feature_names: Vec<String>,
    /// Scaling of exactly the `feature_names` columns.
    pub scaler: ScalerParams,
    pub vif: VifReport,
    pub samples: Vec<Sample>,
    pub daily: Vec<DailyRow>,
    pub participants: Vec<ParticipantSummary>,
}

impl PreparedDataset {
    pub fn window_len(&self) -> usize {
        self.config.window_len
    }

    pub fn horizon(&self) -> usize {
        self.config.horizon
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Input column carrying daily usage.
    pub fn usage_index(&self) -> usize {
        self.feature_names
            .iter()
            .position(|n| n == FEATURE_NAMES[USAGE])
            .expect("usage is always an input")
    }

    pub fn samples_in(&self, split: Split) -> Vec<&Sample> {
        self.samples.iter().filter(|s| s.split == split).collect()
    }

    pub fn examples(&self, split: Split) -> Vec<Example<'_>> {
        self.samples
            .iter()
            .filter(|s| s.split == split)
            .map(|s| (&s.input, s.target.as_slice()))
            .collect()
    }

    pub fn participant_ids(&self) -> Vec<u32> {
        self.participants.iter().filter(|p| p.retained).map(|p| p.participant_id).collect()
    }
}

/// Runs the whole pipeline on minute logs.
pub fn prepare(records: &[MinuteLog], cfg: &PrepConfig) -> Result<PreparedDataset, PrepError> {
    cfg.validate()?;
    prepare_daily(aggregate_daily_with(records, cfg.d_max_s, cfg.midnight)?, cfg)
}

/// Runs the pipeline from already aggregated days.
pub fn prepare_daily(days: Vec<DailyRecord>, cfg: &PrepConfig) -> Result<PreparedDataset, PrepError> {
    cfg.validate()?;
    let mut by_participant: BTreeMap<u32, Vec<DailyRecord>> = BTreeMap::new();
    for d in days {
        by_participant.entry(d.participant_id).or_default().push(d);
    }

    let mut participants = Vec::new();
    let mut daily: Vec<DailyRow> = Vec::new();
    for (pid, mut rows) in by_participant {
        rows.sort_by_key(|d| d.date);
        rows.dedup_by_key(|d| d.date);
        let mut summary = ParticipantSummary {
            participant_id: pid,
            retained: false,
            n_days: rows.len(),
            train_days: 0,
            val_days: 0,
            test_days: 0,
            first_date: rows.first().map(|d| d.date),
            last_date: rows.last().map(|d| d.date),
            imputed_cells: 0,
            outlier_days: 0,
            train_windows: 0,
            val_windows: 0,
            test_windows: 0,
        };
        let Some(labels) = split_per_participant(rows.len()) else {
            log::warn!("participant {pid}: only {} days, excluded", rows.len());
            participants.push(summary);
            continue;
        };
        let (values, filled) = impute_participant(&rows)?;
        summary.retained = true;
        summary.imputed_cells = filled;
        for ((d, v), split) in rows.iter().zip(values).zip(labels) {
            match split {
                Split::Train => summary.train_days += 1,
                Split::Val => summary.val_days += 1,
                Split::Test => summary.test_days += 1,
            }
            daily.push(DailyRow {
                participant_id: pid,
                date: d.date,
                split,
                outlier: false,
                values: v.to_vec(),
            });
        }
        participants.push(summary);
    }
    if daily.is_empty() {
        return Err(PrepError::InsufficientData(format!(
            "no participant has at least {MIN_SPLIT_DAYS} days"
        )));
    }

    let train_rows: Vec<&[f64]> = daily
        .iter()
        .filter(|r| r.split == Split::Train)
        .map(|r| r.values.as_slice())
        .collect();
    let full_scaler = fit_scaler(&train_rows, &FEATURE_NAMES)?;
    let scaled: Vec<Vec<f64>> = daily.iter().map(|r| apply_scaler(&r.values, &full_scaler)).collect();

    if cfg.remove_outliers {
        let flags = flag_outliers_zscore(&scaled, cfg.z_threshold);
        for (row, flag) in daily.iter_mut().zip(flags) {
            row.outlier = flag;
        }
    }

    let vif_rows: Vec<Vec<f64>> = daily
        .iter()
        .zip(&scaled)
        .filter(|(r, _)| r.split == Split::Train && !r.outlier)
        .map(|(_, s)| s.clone())
        .collect();
    let vif = compute_vif(&Matrix::from_rows(&vif_rows).map_err(|e| PrepError::InsufficientData(e.to_string()))?, &FEATURE_NAMES, cfg.vif_threshold)?;

    let selected: Vec<usize> = (0..N_FEATURES)
        .filter(|&j| !cfg.vif_drop || j == USAGE || vif.include[j])
        .collect();
    if cfg.vif_drop {
        log::info!("VIF selection keeps {} of {N_FEATURES} features", selected.len());
    }
    let scaler = select_scaler(&full_scaler, &selected);
    let usage_col = selected.iter().position(|&j| j == USAGE).expect("usage kept");
    let reduced: Vec<Vec<f64>> = scaled
        .iter()
        .map(|s| selected.iter().map(|&j| s[j]).collect())
        .collect();

    let mut samples = Vec::new();
    let mut start = 0;
    for summary in participants.iter_mut().filter(|p| p.retained) {
        let end = start + summary.n_days;
        let days: Vec<WindowDay<'_>> = (start..end)
            .filter(|&i| !daily[i].outlier)
            .map(|i| WindowDay {
                date: daily[i].date,
                split: daily[i].split,
                scaled: &reduced[i],
                usage_s: daily[i].values[USAGE],
            })
            .collect();
        summary.outlier_days = summary.n_days - days.len();
        let windows = make_windows(summary.participant_id, &days, cfg.window_len, cfg.horizon, usage_col);
        for s in &windows {
            match s.split {
                Split::Train => summary.train_windows += 1,
                Split::Val => summary.val_windows += 1,
                Split::Test => summary.test_windows += 1,
            }
        }
        samples.extend(windows);
        start = end;
    }

    Ok(PreparedDataset {
        config: cfg.clone(),
        feature_names: selected.iter().map(|&j| FEATURE_NAMES[j].to_string()).collect(),
        scaler,
        vif,
        samples,
        daily,
        participants,
    })
}

fn select_scaler(full: &ScalerParams, cols: &[usize]) -> ScalerParams {
    let pick = |v: &[f64]| cols.iter().map(|&j| v[j]).collect::<Vec<_>>();
    ScalerParams {
        feature_names: cols.iter().map(|&j| full.feature_names[j].clone()).collect(),
        mean: pick(&full.mean),
        std: pick(&full.std),
        min: pick(&full.min),
        max: pick(&full.max),
        constant: cols.iter().map(|&j| full.constant[j]).collect(),
        fitted_on_train: full.fitted_on_train,
    }
}
