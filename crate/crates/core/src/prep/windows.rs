use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::split::Split;
use crate::nn::Matrix;

/// One forecasting example: `L` scaled input days followed by `H` target days.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub participant_id: u32,
    /// First input day.
    pub start_date: NaiveDate,
    pub split: Split,
    /// `L x F`, scaled.
    pub input: Matrix,
    /// Scaled usage of the `H` target days.
    pub target: Vec<f64>,
    /// Usage of the target days in seconds.
    pub target_s: Vec<f64>,
}

/// A day as the windowing step sees it.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowDay<'a> {
    pub date: NaiveDate,
    pub split: Split,
    pub scaled: &'a [f64],
    pub usage_s: f64,
}

/// Slides a stride-1 window over one participant's days (date order, gaps
/// allowed). Windows whose `L + H` days are not consecutive are skipped, as
/// are windows whose target days straddle splits; the rest take their
/// target split. `usage` is the column holding scaled usage.
pub fn make_windows(participant_id: u32, days: &[WindowDay<'_>], l: usize, h: usize, usage: usize) -> Vec<Sample> {
    assert!(l >= 1 && h >= 1, "window length and horizon must be positive");
    let span = l + h;
    if days.len() < span {
        log::warn!(
            "participant {participant_id}: {} days, fewer than window plus horizon ({span})",
            days.len()
        );
        return Vec::new();
    }
    let f = days[0].scaled.len();
    let mut out = Vec::new();
    for w in days.windows(span) {
        let consecutive = w.windows(2).all(|p| p[0].date.succ_opt() == Some(p[1].date));
        if !consecutive {
            continue;
        }
        let split = w[l].split;
        if w[l..].iter().any(|d| d.split != split) {
            continue;
        }
        let mut data = Vec::with_capacity(l * f);
        for d in &w[..l] {
            data.extend_from_slice(d.scaled);
        }
        out.push(Sample {
            participant_id,
            start_date: w[0].date,
            split,
            input: Matrix::from_vec(l, f, data).expect("consistent row width"),
            target: w[l..].iter().map(|d| d.scaled[usage]).collect(),
            target_s: w[l..].iter().map(|d| d.usage_s).collect(),
        });
    }
    out
}
