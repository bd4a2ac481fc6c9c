use std::collections::BTreeMap;

use chrono::{DateTime, NaiveDate};
use serde::{Deserialize, Serialize};

use super::PrepError;

pub const DEFAULT_D_MAX_S: i64 = 600;
const SECONDS_PER_DAY: i64 = 86_400;

/// A maximal run of log timestamps whose adjacent gaps are at most `d_max`.
/// Instants are Unix seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UsageInterval {
    pub participant_id: u32,
    pub t_start: i64,
    pub t_end: i64,
    pub duration_s: f64,
}

/// How an interval spanning midnight is attributed to days.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MidnightPolicy {
    /// Cut at each midnight; every day receives its own share.
    #[default]
    Split,
    /// The whole duration counts toward the day the interval started.
    StartDay,
}

pub fn segment_intervals(participant_id: u32, timestamps: &[i64], d_max: i64) -> Result<Vec<UsageInterval>, PrepError> {
    if d_max <= 0 {
        return Err(PrepError::Config(format!("d_max must be positive, got {d_max}")));
    }
    let mut out = Vec::new();
    let Some(&first) = timestamps.first() else {
        return Ok(out);
    };
    let mut start = first;
    let mut prev = first;
    for (i, &t) in timestamps.iter().enumerate().skip(1) {
        if t < prev {
            return Err(PrepError::Ordering(format!(
                "participant {participant_id}: timestamp {i} ({t}) precedes its predecessor ({prev})"
            )));
        }
        if t - prev > d_max {
            out.push(interval(participant_id, start, prev));
            start = t;
        }
        prev = t;
    }
    out.push(interval(participant_id, start, prev));
    Ok(out)
}

fn interval(participant_id: u32, t_start: i64, t_end: i64) -> UsageInterval {
    UsageInterval {
        participant_id,
        t_start,
        t_end,
        duration_s: (t_end - t_start) as f64,
    }
}

pub fn day_of(t: i64) -> NaiveDate {
    DateTime::from_timestamp(t.div_euclid(SECONDS_PER_DAY) * SECONDS_PER_DAY, 0)
        .expect("timestamp in range")
        .date_naive()
}

/// Per-day usage seconds over the participant's active range. Days inside
/// the range without any interval are present with zero usage.
pub fn daily_usage(intervals: &[UsageInterval], policy: MidnightPolicy) -> BTreeMap<NaiveDate, f64> {
    let mut out = BTreeMap::new();
    let (Some(lo), Some(hi)) = (
        intervals.iter().map(|iv| iv.t_start).min(),
        intervals.iter().map(|iv| iv.t_end).max(),
    ) else {
        return out;
    };
    let mut day = day_of(lo);
    while day <= day_of(hi) {
        out.insert(day, 0.0);
        day = day.succ_opt().expect("date in range");
    }
    for iv in intervals {
        match policy {
            MidnightPolicy::StartDay => *out.get_mut(&day_of(iv.t_start)).unwrap() += iv.duration_s,
            MidnightPolicy::Split => {
                let mut s = iv.t_start;
                while s < iv.t_end {
                    let midnight = (s.div_euclid(SECONDS_PER_DAY) + 1) * SECONDS_PER_DAY;
                    let e = iv.t_end.min(midnight);
                    *out.get_mut(&day_of(s)).unwrap() += (e - s) as f64;
                    s = e;
                }
            }
        }
    }
    out
}
