use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::intervals::{daily_usage, day_of, segment_intervals, MidnightPolicy};
use super::PrepError;
use crate::ingest::{generate_participant, MinuteLog, Sex, SynthConfig};

/// Model input features, in column order.
pub const FEATURE_NAMES: [&str; 10] = [
    "Usage",
    "hVol",
    "PTA4",
    "Age",
    "Sex_1",
    "Sex_2",
    "hProg",
    "LatRel",
    "LonRel",
    "SoundClass",
];
pub const N_FEATURES: usize = FEATURE_NAMES.len();
pub const USAGE: usize = 0;

/// One participant-day. Everything but usage may be absent before imputation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyRecord {
    pub participant_id: u32,
    pub date: NaiveDate,
    pub usage_s: f64,
    pub age: Option<f64>,
    /// Female indicator.
    pub sex_1: Option<f64>,
    /// Male indicator.
    pub sex_2: Option<f64>,
    pub h_prog_ord: Option<f64>,
    pub h_vol_mean: Option<f64>,
    pub lat_rel_mean: Option<f64>,
    pub lon_rel_mean: Option<f64>,
    pub pta4_mean: Option<f64>,
    pub sound_class_ord: Option<f64>,
}

impl DailyRecord {
    /// Values in [`FEATURE_NAMES`] order.
    pub fn features(&self) -> [Option<f64>; N_FEATURES] {
        [
            Some(self.usage_s),
            self.h_vol_mean,
            self.pta4_mean,
            self.age,
            self.sex_1,
            self.sex_2,
            self.h_prog_ord,
            self.lat_rel_mean,
            self.lon_rel_mean,
            self.sound_class_ord,
        ]
    }
}

#[derive(Default, Clone, Copy)]
struct Mean {
    sum: f64,
    n: u32,
}

impl Mean {
    fn add(&mut self, v: Option<f64>) {
        if let Some(v) = v {
            self.sum += v;
            self.n += 1;
        }
    }

    fn get(self) -> Option<f64> {
        (self.n > 0).then(|| self.sum / self.n as f64)
    }
}

#[derive(Default, Clone, Copy)]
struct DayAcc {
    age: Mean,
    female: Mean,
    prog: Mean,
    vol: Mean,
    lat: Mean,
    lon: Mean,
    pta4: Mean,
    sound: Mean,
}

/// Aggregates minute logs into participant-days, ordered by participant and
/// date. Logs need not be sorted.
pub fn aggregate_daily(records: &[MinuteLog], d_max: i64) -> Result<Vec<DailyRecord>, PrepError> {
    aggregate_daily_with(records, d_max, MidnightPolicy::default())
}

pub fn aggregate_daily_with(
    records: &[MinuteLog],
    d_max: i64,
    policy: MidnightPolicy,
) -> Result<Vec<DailyRecord>, PrepError> {
    let mut by_participant: BTreeMap<u32, Vec<&MinuteLog>> = BTreeMap::new();
    for r in records {
        by_participant.entry(r.participant_id).or_default().push(r);
    }
    let mut out = Vec::new();
    for (pid, mut rows) in by_participant {
        rows.sort_by_key(|r| r.timestamp);
        out.extend(aggregate_participant(pid, &rows, d_max, policy)?);
    }
    Ok(out)
}

/// Aggregates one participant's logs, which must be sorted by timestamp.
/// Generates the synthetic cohort one participant at a time and aggregates
/// it to days, never holding more than one participant's minute logs.
pub fn synthetic_daily(
    cfg: &SynthConfig,
    d_max: i64,
    policy: MidnightPolicy,
) -> Result<Vec<DailyRecord>, PrepError> {
    cfg.validate().map_err(|e| PrepError::Config(e.to_string()))?;
    let mut out = Vec::new();
    for pid in cfg.participant_ids() {
        let mut logs = generate_participant(cfg, pid);
        logs.sort_by_key(|r| r.timestamp);
        let rows: Vec<&MinuteLog> = logs.iter().collect();
        out.extend(aggregate_participant(pid, &rows, d_max, policy)?);
    }
    Ok(out)
}

pub fn aggregate_participant(
    participant_id: u32,
    rows: &[&MinuteLog],
    d_max: i64,
    policy: MidnightPolicy,
) -> Result<Vec<DailyRecord>, PrepError> {
    let stamps: Vec<i64> = rows.iter().map(|r| r.timestamp.timestamp()).collect();
    let intervals = segment_intervals(participant_id, &stamps, d_max)?;
    let usage = daily_usage(&intervals, policy);

    let mut acc: BTreeMap<NaiveDate, DayAcc> = usage.keys().map(|&d| (d, DayAcc::default())).collect();
    for (r, &t) in rows.iter().zip(&stamps) {
        let a = acc.entry(day_of(t)).or_default();
        a.age.add(r.age.map(f64::from));
        a.female.add(r.sex.map(|s| if s == Sex::Female { 1.0 } else { 0.0 }));
        a.prog.add(r.h_prog.map(|p| p.ordinal() as f64));
        a.vol.add(r.h_vol.map(f64::from));
        a.lat.add(r.lat_rel);
        a.lon.add(r.lon_rel);
        a.pta4.add(r.pta4);
        a.sound.add(r.sound_class.map(|s| s.ordinal() as f64));
    }

    Ok(acc
        .into_iter()
        .map(|(date, a)| {
            let female = a.female.get();
            DailyRecord {
                participant_id,
                date,
                usage_s: usage.get(&date).copied().unwrap_or(0.0),
                age: a.age.get(),
                sex_1: female,
                sex_2: female.map(|f| 1.0 - f),
                h_prog_ord: a.prog.get(),
                h_vol_mean: a.vol.get(),
                lat_rel_mean: a.lat.get(),
                lon_rel_mean: a.lon.get(),
                pta4_mean: a.pta4.get(),
                sound_class_ord: a.sound.get(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{HProg, SoundClass};
    use chrono::{Duration, TimeZone, Utc};

    fn log(minute: i64, vol: i32, prog: HProg) -> MinuteLog {
        MinuteLog {
            participant_id: 5,
            age: Some(70),
            sex: Some(Sex::Female),
            h_prog: Some(prog),
            h_vol: Some(vol),
            lat_rel: Some(0.1),
            lon_rel: None,
            pta4: Some(40.0),
            sound_class: Some(SoundClass::Noise),
            timestamp: Utc.with_ymd_and_hms(2019, 3, 1, 8, 0, 0).unwrap() + Duration::minutes(minute),
        }
    }

    #[test]
    fn means_and_codes() {
        let rows = vec![log(0, 2, HProg::Low), log(1, 4, HProg::High)];
        let days = aggregate_daily(&rows, 600).unwrap();
        assert_eq!(days.len(), 1);
        let d = &days[0];
        assert_eq!(d.h_vol_mean, Some(3.0));
        assert_eq!(d.h_prog_ord, Some(1.0));
        assert_eq!((d.sex_1, d.sex_2), (Some(1.0), Some(0.0)));
        assert_eq!(d.sound_class_ord, Some(3.0));
        assert_eq!(d.lon_rel_mean, None);
        assert_eq!(d.usage_s, 60.0);
    }

    #[test]
    fn idle_day_inside_range_is_zero_and_absent() {
        let rows = vec![log(0, 2, HProg::Low), log(2 * 1440, 2, HProg::Low)];
        let days = aggregate_daily(&rows, 600).unwrap();
        assert_eq!(days.len(), 3);
        assert_eq!(days[1].usage_s, 0.0);
        assert_eq!(days[1].h_vol_mean, None);
        assert_eq!(days[1].features()[USAGE], Some(0.0));
    }

    #[test]
    fn unsorted_input_is_sorted_per_participant() {
        let rows = vec![log(3, 1, HProg::Low), log(0, 1, HProg::Low)];
        assert_eq!(aggregate_daily(&rows, 600).unwrap()[0].usage_s, 180.0);
    }
}
