use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::record::MinuteLog;

/// Accepted numeric ranges. Values outside are counted, never rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationRanges {
    pub h_vol: (i32, i32),
    pub age_max: u32,
    pub pta4: (f64, f64),
}

impl Default for ValidationRanges {
    fn default() -> Self {
        Self {
            h_vol: (0, 10),
            age_max: 130,
            pta4: (-10.0, 130.0),
        }
    }
}

pub const OPTIONAL_FIELDS: [&str; 8] = ["Age", "Sex", "hProg", "hVol", "LatRel", "LonRel", "PTA4", "SoundClass"];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub n_records: usize,
    pub null_counts: BTreeMap<String, usize>,
    pub out_of_range: BTreeMap<String, usize>,
    pub duplicate_pairs: usize,
    pub per_participant: BTreeMap<u32, usize>,
    pub non_monotonic_participants: Vec<u32>,
}

impl ValidationReport {
    /// Absent values are expected and are not errors.
    pub fn error_count(&self) -> usize {
        self.out_of_range.values().sum::<usize>() + self.duplicate_pairs
    }

    pub fn is_clean(&self) -> bool {
        self.error_count() == 0
    }
}

pub fn validate_schema(records: &[MinuteLog]) -> ValidationReport {
    validate_schema_with(records, &ValidationRanges::default())
}

pub fn validate_schema_with(records: &[MinuteLog], ranges: &ValidationRanges) -> ValidationReport {
    let mut report = ValidationReport {
        n_records: records.len(),
        ..ValidationReport::default()
    };
    for name in OPTIONAL_FIELDS {
        report.null_counts.insert(name.to_string(), 0);
        report.out_of_range.insert(name.to_string(), 0);
    }

    let mut seen = HashSet::with_capacity(records.len());
    let mut last_ts = BTreeMap::new();
    let mut non_monotonic = std::collections::BTreeSet::new();
    for r in records {
        let nulls = [
            r.age.is_none(),
            r.sex.is_none(),
            r.h_prog.is_none(),
            r.h_vol.is_none(),
            r.lat_rel.is_none(),
            r.lon_rel.is_none(),
            r.pta4.is_none(),
            r.sound_class.is_none(),
        ];
        for (name, null) in OPTIONAL_FIELDS.iter().zip(nulls) {
            if null {
                *report.null_counts.get_mut(*name).unwrap() += 1;
            }
        }
        let mut bad = |name: &str, cond: bool| {
            if cond {
                *report.out_of_range.get_mut(name).unwrap() += 1;
            }
        };
        bad("Age", r.age.is_some_and(|a| a > ranges.age_max));
        bad("hVol", r.h_vol.is_some_and(|v| v < ranges.h_vol.0 || v > ranges.h_vol.1));
        bad("LatRel", r.lat_rel.is_some_and(|v| !v.is_finite()));
        bad("LonRel", r.lon_rel.is_some_and(|v| !v.is_finite()));
        bad(
            "PTA4",
            r.pta4
                .is_some_and(|v| !v.is_finite() || v < ranges.pta4.0 || v > ranges.pta4.1),
        );

        if !seen.insert((r.participant_id, r.timestamp)) {
            report.duplicate_pairs += 1;
        }
        *report.per_participant.entry(r.participant_id).or_insert(0) += 1;
        if let Some(prev) = last_ts.insert(r.participant_id, r.timestamp) {
            if r.timestamp < prev {
                non_monotonic.insert(r.participant_id);
            }
        }
    }
    report.non_monotonic_participants = non_monotonic.into_iter().collect();
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{Duration, TimeZone, Utc};

    fn row(id: u32, minute: i64) -> MinuteLog {
        MinuteLog {
            participant_id: id,
            age: Some(70),
            sex: None,
            h_prog: None,
            h_vol: Some(4),
            lat_rel: Some(0.0),
            lon_rel: Some(0.0),
            pta4: Some(40.0),
            sound_class: None,
            timestamp: Utc.with_ymd_and_hms(2019, 1, 1, 0, 0, 0).unwrap() + Duration::minutes(minute),
        }
    }

    #[test]
    fn identical_pair_counts_once() {
        let r = validate_schema(&[row(1, 0), row(1, 0)]);
        assert_eq!(r.duplicate_pairs, 1);
        assert_eq!(r.per_participant[&1], 2);
    }

    #[test]
    fn empty_input_is_all_zero() {
        let r = validate_schema(&[]);
        assert_eq!(r.n_records, 0);
        assert_eq!(r.error_count(), 0);
        assert!(r.null_counts.values().all(|&c| c == 0));
        assert!(r.per_participant.is_empty());
    }

    #[test]
    fn counts_null_pta4() {
        let mut rows: Vec<_> = (0..10).map(|m| row(2, m)).collect();
        rows[3].pta4 = None;
        rows[7].pta4 = None;
        let r = validate_schema(&rows);
        assert_eq!(r.null_counts["PTA4"], 2);
        assert_eq!(r.null_counts["Sex"], 10);
        assert!(r.is_clean());
    }

    #[test]
    fn flags_range_and_order() {
        let mut rows = vec![row(3, 5), row(3, 1)];
        rows[0].h_vol = Some(11);
        let r = validate_schema(&rows);
        assert_eq!(r.out_of_range["hVol"], 1);
        assert_eq!(r.non_monotonic_participants, vec![3]);
    }
}
