use super::daily::{DailyRecord, FEATURE_NAMES, N_FEATURES};
use super::PrepError;

/// Fills absent values with the mean of the observed ones. Returns `None`
/// when nothing is observed.
pub fn impute_trajectory_mean(series: &[Option<f64>]) -> Option<Vec<f64>> {
    let observed: Vec<f64> = series.iter().flatten().copied().collect();
    if observed.is_empty() {
        return None;
    }
    let mean = observed.iter().sum::<f64>() / observed.len() as f64;
    Some(series.iter().map(|v| v.unwrap_or(mean)).collect())
}

/// Imputes every feature of one participant's days (all from the same
/// participant, in date order). Returns the completed feature rows and the
/// number of filled cells.
pub fn impute_participant(days: &[DailyRecord]) -> Result<(Vec<[f64; N_FEATURES]>, usize), PrepError> {
    let mut rows = vec![[0.0; N_FEATURES]; days.len()];
    let mut filled = 0;
    for f in 0..N_FEATURES {
        let column: Vec<Option<f64>> = days.iter().map(|d| d.features()[f]).collect();
        filled += column.iter().filter(|v| v.is_none()).count();
        let complete = impute_trajectory_mean(&column).ok_or_else(|| PrepError::Imputation {
            participant: days.first().map_or(0, |d| d.participant_id),
            feature: FEATURE_NAMES[f].to_string(),
        })?;
        for (row, v) in rows.iter_mut().zip(complete) {
            row[f] = v;
        }
    }
    Ok((rows, filled))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fills_with_observed_mean() {
        assert_eq!(impute_trajectory_mean(&[Some(2.0), None, Some(4.0)]), Some(vec![2.0, 3.0, 4.0]));
        assert_eq!(impute_trajectory_mean(&[None, None, Some(5.0)]), Some(vec![5.0; 3]));
        assert_eq!(impute_trajectory_mean(&[Some(1.0), Some(7.0)]), Some(vec![1.0, 7.0]));
        assert_eq!(impute_trajectory_mean(&[None, None]), None);
    }

    #[test]
    fn idempotent() {
        let once = impute_trajectory_mean(&[None, Some(1.5), Some(-3.0), None]).unwrap();
        let again = impute_trajectory_mean(&once.iter().map(|&v| Some(v)).collect::<Vec<_>>()).unwrap();
        assert_eq!(once, again);
    }

    #[test]
    fn fully_absent_feature_names_participant_and_feature() {
        let day = DailyRecord {
            participant_id: 9,
            date: chrono::NaiveDate::from_ymd_opt(2019, 1, 1).unwrap(),
            usage_s: 10.0,
            age: Some(60.0),
            sex_1: Some(0.0),
            sex_2: Some(1.0),
            h_prog_ord: Some(1.0),
            h_vol_mean: Some(1.0),
            lat_rel_mean: Some(0.0),
            lon_rel_mean: Some(0.0),
            pta4_mean: None,
            sound_class_ord: Some(0.0),
        };
        match impute_participant(&[day]).unwrap_err() {
            PrepError::Imputation { participant, feature } => {
                assert_eq!(participant, 9);
                assert_eq!(feature, "PTA4");
            }
            other => panic!("unexpected {other}"),
        }
    }
}
