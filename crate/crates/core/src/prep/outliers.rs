/// Flags each row having any feature with |z| above `threshold`, where z uses
/// the mean and population standard deviation of `rows` themselves.
/// Zero-variance features never flag.
pub fn flag_outliers_zscore<R: AsRef<[f64]>>(rows: &[R], threshold: f64) -> Vec<bool> {
    let n = rows.len();
    if n < 2 {
        log::warn!("outlier screening skipped: {n} row(s)");
        return vec![false; n];
    }
    let f = rows[0].as_ref().len();
    let mut flags = vec![false; n];
    for j in 0..f {
        let mean = rows.iter().map(|r| r.as_ref()[j]).sum::<f64>() / n as f64;
        let var = rows.iter().map(|r| (r.as_ref()[j] - mean).powi(2)).sum::<f64>() / n as f64;
        let std = var.sqrt();
        if !(std > 0.0) {
            continue;
        }
        for (flag, r) in flags.iter_mut().zip(rows) {
            if ((r.as_ref()[j] - mean) / std).abs() > threshold {
                *flag = true;
            }
        }
    }
    flags
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_extreme_is_flagged() {
        let mut rows = vec![[0.0]; 99];
        rows.push([100.0]);
        let flags = flag_outliers_zscore(&rows, 3.0);
        assert_eq!(flags.iter().filter(|&&f| f).count(), 1);
        assert!(flags[99]);
    }

    #[test]
    fn vacuous_cases() {
        assert!(flag_outliers_zscore(&[[4.0, 1.0]; 10], 3.0).iter().all(|f| !f));
        let rows: Vec<[f64; 1]> = (0..20).map(|i| [(i * i) as f64]).collect();
        assert!(flag_outliers_zscore(&rows, f64::INFINITY).iter().all(|f| !f));
        assert_eq!(flag_outliers_zscore(&[[1e9]], 3.0), vec![false]);
    }
}
