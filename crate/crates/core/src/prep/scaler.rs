//! Two-stage scaling: z-score standardization, then min–max normalization of
//! the standardized values, both with training statistics.

use serde::{Deserialize, Serialize};

use super::PrepError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub feature_names: Vec<String>,
    pub mean: Vec<f64>,
    /// Population standard deviation.
    pub std: Vec<f64>,
    /// Minimum of the standardized training values.
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    /// Zero-variance features pass through unscaled.
    pub constant: Vec<bool>,
    pub fitted_on_train: bool,
}

impl ScalerParams {
    pub fn n_features(&self) -> usize {
        self.mean.len()
    }

    pub fn scale_value(&self, feature: usize, x: f64) -> f64 {
        if self.constant[feature] {
            return x;
        }
        let z = (x - self.mean[feature]) / self.std[feature];
        (z - self.min[feature]) / (self.max[feature] - self.min[feature])
    }

    pub fn invert_value(&self, feature: usize, y: f64) -> f64 {
        if self.constant[feature] {
            return y;
        }
        let z = y * (self.max[feature] - self.min[feature]) + self.min[feature];
        z * self.std[feature] + self.mean[feature]
    }
}

pub fn fit_scaler<R: AsRef<[f64]>>(rows: &[R], feature_names: &[&str]) -> Result<ScalerParams, PrepError> {
    let f = feature_names.len();
    if rows.is_empty() {
        return Err(PrepError::InsufficientData("cannot fit a scaler on zero rows".into()));
    }
    if let Some(r) = rows.iter().find(|r| r.as_ref().len() != f) {
        return Err(PrepError::Config(format!("row has {} values, expected {f}", r.as_ref().len())));
    }
    let n = rows.len() as f64;
    let mut mean = vec![0.0; f];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r.as_ref()) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; f];
    for r in rows {
        for ((s, v), m) in var.iter_mut().zip(r.as_ref()).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let std: Vec<f64> = var.iter().map(|s| (s / n).sqrt()).collect();
    let constant: Vec<bool> = std
        .iter()
        .zip(&mean)
        .map(|(s, m)| !(*s > 1e-12 * m.abs().max(1.0)))
        .collect();

    let mut min = vec![f64::INFINITY; f];
    let mut max = vec![f64::NEG_INFINITY; f];
    for r in rows {
        for j in 0..f {
            let z = (r.as_ref()[j] - mean[j]) / std[j];
            min[j] = min[j].min(z);
            max[j] = max[j].max(z);
        }
    }
    for j in 0..f {
        if constant[j] {
            min[j] = 0.0;
            max[j] = 1.0;
        }
    }
    Ok(ScalerParams {
        feature_names: feature_names.iter().map(|s| s.to_string()).collect(),
        mean,
        std,
        min,
        max,
        constant,
        fitted_on_train: true,
    })
}

pub fn apply_scaler(row: &[f64], params: &ScalerParams) -> Vec<f64> {
    row.iter().enumerate().map(|(j, &x)| params.scale_value(j, x)).collect()
}

pub fn invert_scaler(row: &[f64], params: &ScalerParams) -> Vec<f64> {
    row.iter().enumerate().map(|(j, &y)| params.invert_value(j, y)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_stage_hand_values() {
        let p = fit_scaler(&[[0.0], [10.0]], &["x"]).unwrap();
        assert_eq!(p.mean, vec![5.0]);
        assert_eq!(p.std, vec![5.0]);
        assert_eq!((p.min[0], p.max[0]), (-1.0, 1.0));
        assert_eq!(apply_scaler(&[10.0], &p), vec![1.0]);
        assert_eq!(apply_scaler(&[5.0], &p), vec![0.5]);
        assert_eq!(apply_scaler(&[0.0], &p), vec![0.0]);
    }

    #[test]
    fn constant_feature_passes_through() {
        let p = fit_scaler(&[[3.0, 1.0], [3.0, 2.0]], &["c", "v"]).unwrap();
        assert_eq!(p.constant, vec![true, false]);
        assert_eq!(apply_scaler(&[3.0, 2.0], &p), vec![3.0, 1.0]);
        assert_eq!(invert_scaler(&[7.0, 1.0], &p), vec![7.0, 2.0]);
    }

    #[test]
    fn round_trip() {
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|i| vec![i as f64 * 0.37 - 4.0, (i * i % 17) as f64, 1e4 + i as f64])
            .collect();
        let p = fit_scaler(&rows, &["a", "b", "c"]).unwrap();
        for r in &rows {
            let back = invert_scaler(&apply_scaler(r, &p), &p);
            for (x, y) in r.iter().zip(&back) {
                assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0), "{x} vs {y}");
            }
        }
    }

    #[test]
    fn errors() {
        let empty: [[f64; 1]; 0] = [];
        assert!(fit_scaler(&empty, &["x"]).is_err());
        assert!(fit_scaler(&[vec![1.0, 2.0]], &["x"]).is_err());
    }
}
