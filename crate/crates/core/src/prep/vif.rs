//! Variance inflation factors. Each feature is regressed, with intercept, on
//! all others; VIF = 1 / (1 − R²) = SST / SSR. The regression is carried out
//! by projecting onto an orthonormal basis of the centered regressors.

use serde::{Deserialize, Serialize};

use super::PrepError;
use crate::nn::matrix::dot;
use crate::nn::Matrix;

pub const DEFAULT_VIF_THRESHOLD: f64 = 10.0;
/// Residual share of variance below which a feature counts as an exact
/// linear combination of the others.
const COLLINEAR_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VifReport {
    pub feature_names: Vec<String>,
    /// `f64::INFINITY` marks exact collinearity (or a constant feature).
    #[serde(with = "inf_as_string")]
    pub vif: Vec<f64>,
    pub include: Vec<bool>,
    pub threshold: f64,
}

impl VifReport {
    pub fn excluded(&self) -> Vec<&str> {
        self.feature_names
            .iter()
            .zip(&self.include)
            .filter(|(_, inc)| !**inc)
            .map(|(n, _)| n.as_str())
            .collect()
    }
}

/// JSON cannot carry infinity; it is written as the string `"inf"`.
mod inf_as_string {
    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use serde_json::Value;

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let vals: Vec<Value> = v
            .iter()
            .map(|x| if x.is_finite() { Value::from(*x) } else { Value::from("inf") })
            .collect();
        vals.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<Value>::deserialize(d)?
            .into_iter()
            .map(|v| match v {
                Value::Number(n) => n.as_f64().ok_or_else(|| D::Error::custom("bad number")),
                Value::String(s) if s == "inf" => Ok(f64::INFINITY),
                other => Err(D::Error::custom(format!("unexpected VIF value {other}"))),
            })
            .collect()
    }
}

pub fn compute_vif(x: &Matrix, feature_names: &[&str], threshold: f64) -> Result<VifReport, PrepError> {
    let (n, p) = x.shape();
    if feature_names.len() != p {
        return Err(PrepError::Config(format!("{} names for {p} features", feature_names.len())));
    }
    if n < p + 1 {
        return Err(PrepError::InsufficientData(format!("VIF needs at least {} rows, got {n}", p + 1)));
    }
    let means = x.column_means();
    let centered: Vec<Vec<f64>> = (0..p)
        .map(|j| x.column(j).iter().map(|v| v - means[j]).collect())
        .collect();

    let mut vif = Vec::with_capacity(p);
    for j in 0..p {
        let target = &centered[j];
        let sst = dot(target, target);
        if !(sst > 0.0) {
            vif.push(f64::INFINITY);
            continue;
        }
        let basis = orthonormal_basis(centered.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, c)| c));
        let mut r = target.clone();
        // two passes keep the residual orthogonal in floating point
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &r);
                r.iter_mut().zip(q).for_each(|(ri, qi)| *ri -= c * qi);
            }
        }
        let ssr = dot(&r, &r);
        vif.push(if ssr <= COLLINEAR_TOL * sst { f64::INFINITY } else { sst / ssr });
    }
    let include = vif.iter().map(|&v| v < threshold).collect();
    Ok(VifReport {
        feature_names: feature_names.iter().map(|s| s.to_string()).collect(),
        vif,
        include,
        threshold,
    })
}

/// Modified Gram–Schmidt with reorthogonalization; dependent columns are
/// dropped.
fn orthonormal_basis<'a>(columns: impl Iterator<Item = &'a Vec<f64>>) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for col in columns {
        let norm0 = dot(col, col).sqrt();
        if norm0 == 0.0 {
            continue;
        }
        let mut v = col.clone();
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &v);
                v.iter_mut().zip(q).for_each(|(vi, qi)| *vi -= c * qi);
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-9 * norm0 {
            v.iter_mut().for_each(|vi| *vi /= norm);
            basis.push(v);
        }
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthogonal_centered_columns_give_one() {
        let rows = vec![
            vec![1.0, 1.0, 1.0],
            vec![1.0, -1.0, -1.0],
            vec![-1.0, 1.0, -1.0],
            vec![-1.0, -1.0, 1.0],
        ];
        let r = compute_vif(&Matrix::from_rows(&rows).unwrap(), &["a", "b", "c"], 10.0).unwrap();
        for v in &r.vif {
            assert!((v - 1.0).abs() < 1e-9, "{v}");
        }
        assert!(r.include.iter().all(|&i| i));
    }

    #[test]
    fn duplicate_column_is_infinite_and_excluded() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, ((i * 7) % 5) as f64, i as f64]).collect();
        let r = compute_vif(&Matrix::from_rows(&rows).unwrap(), &["a", "b", "a2"], 10.0).unwrap();
        assert!(r.vif[0].is_infinite() && r.vif[2].is_infinite());
        assert!(r.vif[1].is_finite());
        assert_eq!(r.excluded(), vec!["a", "a2"]);
    }

    #[test]
    fn needs_enough_rows() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 5.0]]).unwrap();
        assert!(compute_vif(&m, &["a", "b"], 10.0).is_err());
    }

    #[test]
    fn json_round_trip_with_infinity() {
        let r = VifReport {
            feature_names: vec!["a".into(), "b".into()],
            vif: vec![1.5, f64::INFINITY],
            include: vec![true, false],
            threshold: 10.0,
        };
        let s = serde_json::to_string(&r).unwrap();
        assert!(s.contains("\"inf\""));
        assert_eq!(serde_json::from_str::<VifReport>(&s).unwrap(), r);
    }
}
