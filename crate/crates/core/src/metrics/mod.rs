//! Forecast error estimators and the evaluation protocol.
//!
//! All metrics pool horizon points in original units (seconds). Undefined
//! metrics are `NaN`: MAPE when every actual is zero, WAPE when the actuals
//! sum to zero.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{ModelError, TrainedModel};
use crate::prep::Sample;

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("actual and predicted lengths differ ({actual} vs {predicted})")]
    LengthMismatch { actual: usize, predicted: usize },
    #[error("no points to evaluate: {0}")]
    Empty(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("i/o error: {0}")]
    Io(String),
}

fn check(actual: &[f64], predicted: &[f64]) -> Result<(), MetricsError> {
    if actual.len() != predicted.len() {
        return Err(MetricsError::LengthMismatch {
            actual: actual.len(),
            predicted: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(MetricsError::Empty("empty series".into()));
    }
    Ok(())
}

/// Symmetric MAPE on the 0–200 scale. Points where both values are zero
/// contribute zero.
pub fn smape(actual: &[f64], predicted: &[f64]) -> Result<f64, MetricsError> {
    check(actual, predicted)?;
    let sum: f64 = actual
        .iter()
        .zip(predicted)
        .map(|(y, p)| {
            let denom = y.abs() + p.abs();
            if denom == 0.0 {
                0.0
            } else {
                (y - p).abs() / denom
            }
        })
        .sum();
    Ok(200.0 * sum / actual.len() as f64)
}

/// MAPE as a fraction over nonzero actuals, with the number of excluded
/// zero actuals.
pub fn mape(actual: &[f64], predicted: &[f64]) -> Result<(f64, usize), MetricsError> {
    check(actual, predicted)?;
    let mut sum = 0.0;
    let mut kept = 0usize;
    for (y, p) in actual.iter().zip(predicted) {
        if *y != 0.0 {
            sum += ((y - p) / y).abs();
            kept += 1;
        }
    }
    let excluded = actual.len() - kept;
    Ok((if kept == 0 { f64::NAN } else { sum / kept as f64 }, excluded))
}

pub fn wape(actual: &[f64], predicted: &[f64]) -> Result<f64, MetricsError> {
    check(actual, predicted)?;
    let denom: f64 = actual.iter().map(|y| y.abs()).sum();
    if denom == 0.0 {
        return Ok(f64::NAN);
    }
    let num: f64 = actual.iter().zip(predicted).map(|(y, p)| (y - p).abs()).sum();
    Ok(num / denom)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    Personalized(u32),
    Global,
}

impl Scope {
    pub fn includes(self, participant_id: u32) -> bool {
        match self {
            Scope::Personalized(p) => p == participant_id,
            Scope::Global => true,
        }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scope::Personalized(p) => write!(f, "personalized:{p}"),
            Scope::Global => f.write_str("global"),
        }
    }
}

impl FromStr for Scope {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "global" {
            return Ok(Scope::Global);
        }
        s.strip_prefix("personalized:")
            .and_then(|p| p.parse().ok())
            .map(Scope::Personalized)
            .ok_or_else(|| format!("invalid scope `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub scope: Scope,
    pub model: String,
    pub smape: f64,
    /// sMAPE divided by 100, on the 0–2 scale.
    pub smape_fraction: f64,
    pub mape: f64,
    pub wape: f64,
    pub n_points: usize,
    pub n_zero_actuals_excluded_from_mape: usize,
}

/// All three metrics over one pooled point set.
pub fn evaluate_points(
    actual: &[f64],
    predicted: &[f64],
    scope: Scope,
    model: &str,
) -> Result<EvalResult, MetricsError> {
    let s = smape(actual, predicted)?;
    let (m, excluded) = mape(actual, predicted)?;
    Ok(EvalResult {
        scope,
        model: model.to_string(),
        smape: s,
        smape_fraction: s / 100.0,
        mape: m,
        wape: wape(actual, predicted)?,
        n_points: actual.len(),
        n_zero_actuals_excluded_from_mape: excluded,
    })
}

/// Pooled `(actual, predicted)` points, in seconds, of the samples inside
/// `scope`, in sample order.
pub fn forecast_points(
    model: &TrainedModel,
    samples: &[&Sample],
    scope: Scope,
) -> Result<(Vec<f64>, Vec<f64>), MetricsError> {
    let chosen: Vec<&Sample> = samples.iter().copied().filter(|s| scope.includes(s.participant_id)).collect();
    if chosen.is_empty() {
        return Err(MetricsError::Empty(format!("no test samples in scope {scope}")));
    }
    let predictions: Vec<Vec<f64>> = chosen
        .par_iter()
        .map(|s| model.predict(&s.input))
        .collect::<Result<_, _>>()?;
    let actual = chosen.iter().flat_map(|s| s.target_s.iter().copied()).collect();
    let predicted = predictions.into_iter().flatten().collect();
    Ok((actual, predicted))
}

pub fn evaluate(model: &TrainedModel, samples: &[&Sample], scope: Scope) -> Result<EvalResult, MetricsError> {
    let (actual, predicted) = forecast_points(model, samples, scope)?;
    evaluate_points(&actual, &predicted, scope, &model.kind().to_string())
}

pub const METRICS_HEADER: &str = "scope,model,smape,smape_fraction,mape,wape,n_points,excluded";

pub fn write_metrics_csv(results: &[EvalResult], path: &Path) -> Result<(), MetricsError> {
    let io = |e: std::io::Error| MetricsError::Io(format!("{}: {e}", path.display()));
    let mut w = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    writeln!(w, "{METRICS_HEADER}").map_err(io)?;
    for r in results {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.scope, r.model, r.smape, r.smape_fraction, r.mape, r.wape, r.n_points, r.n_zero_actuals_excluded_from_mape
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Side-by-side table, one block per scope: rows are the estimators,
/// columns the models.
pub fn comparison_table(results: &[EvalResult]) -> String {
    let mut scopes: Vec<Scope> = Vec::new();
    let mut models: Vec<&str> = Vec::new();
    for r in results {
        if !scopes.contains(&r.scope) {
            scopes.push(r.scope);
        }
        if !models.contains(&r.model.as_str()) {
            models.push(&r.model);
        }
    }
    let mut out = String::new();
    for scope in scopes {
        out.push_str(&format!("{scope}\n"));
        out.push_str(&format!("{:<8}", "metric"));
        for m in &models {
            out.push_str(&format!(" | {m:>14}"));
        }
        out.push('\n');
        type Getter = fn(&EvalResult) -> f64;
        let rows: [(&str, Getter); 3] = [
            ("sMAPE", |r| r.smape_fraction),
            ("MAPE", |r| r.mape),
            ("WAPE", |r| r.wape),
        ];
        for (name, get) in rows {
            out.push_str(&format!("{name:<8}"));
            for m in &models {
                match results.iter().find(|r| r.scope == scope && r.model == *m) {
                    Some(r) => out.push_str(&format!(" | {:>14.4}", get(r))),
                    None => out.push_str(&format!(" | {:>14}", "-")),
                }
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed_fixtures() {
        let (y, p) = ([2.0, 4.0], [1.0, 5.0]);
        assert!((smape(&y, &p).unwrap() - 400.0 / 9.0).abs() < 1e-9);
        let (m, ex) = mape(&y, &p).unwrap();
        assert!((m - 0.375).abs() < 1e-9);
        assert_eq!(ex, 0);
        assert!((wape(&y, &p).unwrap() - 1.0 / 3.0).abs() < 1e-9);
        assert_eq!(wape(&[1.0, 1.0], &[2.0, 2.0]).unwrap(), 1.0);
    }

    #[test]
    fn zero_conventions() {
        assert_eq!(smape(&[1.0, 1.0], &[1.0, 1.0]).unwrap(), 0.0);
        assert_eq!(smape(&[0.0], &[0.0]).unwrap(), 0.0);
        assert_eq!(mape(&[0.0, 2.0], &[1.0, 2.0]).unwrap(), (0.0, 1));
        let (m, ex) = mape(&[0.0, 0.0], &[1.0, 2.0]).unwrap();
        assert!(m.is_nan());
        assert_eq!(ex, 2);
        assert!(wape(&[0.0], &[3.0]).unwrap().is_nan());
    }

    #[test]
    fn length_mismatch_and_empty_are_errors() {
        assert!(matches!(smape(&[1.0], &[1.0, 2.0]), Err(MetricsError::LengthMismatch { .. })));
        assert!(matches!(wape(&[], &[]), Err(MetricsError::Empty(_))));
    }

    #[test]
    fn smape_fraction_scale() {
        let r = evaluate_points(&[2.0, 4.0], &[1.0, 5.0], Scope::Global, "m").unwrap();
        assert!((r.smape_fraction - 4.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn scope_text_round_trip() {
        for s in [Scope::Global, Scope::Personalized(17)] {
            assert_eq!(s.to_string().parse::<Scope>().unwrap(), s);
        }
        assert!("local".parse::<Scope>().is_err());
        assert!(Scope::Personalized(3).includes(3) && !Scope::Personalized(3).includes(4));
    }

    #[test]
    fn table_has_three_rows_per_scope() {
        let rows: Vec<EvalResult> = [Scope::Personalized(17), Scope::Global]
            .iter()
            .flat_map(|&s| {
                ["attn-ED", "Vanilla LSTM"]
                    .map(|m| evaluate_points(&[2.0, 4.0], &[1.0, 5.0], s, m).unwrap())
            })
            .collect();
        let t = comparison_table(&rows);
        assert_eq!(t.matches("WAPE").count(), 2);
        assert!(t.contains("personalized:17") && t.contains("global"));
        assert!(t.contains("attn-ED") && t.contains("Vanilla LSTM"));
    }
}
