//! Model-agnostic Kernel SHAP with one player per named input feature,
//! a brute-force Shapley oracle, global importance and summary plots.

pub mod forecast;
pub mod kernel;
pub mod plot;

use serde::{Deserialize, Serialize};

pub use forecast::{
    background_fingerprint, explain_forecast, explain_scope, sample_background, ExplainConfig, ExplainReport,
    ExplainTarget,
};
pub use kernel::{
    exact_shap_enumeration, kernel_shap, kernel_shap_with, shapley_kernel_weight, Maskable, ShapMode, ShapOptions,
    EXACT_MAX_PLAYERS,
};
pub use plot::{emit_summary_plot, summary_svg};

use crate::model::ModelError;

#[derive(Debug, thiserror::Error)]
pub enum ExplainError {
    #[error("coalition constraint: {0}")]
    Constraint(String),
    #[error("{players} players exceed the exact-enumeration limit of {max}")]
    TooManyPlayers { players: usize, max: usize },
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("nothing to explain: {0}")]
    Empty(String),
    #[error("inconsistent explanations: {0}")]
    Inconsistent(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("i/o error: {0}")]
    Io(String),
}

/// Shapley values for one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapExplanation {
    pub feature_names: Vec<String>,
    pub phi: Vec<f64>,
    /// Expected model output over the background set.
    pub phi0: f64,
    /// Model output at the instance.
    pub fx: f64,
    /// Per-feature display values of the instance.
    pub feature_values: Vec<f64>,
    pub n_coalition_samples: usize,
    pub exact: bool,
}

impl ShapExplanation {
    /// `|phi0 + sum(phi) - fx|`.
    pub fn additivity_gap(&self) -> f64 {
        (self.phi0 + self.phi.iter().sum::<f64>() - self.fx).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalImportance {
    pub feature_names: Vec<String>,
    pub mean_abs_phi: Vec<f64>,
    /// Feature indices by descending mean |phi|; ties keep column order.
    pub ranking: Vec<usize>,
    pub n_explanations: usize,
}

impl GlobalImportance {
    pub fn ranked_names(&self) -> Vec<&str> {
        self.ranking.iter().map(|&i| self.feature_names[i].as_str()).collect()
    }

    pub fn top_feature(&self) -> &str {
        &self.feature_names[self.ranking[0]]
    }
}

pub fn global_aggregate(explanations: &[ShapExplanation]) -> Result<GlobalImportance, ExplainError> {
    let first = explanations
        .first()
        .ok_or_else(|| ExplainError::Empty("no explanations to aggregate".into()))?;
    let m = first.feature_names.len();
    let mut sums = vec![0.0; m];
    for (k, e) in explanations.iter().enumerate() {
        if e.feature_names != first.feature_names || e.phi.len() != m {
            return Err(ExplainError::Inconsistent(format!(
                "explanation {k} has a different feature set"
            )));
        }
        for (s, p) in sums.iter_mut().zip(&e.phi) {
            *s += p.abs();
        }
    }
    let n = explanations.len() as f64;
    let mean_abs_phi: Vec<f64> = sums.into_iter().map(|s| s / n).collect();
    let mut ranking: Vec<usize> = (0..m).collect();
    ranking.sort_by(|&a, &b| mean_abs_phi[b].total_cmp(&mean_abs_phi[a]).then(a.cmp(&b)));
    Ok(GlobalImportance {
        feature_names: first.feature_names.clone(),
        mean_abs_phi,
        ranking,
        n_explanations: explanations.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn expl(phi: Vec<f64>) -> ShapExplanation {
        ShapExplanation {
            feature_names: vec!["a".into(), "b".into()],
            feature_values: vec![0.0; phi.len()],
            phi,
            phi0: 0.0,
            fx: 0.0,
            n_coalition_samples: 0,
            exact: true,
        }
    }

    #[test]
    fn mean_absolute_values() {
        let g = global_aggregate(&[expl(vec![1.0, -2.0]), expl(vec![3.0, 2.0])]).unwrap();
        assert_eq!(g.mean_abs_phi, vec![2.0, 2.0]);
        assert_eq!(g.ranking, vec![0, 1]);
    }

    #[test]
    fn single_explanation_is_its_absolute_values() {
        let g = global_aggregate(&[expl(vec![-0.25, 4.0])]).unwrap();
        assert_eq!(g.mean_abs_phi, vec![0.25, 4.0]);
        assert_eq!(g.ranked_names(), vec!["b", "a"]);
        assert_eq!(g.top_feature(), "b");
    }

    #[test]
    fn order_of_explanations_does_not_matter() {
        let a = vec![expl(vec![1.0, -5.0]), expl(vec![0.5, 0.1]), expl(vec![-3.0, 0.2])];
        let mut b = a.clone();
        b.reverse();
        assert_eq!(global_aggregate(&a).unwrap().ranking, global_aggregate(&b).unwrap().ranking);
    }

    #[test]
    fn inconsistent_or_empty_sets_are_rejected() {
        let mut other = expl(vec![1.0, 1.0]);
        other.feature_names[1] = "c".into();
        assert!(matches!(
            global_aggregate(&[expl(vec![1.0, 1.0]), other]),
            Err(ExplainError::Inconsistent(_))
        ));
        assert!(matches!(global_aggregate(&[]), Err(ExplainError::Empty(_))));
    }
}
