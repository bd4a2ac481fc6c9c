//! Explain a trained attn-ED in the personalized and global scopes and
//! write the beeswarm summary plots.

use attn_ed::explain::{emit_summary_plot, explain_scope, ExplainConfig};
use attn_ed::ingest::SynthConfig;
use attn_ed::metrics::Scope;
use attn_ed::model::{fit, FitOptions, HyperParams, ModelKind};
use attn_ed::prep::{prepare_daily, synthetic_daily, MidnightPolicy, PrepConfig, DEFAULT_D_MAX_S};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let synth = SynthConfig {
        n_participants: 4,
        days: 100,
        ..SynthConfig::default()
    };
    let ds = prepare_daily(
        synthetic_daily(&synth, DEFAULT_D_MAX_S, MidnightPolicy::Split)?,
        &PrepConfig::default(),
    )?;
    let hp = HyperParams {
        hidden_units: 32,
        ..HyperParams::optimal_evotion()
    };
    let opts = FitOptions {
        max_epochs: 2,
        seed: 5,
        ..FitOptions::default()
    };
    let (model, _) = fit(ModelKind::AttnEd, &hp, None, &ds, &opts)?;

    let cfg = ExplainConfig {
        background_size: 4,
        max_instances: 3,
        ..ExplainConfig::default()
    };
    let dir = tempfile::tempdir()?;
    for scope in [Scope::Personalized(1), Scope::Global] {
        let report = explain_scope(&model, &ds, scope, &cfg)?;
        println!("{scope}: {}", report.global.ranked_names().join(" > "));
        let first = &report.explanations[0].explanation;
        println!("  phi0 {:.0} s + sum(phi) = f(x) {:.0} s", first.phi0, first.fx);
        let (svg, csv) = emit_summary_plot(&report.shap_explanations(), &dir.path().join(format!("{}.svg", scope_name(scope))))?;
        println!("  wrote {} and {}", svg.display(), csv.display());
    }
    Ok(())
}

fn scope_name(scope: Scope) -> &'static str {
    match scope {
        Scope::Personalized(_) => "personalized",
        Scope::Global => "global",
    }
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
