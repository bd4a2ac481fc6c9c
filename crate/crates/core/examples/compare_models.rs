//! attn-ED against the Vanilla LSTM baseline: personalized and global error
//! estimators in the side-by-side table layout.

use attn_ed::ingest::SynthConfig;
use attn_ed::metrics::{comparison_table, evaluate, Scope};
use attn_ed::model::{fit, FitOptions, HyperParams, ModelKind};
use attn_ed::prep::{prepare_daily, synthetic_daily, MidnightPolicy, PrepConfig, Split, DEFAULT_D_MAX_S};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let synth = SynthConfig {
        n_participants: 5,
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
        max_epochs: 3,
        seed: 3,
        ..FitOptions::default()
    };
    let test = ds.samples_in(Split::Test);
    let mut rows = Vec::new();
    let models = [
        fit(ModelKind::AttnEd, &hp, None, &ds, &opts)?.0,
        fit(ModelKind::Vanilla, &hp, None, &ds, &opts)?.0,
    ];
    for scope in [Scope::Personalized(2), Scope::Global] {
        for m in &models {
            rows.push(evaluate(m, &test, scope)?);
        }
    }
    print!("{}", comparison_table(&rows));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
