//! Random search over the attn-ED tuning grid. Trials are drawn from one
//! seeded stream, so the same seed always evaluates the same settings.

use attn_ed::ingest::SynthConfig;
use attn_ed::model::search::trial_settings;
use attn_ed::model::{hyper_search, AttnEdShape, SearchConfig, SearchSpace};
use attn_ed::prep::{prepare_daily, synthetic_daily, MidnightPolicy, PrepConfig, Split, DEFAULT_D_MAX_S};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    for (i, hp) in trial_settings(&SearchSpace, 3, 42).iter().enumerate() {
        println!("trial {i}: {hp:?}");
    }

    let synth = SynthConfig {
        n_participants: 3,
        days: 60,
        ..SynthConfig::default()
    };
    let mut prep = PrepConfig::default();
    prep.window_len = 7;
    prep.horizon = 3;
    let ds = prepare_daily(synthetic_daily(&synth, DEFAULT_D_MAX_S, MidnightPolicy::Split)?, &prep)?;
    let shape = AttnEdShape {
        window_len: ds.window_len(),
        horizon: ds.horizon(),
        n_features: ds.n_features(),
        feedback_feature: ds.usage_index(),
    };
    // Keep the demo small: the grid includes 512 hidden units.
    let cfg = SearchConfig {
        budget: 2,
        max_epochs: 1,
        seed: 7,
        ..SearchConfig::default()
    };
    let outcome = hyper_search(&SearchSpace, &cfg, shape, &ds.examples(Split::Train), &ds.examples(Split::Val))?;
    for t in &outcome.trials {
        println!("trial {}: val MSE {:.5} ({} units)", t.index, t.best_val_mse, t.hyper.hidden_units);
    }
    println!("best trial {}", outcome.best_trial);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
