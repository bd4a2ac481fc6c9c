//! Train attn-ED on a small synthetic cohort, save a checkpoint, reload it
//! and forecast the next 14 days for one test window.

use attn_ed::ingest::SynthConfig;
use attn_ed::model::{fit, load_checkpoint, save_checkpoint, FitOptions, HyperParams, ModelKind};
use attn_ed::prep::{prepare_daily, synthetic_daily, MidnightPolicy, PrepConfig, Split, DEFAULT_D_MAX_S};

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
        max_epochs: 3,
        patience: Some(2),
        seed: 1,
        ..FitOptions::default()
    };
    let (model, report) = fit(ModelKind::AttnEd, &hp, None, &ds, &opts)?;
    for (e, (tr, va)) in report.train_mse.iter().zip(&report.val_mse).enumerate() {
        println!("epoch {}: train {tr:.5} val {va:.5}", e + 1);
    }

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("attn-ed.ckpt");
    save_checkpoint(&model, &path)?;
    let back = load_checkpoint(&path)?;

    let window = ds.samples_in(Split::Test)[0];
    let forecast = back.predict(&window.input)?;
    assert_eq!(forecast, model.predict(&window.input)?);
    for (day, (p, a)) in forecast.iter().zip(&window.target_s).enumerate() {
        println!("day {:>2}: forecast {:>6.2} h, actual {:>6.2} h", day + 1, p / 3600.0, a / 3600.0);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
