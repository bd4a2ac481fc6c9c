//! Full preprocessing on a synthetic cohort: daily aggregation, imputation,
//! train-only scaling, outlier flags, VIF report, splits and windows. The
//! dataset directory is written and loaded back.

use attn_ed::ingest::SynthConfig;
use attn_ed::prep::{
    load_dataset, prepare_daily, synthetic_daily, write_dataset, MidnightPolicy, PrepConfig, Split, DEFAULT_D_MAX_S,
};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let synth = SynthConfig {
        n_participants: 4,
        days: 80,
        ..SynthConfig::default()
    };
    let days = synthetic_daily(&synth, DEFAULT_D_MAX_S, MidnightPolicy::Split)?;
    let ds = prepare_daily(days, &PrepConfig::default())?;

    println!("features: {:?}", ds.feature_names);
    for (name, (vif, keep)) in ds.vif.feature_names.iter().zip(ds.vif.vif.iter().zip(&ds.vif.include)) {
        println!("  VIF {name:<10} {vif:>8.2} {}", if *keep { "" } else { "(above threshold)" });
    }
    for split in [Split::Train, Split::Val, Split::Test] {
        println!("{split}: {} windows", ds.samples_in(split).len());
    }
    for p in &ds.participants {
        println!(
            "participant {}: {} days ({}/{}/{}), {} imputed cells, {} outlier days",
            p.participant_id, p.n_days, p.train_days, p.val_days, p.test_days, p.imputed_cells, p.outlier_days
        );
    }

    let dir = tempfile::tempdir()?;
    let files = write_dataset(&ds, dir.path())?;
    let back = load_dataset(dir.path())?;
    assert_eq!(back.samples.len(), ds.samples.len());
    println!("wrote {} files to {}", files.len(), dir.path().display());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
