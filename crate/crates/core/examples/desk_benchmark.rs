//! Multi-seed attn-ED vs. Vanilla LSTM comparison on the shipped synthetic
//! benchmark (53 participants x 200 days), with the global SHAP ranking.
//!
//! ```bash
//! cargo run --release --example desk_benchmark -- 5
//! ```

use std::path::Path;
use std::time::Instant;

use attn_ed::cli::{prepare_synthetic, run_benchmark_with, RunConfig};
use attn_ed::metrics::Scope;
use attn_ed::model::ModelKind;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n_seeds: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1);
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join(std::env::var("DESK_CONFIG").as_deref().unwrap_or("../../configs/benchmark-desk.json"));
    let base = RunConfig::load(&path)?;

    let t = Instant::now();
    let ds = prepare_synthetic(&base)?;
    println!("prepared {} windows in {:.1}s", ds.samples.len(), t.elapsed().as_secs_f64());

    let mut wins = 0;
    for seed in 0..n_seeds {
        let cfg = RunConfig { seed, ..base.clone() };
        let t = Instant::now();
        let out = run_benchmark_with(&ds, &cfg, &[Scope::Global])?;
        let wape = |k| out.metric(Scope::Global, k).map(|r| r.wape).unwrap_or(f64::NAN);
        let (a, v) = (wape(ModelKind::AttnEd), wape(ModelKind::Vanilla));
        wins += usize::from(a <= v);
        let epochs: Vec<usize> = out.train_reports.iter().map(|r| r.epochs_run()).collect();
        println!(
            "seed {seed}: global WAPE attn-ED {a:.4} vs Vanilla {v:.4}; epochs {epochs:?}; top feature {}; {:.0}s",
            out.explanations[0].global.top_feature(),
            t.elapsed().as_secs_f64()
        );
    }
    println!("attn-ED WAPE <= Vanilla in {wins} of {n_seeds} seeds");
    Ok(())
}
