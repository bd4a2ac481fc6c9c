//! The command-line pipeline end to end on the demo configuration:
//! synth, prep, train both models, evaluate and explain.

use std::path::Path;

use attn_ed::cli::main_with_args;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/demo.json");
    let ws = tempfile::tempdir()?;
    let (config, out) = (config.to_string_lossy(), ws.path().to_string_lossy());
    let steps: [&[&str]; 6] = [
        &["synth"],
        &["prep"],
        &["train", "--model", "attn-ed"],
        &["train", "--model", "vanilla"],
        &["evaluate"],
        &["explain", "--scope", "global"],
    ];
    for step in steps {
        let mut args = vec!["attn-ed", "--config", &config, "--out", &out];
        args.extend_from_slice(step);
        let code = main_with_args(&args);
        if code != 0 {
            return Err(format!("`{}` exited with {code}", step.join(" ")).into());
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
