//! Central finite differences against the analytic attn-ED gradient, block
//! by block, with dropout masks fixed by a seed.

use attn_ed::model::{AttnEdModel, AttnEdShape, HyperParams};
use attn_ed::nn::{finite_diff_check, Example, Matrix};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let hp = HyperParams {
        hidden_units: 5,
        ..HyperParams::optimal_evotion()
    };
    let shape = AttnEdShape {
        window_len: 4,
        horizon: 3,
        n_features: 2,
        feedback_feature: 0,
    };
    let net = AttnEdModel::new(hp, shape, 11)?;
    let x = Matrix::from_vec(4, 2, vec![0.2, 0.7, 0.4, 0.1, 0.9, 0.3, 0.5, 0.6])?;
    let y = vec![0.3, 0.5, 0.4];
    let batch: Vec<Example<'_>> = vec![(&x, y.as_slice())];
    let report = finite_diff_check(&net, &batch, Some(3), 1e-4)?;
    for b in &report.blocks {
        println!("{:<24} {:>5} params  max rel err {:.2e}", b.name, b.n_params, b.max_rel_error);
    }
    println!("passed: {}", report.passed);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
