//! Kernel SHAP on closed-form models: the linear model's attributions, the
//! brute-force Shapley oracle, and a forced sampled-mode estimate.

use attn_ed::explain::{exact_shap_enumeration, kernel_shap, kernel_shap_with, ShapMode, ShapOptions};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let linear = |x: &Vec<f64>| 2.0 * x[0] + 3.0 * x[1];
    let e = kernel_shap(linear, &vec![1.0, 1.0], &[vec![0.0, 0.0]], 0, 0)?;
    println!("linear: phi = {:?}, phi0 = {}, f(x) = {}", e.phi, e.phi0, e.fx);

    let f = |x: &Vec<f64>| x[0] * x[1] + x[2].sin() - 0.5 * x[3] * x[3];
    let x = vec![1.0, 2.0, 0.3, -1.0];
    let background = vec![vec![0.0; 4], vec![0.5, -0.5, 1.0, 0.2], vec![-1.0, 1.0, 0.0, 0.4]];
    let exact = kernel_shap(f, &x, &background, 0, 0)?;
    let oracle = exact_shap_enumeration(f, &x, &background)?;
    println!("kernel (exact): {:?}", exact.phi);
    println!("oracle:         {oracle:?}");
    println!("additivity gap: {:.2e}", exact.additivity_gap());

    let opts = ShapOptions {
        n_samples: 64,
        seed: 1,
        mode: ShapMode::Sampled,
    };
    let sampled = kernel_shap_with(f, &x, &background, &opts)?;
    println!("sampled (64):   {:?}", sampled.phi);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
