use attn_ed::explain::{exact_shap_enumeration, kernel_shap_with, ShapMode, ShapOptions};
use attn_ed::metrics::{smape, wape};
use attn_ed::nn::Matrix;
use proptest::prelude::*;

fn interacting(x: &Vec<f64>) -> f64 {
    x[0] * x[1] - 0.7 * x[2] * x[3] + x[4].sin() + 0.3 * x[5] * x[6] * x[7] + 0.5 * x[1]
}

fn sampled(n_samples: usize, seed: u64, x: &Vec<f64>, bg: &[Vec<f64>]) -> Vec<f64> {
    let opts = ShapOptions {
        n_samples,
        seed,
        mode: ShapMode::Sampled,
    };
    kernel_shap_with(interacting, x, bg, &opts).unwrap().phi
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

#[test]
fn sampled_estimate_converges_to_exact_values() {
    let x = vec![1.0, -0.5, 2.0, 0.3, 1.2, -1.0, 0.8, 1.5];
    let bg = vec![vec![0.0; 8], vec![0.5; 8], (0..8).map(|i| i as f64 / 8.0 - 0.4).collect()];
    let exact = exact_shap_enumeration(interacting, &x, &bg).unwrap();
    let err = |n| (0..3).map(|s| max_abs_diff(&sampled(n, s, &x, &bg), &exact)).sum::<f64>() / 3.0;
    let (coarse, fine) = (err(256), err(4096));
    assert!(fine <= coarse, "error grew with more samples: {coarse} -> {fine}");
    assert!(fine < 0.05, "4096-sample error {fine}");
}

#[test]
fn sampled_mode_keeps_local_accuracy() {
    let x = vec![0.4, 1.1, -0.3, 0.9, 0.0, 2.0, -1.5, 0.7];
    let bg = vec![vec![0.1; 8]];
    let opts = ShapOptions {
        n_samples: 64,
        seed: 9,
        mode: ShapMode::Sampled,
    };
    let e = kernel_shap_with(interacting, &x, &bg, &opts).unwrap();
    assert!(!e.exact);
    assert!(e.additivity_gap() < 1e-9, "gap {}", e.additivity_gap());
}

#[test]
fn window_columns_are_players() {
    // A window model that only reads column 1 gives every other column zero.
    let f = |w: &Matrix| w.column(1).iter().sum::<f64>() * 2.0;
    let x = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
    let bg = vec![Matrix::zeros(2, 3)];
    let opts = ShapOptions {
        n_samples: 0,
        seed: 0,
        mode: ShapMode::Exact,
    };
    let e = kernel_shap_with(f, &x, &bg, &opts).unwrap();
    assert_eq!(e.phi.len(), 3);
    assert!((e.phi[1] - 14.0).abs() < 1e-10);
    assert!(e.phi[0].abs() < 1e-10 && e.phi[2].abs() < 1e-10);
}

fn pair_vecs() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..30).prop_flat_map(|n| (prop::collection::vec(0.0f64..1e5, n), prop::collection::vec(0.0f64..1e5, n)))
}

proptest! {
    #[test]
    fn smape_is_bounded_and_symmetric((y, p) in pair_vecs()) {
        let s = smape(&y, &p).unwrap();
        prop_assert!((0.0..=200.0).contains(&s));
        prop_assert!((s - smape(&p, &y).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn wape_is_scale_invariant((y, p) in pair_vecs(), k in 0.01f64..100.0) {
        prop_assume!(y.iter().sum::<f64>() > 1e-6);
        let scaled = |v: &[f64]| v.iter().map(|a| a * k).collect::<Vec<_>>();
        let (a, b) = (wape(&y, &p).unwrap(), wape(&scaled(&y), &scaled(&p)).unwrap());
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
    }
}
