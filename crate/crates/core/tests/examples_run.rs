//! Every capability example runs to completion.

#[allow(dead_code)]
#[path = "../examples/synth_cohort.rs"]
mod synth_cohort;

#[test]
fn synth_cohort_runs() {
    synth_cohort::run_example().expect("synth_cohort example should run");
}

#[allow(dead_code)]
#[path = "../examples/usage_intervals.rs"]
mod usage_intervals;

#[test]
fn usage_intervals_runs() {
    usage_intervals::run_example().expect("usage_intervals example should run");
}

#[allow(dead_code)]
#[path = "../examples/prepare_dataset.rs"]
mod prepare_dataset;

#[test]
fn prepare_dataset_runs() {
    prepare_dataset::run_example().expect("prepare_dataset example should run");
}

#[allow(dead_code)]
#[path = "../examples/train_attn_ed.rs"]
mod train_attn_ed;

#[test]
fn train_attn_ed_runs() {
    train_attn_ed::run_example().expect("train_attn_ed example should run");
}

#[allow(dead_code)]
#[path = "../examples/compare_models.rs"]
mod compare_models;

#[test]
fn compare_models_runs() {
    compare_models::run_example().expect("compare_models example should run");
}

#[allow(dead_code)]
#[path = "../examples/hyper_search.rs"]
mod hyper_search;

#[test]
fn hyper_search_runs() {
    hyper_search::run_example().expect("hyper_search example should run");
}

#[allow(dead_code)]
#[path = "../examples/kernel_shap_toy.rs"]
mod kernel_shap_toy;

#[test]
fn kernel_shap_toy_runs() {
    kernel_shap_toy::run_example().expect("kernel_shap_toy example should run");
}

#[allow(dead_code)]
#[path = "../examples/explain_forecast.rs"]
mod explain_forecast;

#[test]
fn explain_forecast_runs() {
    explain_forecast::run_example().expect("explain_forecast example should run");
}

#[allow(dead_code)]
#[path = "../examples/gradient_check.rs"]
mod gradient_check;

#[test]
fn gradient_check_runs() {
    gradient_check::run_example().expect("gradient_check example should run");
}


#[test]
fn cli_pipeline_runs() {
    cli_pipeline::run_example().expect("cli_pipeline example should run");
}
