//! One function per subcommand. Each reads its upstream artifacts from the
//! workspace, fails fast when they are missing, and writes a manifest next
//! to its outputs.

use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{io_err, scope_slug, CliError, Manifest, RunConfig, Workspace};
use crate::explain::{emit_summary_plot, explain_scope, ExplainReport};
use crate::ingest::{parse_log_csv, validate_schema, write_synthetic_csv};
use crate::metrics::{comparison_table, evaluate, write_metrics_csv, EvalResult, Scope};
use crate::model::{
    fit, hyper_search, load_checkpoint, save_checkpoint, AttnEdShape, ModelKind, SearchSpace, TrainReport,
    TrainedModel,
};
use crate::prep::io::{DAILY_FILE, PREP_CONFIG_FILE, SCALER_FILE, SPLIT_MANIFEST_FILE, VIF_FILE, WINDOWS_FILE};
use crate::prep::{load_dataset, prepare, prepare_daily, synthetic_daily, write_dataset, PreparedDataset, Split};

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Data(e.to_string()))?;
    write_text(path, &(text + "\n"))
}

fn dataset_files(dir: &Path) -> Vec<PathBuf> {
    [PREP_CONFIG_FILE, DAILY_FILE, SCALER_FILE, VIF_FILE, WINDOWS_FILE, SPLIT_MANIFEST_FILE]
        .iter()
        .map(|f| dir.join(f))
        .collect()
}

fn require_dataset(ws: &Workspace) -> Result<PreparedDataset, CliError> {
    let dir = ws.dataset_dir();
    if !dir.join(WINDOWS_FILE).is_file() {
        return Err(CliError::Data(format!(
            "no prepared dataset in {}; run `attn-ed prep` first",
            dir.display()
        )));
    }
    Ok(load_dataset(&dir)?)
}

fn require_model(ws: &Workspace, kind: ModelKind, ds: &PreparedDataset) -> Result<TrainedModel, CliError> {
    let path = ws.checkpoint(kind);
    if !path.is_file() {
        return Err(CliError::Data(format!(
            "no {kind} checkpoint at {}; run `attn-ed train --model {}` first",
            path.display(),
            kind.slug()
        )));
    }
    let model = load_checkpoint(&path)?;
    if model.feature_names != ds.feature_names || model.window_len != ds.window_len() || model.horizon != ds.horizon() {
        return Err(CliError::Data(format!(
            "{} was trained on a different dataset layout; retrain it",
            path.display()
        )));
    }
    Ok(model)
}

/// Writes the synthetic minute-log CSV into the workspace.
pub fn cmd_synth(cfg: &RunConfig) -> Result<Manifest, CliError> {
    let ws = cfg.workspace();
    let dir = ws.raw_dir();
    create_dir(&dir)?;
    let path = ws.raw_csv();
    let file = std::fs::File::create(&path).map_err(|e| io_err(&path, e))?;
    let n = write_synthetic_csv(&cfg.synth, BufWriter::new(file))?;
    log::info!("wrote {n} minute records to {}", path.display());
    let mut m = Manifest::new("synth", cfg);
    m.add_artifacts([&path])?;
    m.write(&dir)?;
    Ok(m)
}

/// Minute logs to the prepared-dataset directory.
pub fn cmd_prep(cfg: &RunConfig, input: Option<&Path>) -> Result<Manifest, CliError> {
    let ws = cfg.workspace();
    let input = match input.map(Path::to_path_buf).or_else(|| cfg.raw_csv.clone()) {
        Some(p) => p,
        None if ws.raw_csv().is_file() => ws.raw_csv(),
        None => {
            return Err(CliError::Data(format!(
                "no minute-log CSV at {}; run `attn-ed synth` or pass --input",
                ws.raw_csv().display()
            )))
        }
    };
    let dir = ws.dataset_dir();
    create_dir(&dir)?;
    let records = parse_log_csv(&input)?;
    let report = validate_schema(&records);
    if !report.is_clean() {
        log::warn!("{} validation findings in {}; see validation.json", report.error_count(), input.display());
    }
    let ds = prepare(&records, &cfg.prep)?;
    drop(records);
    let validation = dir.join("validation.json");
    write_json(&validation, &report)?;
    let mut files = write_dataset(&ds, &dir)?;
    files.push(validation);
    log::info!(
        "prepared {} windows for {} participants",
        ds.samples.len(),
        ds.participant_ids().len()
    );
    let mut m = Manifest::new("prep", cfg);
    m.add_inputs([&input])?;
    m.add_artifacts(&files)?;
    m.write(&dir)?;
    Ok(m)
}

/// Trains one model, optionally after a random hyperparameter search.
pub fn cmd_train(cfg: &RunConfig, kind: ModelKind, search: bool) -> Result<(Manifest, TrainReport), CliError> {
    let ws = cfg.workspace();
    let ds = require_dataset(&ws)?;
    let dir = ws.model_dir(kind);
    create_dir(&dir)?;
    let mut artifacts = Vec::new();

    let (hp, preset) = if search {
        if kind != ModelKind::AttnEd {
            return Err(CliError::Usage("--search applies to attn-ed only".into()));
        }
        let shape = AttnEdShape {
            window_len: ds.window_len(),
            horizon: ds.horizon(),
            n_features: ds.n_features(),
            feedback_feature: ds.usage_index(),
        };
        let outcome = hyper_search(
            &SearchSpace,
            &cfg.search_config(),
            shape,
            &ds.examples(Split::Train),
            &ds.examples(Split::Val),
        )?;
        let trials = dir.join("search_trials.csv");
        outcome.write_trials_csv(&trials).map_err(|e| io_err(&trials, e))?;
        let best = dir.join("search.json");
        write_json(&best, &outcome)?;
        log::info!("search picked trial {}: {:?}", outcome.best_trial, outcome.best);
        artifacts.extend([trials, best]);
        (outcome.best, None)
    } else {
        let (hp, preset) = cfg.model.resolve()?;
        (hp, preset.filter(|_| kind == ModelKind::AttnEd))
    };

    let (model, report) = fit(kind, &hp, preset.as_deref(), &ds, &cfg.fit_options())?;
    let ckpt = ws.checkpoint(kind);
    save_checkpoint(&model, &ckpt)?;
    artifacts.push(ckpt);
    let log_path = dir.join("train_log.csv");
    report.write_log_csv(&log_path).map_err(|e| io_err(&log_path, e))?;
    log::info!(
        "{kind}: best val MSE {:.6} at epoch {} of {}",
        report.best_val_mse,
        report.best_epoch,
        report.epochs_run()
    );

    let mut m = Manifest::new(&format!("train {}", kind.slug()), cfg);
    m.add_inputs(&dataset_files(&ws.dataset_dir()))?;
    m.add_artifacts(&artifacts)?;
    m.add_log(&log_path);
    m.write(&dir)?;
    Ok((m, report))
}

fn evaluate_scopes(
    models: &[TrainedModel],
    ds: &PreparedDataset,
    scopes: &[Scope],
) -> Result<Vec<EvalResult>, CliError> {
    let test = ds.samples_in(Split::Test);
    let mut out = Vec::new();
    for &scope in scopes {
        for model in models {
            out.push(evaluate(model, &test, scope)?);
        }
    }
    Ok(out)
}

/// attn-ED against the Vanilla LSTM on the test windows of each scope.
pub fn cmd_evaluate(cfg: &RunConfig, scopes: &[Scope]) -> Result<(Manifest, Vec<EvalResult>), CliError> {
    let ws = cfg.workspace();
    let ds = require_dataset(&ws)?;
    let models = ModelKind::ALL
        .iter()
        .map(|&k| require_model(&ws, k, &ds))
        .collect::<Result<Vec<_>, _>>()?;
    let results = evaluate_scopes(&models, &ds, scopes)?;
    let dir = ws.eval_dir();
    create_dir(&dir)?;
    let metrics = dir.join("metrics.csv");
    write_metrics_csv(&results, &metrics)?;
    let table = dir.join("comparison.txt");
    write_text(&table, &comparison_table(&results))?;

    let mut m = Manifest::new("evaluate", cfg);
    let mut inputs = dataset_files(&ws.dataset_dir());
    inputs.extend(ModelKind::ALL.iter().map(|&k| ws.checkpoint(k)));
    m.add_inputs(&inputs)?;
    m.add_artifacts([&metrics, &table])?;
    m.write(&dir)?;
    Ok((m, results))
}

fn write_explanation(report: &ExplainReport, json: &Path, svg: &Path) -> Result<Vec<PathBuf>, CliError> {
    report.write_json(json)?;
    let (svg, csv) = emit_summary_plot(&report.shap_explanations(), svg)?;
    Ok(vec![json.to_path_buf(), svg, csv])
}

/// SHAP explanations of one model for each scope.
pub fn cmd_explain(
    cfg: &RunConfig,
    kind: ModelKind,
    scopes: &[Scope],
) -> Result<Vec<(Manifest, ExplainReport)>, CliError> {
    let ws = cfg.workspace();
    let ds = require_dataset(&ws)?;
    let model = require_model(&ws, kind, &ds)?;
    let ecfg = cfg.explain_config();
    let mut out = Vec::new();
    for &scope in scopes {
        let report = explain_scope(&model, &ds, scope, &ecfg)?;
        let dir = ws.explain_dir(scope);
        create_dir(&dir)?;
        let files = write_explanation(&report, &dir.join("explain.json"), &dir.join("summary.svg"))?;
        let mut m = Manifest::new(&format!("explain {} {scope}", kind.slug()), cfg);
        let mut inputs = dataset_files(&ws.dataset_dir());
        inputs.push(ws.checkpoint(kind));
        m.add_inputs(&inputs)?;
        m.add_artifacts(&files)?;
        m.write(&dir)?;
        out.push((m, report));
    }
    Ok(out)
}

/// Everything the comparison protocol produces for one seed.
#[derive(Debug, Clone)]
pub struct BenchmarkOutcome {
    pub models: Vec<TrainedModel>,
    pub train_reports: Vec<TrainReport>,
    /// Personalized rows first, then global; attn-ED before Vanilla LSTM.
    pub metrics: Vec<EvalResult>,
    /// attn-ED explanations in the requested scope order.
    pub explanations: Vec<ExplainReport>,
}

impl BenchmarkOutcome {
    pub fn metric(&self, scope: Scope, kind: ModelKind) -> Option<&EvalResult> {
        let name = kind.to_string();
        self.metrics.iter().find(|r| r.scope == scope && r.model == name)
    }
}

/// Trains both models, evaluates the personalized and global scopes and
/// explains attn-ED in both scopes.
pub fn run_benchmark(ds: &PreparedDataset, cfg: &RunConfig) -> Result<BenchmarkOutcome, CliError> {
    run_benchmark_with(ds, cfg, &[Scope::Personalized(cfg.participant), Scope::Global])
}

/// [`run_benchmark`] explaining only `explain_scopes`.
pub fn run_benchmark_with(
    ds: &PreparedDataset,
    cfg: &RunConfig,
    explain_scopes: &[Scope],
) -> Result<BenchmarkOutcome, CliError> {
    let (hp, preset) = cfg.model.resolve()?;
    let opts = cfg.fit_options();
    let mut models = Vec::new();
    let mut train_reports = Vec::new();
    for kind in ModelKind::ALL {
        let preset = preset.as_deref().filter(|_| kind == ModelKind::AttnEd);
        let (model, report) = fit(kind, &hp, preset, ds, &opts)?;
        log::info!(
            "{kind}: best val MSE {:.6} at epoch {} ({:.1} s)",
            report.best_val_mse,
            report.best_epoch,
            report.wall_time_s
        );
        models.push(model);
        train_reports.push(report);
    }
    let scopes = [Scope::Personalized(cfg.participant), Scope::Global];
    let metrics = evaluate_scopes(&models, ds, &scopes)?;
    let ecfg = cfg.explain_config();
    let explanations = explain_scopes
        .iter()
        .map(|&s| explain_scope(&models[0], ds, s, &ecfg))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BenchmarkOutcome {
        models,
        train_reports,
        metrics,
        explanations,
    })
}

/// Synthesizes the configured cohort and prepares it in memory, without
/// writing the minute-log CSV.
pub fn prepare_synthetic(cfg: &RunConfig) -> Result<PreparedDataset, CliError> {
    let days = synthetic_daily(&cfg.synth, cfg.prep.d_max_s, cfg.prep.midnight)?;
    Ok(prepare_daily(days, &cfg.prep)?)
}

/// Full comparison on the prepared dataset, written to the benchmark
/// directory.
pub fn cmd_benchmark(cfg: &RunConfig) -> Result<(Manifest, BenchmarkOutcome), CliError> {
    let ws = cfg.workspace();
    let ds = require_dataset(&ws)?;
    let outcome = run_benchmark(&ds, cfg)?;
    let dir = ws.benchmark_dir();
    create_dir(&dir)?;

    let mut artifacts = Vec::new();
    let mut logs = Vec::new();
    for (model, report) in outcome.models.iter().zip(&outcome.train_reports) {
        let ckpt = dir.join(format!("{}.ckpt", model.kind().slug()));
        save_checkpoint(model, &ckpt)?;
        artifacts.push(ckpt);
        let log_path = dir.join(format!("train_log_{}.csv", model.kind().slug()));
        report.write_log_csv(&log_path).map_err(|e| io_err(&log_path, e))?;
        logs.push(log_path);
    }
    let metrics = dir.join("metrics.csv");
    write_metrics_csv(&outcome.metrics, &metrics)?;
    let table = dir.join("comparison.txt");
    write_text(&table, &comparison_table(&outcome.metrics))?;
    artifacts.extend([metrics, table]);
    for report in &outcome.explanations {
        let slug = scope_slug(report.scope);
        artifacts.extend(write_explanation(
            report,
            &dir.join(format!("explain_{slug}.json")),
            &dir.join(format!("summary_{slug}.svg")),
        )?);
    }
    let importance = dir.join("importance.txt");
    let mut text = String::new();
    for report in &outcome.explanations {
        text.push_str(&format!("{} ({} windows)\n", report.scope, report.global.n_explanations));
        for &i in &report.global.ranking {
            text.push_str(&format!(
                "  {:<12} {:.4}\n",
                report.global.feature_names[i], report.global.mean_abs_phi[i]
            ));
        }
    }
    write_text(&importance, &text)?;
    artifacts.push(importance);

    let mut m = Manifest::new("benchmark", cfg);
    m.add_inputs(&dataset_files(&ws.dataset_dir()))?;
    m.add_artifacts(&artifacts)?;
    for l in &logs {
        m.add_log(l);
    }
    m.write(&dir)?;
    Ok((m, outcome))
}

/// Prints a short artifact listing for a manifest.
pub fn print_manifest_summary<W: Write>(w: &mut W, m: &Manifest) -> std::io::Result<()> {
    writeln!(w, "{}: {} artifact(s)", m.command, m.artifacts.len())?;
    for a in &m.artifacts {
        writeln!(w, "  {}  {}", &a.sha256[..12], a.path)?;
    }
    Ok(())
}
