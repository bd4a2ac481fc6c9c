//! Pipeline orchestration behind the `attn-ed` binary: run configuration,
//! workspace layout, manifests and the subcommands.

pub mod args;
pub mod commands;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use args::{main_with_args, Cli, Command};
pub use commands::{
    cmd_benchmark, cmd_evaluate, cmd_explain, cmd_prep, cmd_synth, cmd_train, prepare_synthetic, run_benchmark,
    run_benchmark_with, BenchmarkOutcome,
};

use crate::explain::{ExplainConfig, ExplainError, ExplainTarget, ShapMode};
use crate::ingest::{IngestError, SynthConfig};
use crate::metrics::{MetricsError, Scope};
use crate::model::{FitOptions, HyperParams, ModelError, ModelKind, SearchConfig, PRESET_OPTIMAL_EVOTION};
use crate::nn::NnError;
use crate::prep::{PrepConfig, PrepError};

pub const ENV_THREADS: &str = "ATTN_ED_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numeric error: {0}")]
    Numeric(String),
}

impl CliError {
    /// 1 usage, 2 data, 3 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Config(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<PrepError> for CliError {
    fn from(e: PrepError) -> Self {
        match e {
            PrepError::Config(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::NonFiniteLoss { .. } | ModelError::Nn(NnError::NonFinite(_)) => CliError::Numeric(e.to_string()),
            ModelError::Config(_) | ModelError::Nn(NnError::Config(_)) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::Model(m) => m.into(),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<ExplainError> for CliError {
    fn from(e: ExplainError) -> Self {
        match e {
            ExplainError::Model(m) => m.into(),
            ExplainError::Protocol(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

pub(crate) fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    /// Named hyperparameter preset; ignored when `hyper` is set.
    pub preset: Option<String>,
    pub hyper: Option<HyperParams>,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            preset: Some(PRESET_OPTIMAL_EVOTION.to_string()),
            hyper: None,
        }
    }
}

impl ModelSection {
    /// The attn-ED hyperparameters and, when used, the preset name.
    pub fn resolve(&self) -> Result<(HyperParams, Option<String>), CliError> {
        match (&self.hyper, &self.preset) {
            (Some(h), _) => {
                h.validate()?;
                Ok((*h, None))
            }
            (None, Some(name)) => Ok((HyperParams::preset(name)?, Some(name.clone()))),
            (None, None) => Err(CliError::Usage("model needs a preset or explicit hyperparameters".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub max_epochs: usize,
    pub patience: Option<usize>,
    pub clip_norm: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let f = FitOptions::default();
        Self {
            max_epochs: f.max_epochs,
            patience: f.patience,
            clip_norm: f.clip_norm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSection {
    pub budget: usize,
    pub max_epochs: usize,
    pub patience: Option<usize>,
}

impl Default for SearchSection {
    fn default() -> Self {
        let s = SearchConfig::default();
        Self {
            budget: s.budget,
            max_epochs: s.max_epochs,
            patience: s.patience,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainSection {
    pub background_size: usize,
    pub n_samples: usize,
    pub max_instances: usize,
    pub target: ExplainTarget,
    pub mode: ShapMode,
}

impl Default for ExplainSection {
    fn default() -> Self {
        let e = ExplainConfig::default();
        Self {
            background_size: e.background_size,
            n_samples: e.n_samples,
            max_instances: e.max_instances,
            target: e.target,
            mode: e.mode,
        }
    }
}

/// Everything a run needs. Defaults reproduce the published protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Minute-log CSV for `prep`; defaults to the workspace's synthetic file.
    pub raw_csv: Option<PathBuf>,
    pub workspace: PathBuf,
    /// Seed for training, search and explanation. Synthesis uses `synth.seed`.
    pub seed: u64,
    /// Participant of the personalized scope.
    pub participant: u32,
    pub synth: SynthConfig,
    pub prep: PrepConfig,
    pub model: ModelSection,
    pub train: TrainSection,
    pub search: SearchSection,
    pub explain: ExplainSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            raw_csv: None,
            workspace: PathBuf::from("workspace"),
            seed: 0,
            participant: 17,
            synth: SynthConfig::default(),
            prep: PrepConfig::default(),
            model: ModelSection::default(),
            train: TrainSection::default(),
            search: SearchSection::default(),
            explain: ExplainSection::default(),
        }
    }
}

impl RunConfig {
    /// Reads a run configuration, or the configuration recorded in a
    /// `manifest.json`.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let value = match value {
            serde_json::Value::Object(mut m) if m.contains_key("command") && m.contains_key("config") => {
                m.remove("config").expect("checked")
            }
            v => v,
        };
        serde_json::from_value(value).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn fit_options(&self) -> FitOptions {
        FitOptions {
            max_epochs: self.train.max_epochs,
            patience: self.train.patience,
            clip_norm: self.train.clip_norm,
            seed: self.seed,
        }
    }

    pub fn search_config(&self) -> SearchConfig {
        SearchConfig {
            budget: self.search.budget,
            max_epochs: self.search.max_epochs,
            patience: self.search.patience,
            clip_norm: self.train.clip_norm,
            seed: self.seed,
        }
    }

    pub fn explain_config(&self) -> ExplainConfig {
        ExplainConfig {
            background_size: self.explain.background_size,
            n_samples: self.explain.n_samples,
            max_instances: self.explain.max_instances,
            target: self.explain.target,
            mode: self.explain.mode,
            seed: self.seed,
        }
    }

    pub fn workspace(&self) -> Workspace {
        Workspace::new(&self.workspace)
    }
}

/// Fixed artifact locations under one workspace directory.
#[derive(Debug, Clone)]
pub struct Workspace {
    pub root: PathBuf,
}

impl Workspace {
    pub fn new(root: &Path) -> Self {
        Self { root: root.to_path_buf() }
    }

    pub fn raw_dir(&self) -> PathBuf {
        self.root.join("raw")
    }

    pub fn raw_csv(&self) -> PathBuf {
        self.raw_dir().join("raw.csv")
    }

    pub fn dataset_dir(&self) -> PathBuf {
        self.root.join("dataset")
    }

    pub fn model_dir(&self, kind: ModelKind) -> PathBuf {
        self.root.join("models").join(kind.slug())
    }

    pub fn checkpoint(&self, kind: ModelKind) -> PathBuf {
        self.model_dir(kind).join("model.ckpt")
    }

    pub fn eval_dir(&self) -> PathBuf {
        self.root.join("eval")
    }

    pub fn explain_dir(&self, scope: Scope) -> PathBuf {
        self.root.join("explain").join(scope_slug(scope))
    }

    pub fn benchmark_dir(&self) -> PathBuf {
        self.root.join("benchmark")
    }
}

/// Directory-friendly scope name.
pub fn scope_slug(scope: Scope) -> String {
    match scope {
        Scope::Personalized(p) => format!("participant-{p}"),
        Scope::Global => "global".into(),
    }
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    use std::io::Read;
    let mut f = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf).map_err(|e| io_err(path, e))?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    /// Relative to the workspace when inside it.
    pub path: String,
    pub sha256: String,
}

/// Record of one command invocation. Replaying `config` reproduces every
/// hashed artifact; files under `logs` carry wall-clock timings and are not
/// hashed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub tool_version: String,
    pub config: RunConfig,
    pub seed: u64,
    pub synth_seed: u64,
    pub inputs: Vec<FileDigest>,
    pub artifacts: Vec<FileDigest>,
    pub logs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, cfg: &RunConfig) -> Self {
        Self {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config: cfg.clone(),
            seed: cfg.seed,
            synth_seed: cfg.synth.seed,
            inputs: Vec::new(),
            artifacts: Vec::new(),
            logs: Vec::new(),
        }
    }

    fn digest(&self, path: &Path) -> Result<FileDigest, CliError> {
        Ok(FileDigest {
            path: self.relative(path),
            sha256: sha256_file(path)?,
        })
    }

    fn relative(&self, path: &Path) -> String {
        path.strip_prefix(&self.config.workspace)
            .unwrap_or(path)
            .to_string_lossy()
            .replace('\\', "/")
    }

    pub fn add_inputs<'a>(&mut self, paths: impl IntoIterator<Item = &'a PathBuf>) -> Result<(), CliError> {
        for p in paths {
            let d = self.digest(p)?;
            self.inputs.push(d);
        }
        Ok(())
    }

    pub fn add_artifacts<'a>(&mut self, paths: impl IntoIterator<Item = &'a PathBuf>) -> Result<(), CliError> {
        for p in paths {
            let d = self.digest(p)?;
            self.artifacts.push(d);
        }
        Ok(())
    }

    pub fn add_log(&mut self, path: &Path) {
        self.logs.push(self.relative(path));
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::Data(e.to_string()))?;
        std::fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))?;
        Ok(path)
    }
}

/// Caps the global thread pool from `ATTN_ED_THREADS`, when set.
pub fn configure_threads() -> Result<Option<usize>, CliError> {
    let Ok(raw) = std::env::var(ENV_THREADS) else {
        return Ok(None);
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("{ENV_THREADS} must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    Ok(Some(n))
}
