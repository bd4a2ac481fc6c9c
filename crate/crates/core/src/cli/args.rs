//! Command-line surface.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use super::commands::{
    cmd_benchmark, cmd_evaluate, cmd_explain, cmd_prep, cmd_synth, cmd_train, print_manifest_summary,
};
use super::{configure_threads, CliError, RunConfig};
use crate::metrics::{comparison_table, Scope};
use crate::model::ModelKind;

#[derive(Debug, Parser)]
#[command(
    name = "attn-ed",
    version,
    about = "Forecast daily hearing-aid usage with attn-ED, compare against a Vanilla LSTM and explain with Kernel SHAP"
)]
pub struct Cli {
    /// Run configuration (JSON), or a manifest.json to replay.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for training, search and explanation.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Workspace directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Participant for personalized evaluation and explanation.
    #[arg(long, global = true)]
    pub participant: Option<u32>,
    /// Named attn-ED hyperparameter preset.
    #[arg(long, global = true)]
    pub preset: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScopeArg {
    Personalized,
    Global,
    Both,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the synthetic minute-log cohort.
    Synth {
        #[arg(long)]
        participants: Option<u32>,
        #[arg(long)]
        days: Option<u32>,
    },
    /// Minute logs to daily series, scaler, VIF report, splits and windows.
    Prep {
        /// Minute-log CSV; defaults to the workspace's synthetic file.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Train one model and write its checkpoint.
    Train {
        #[arg(long, default_value = "attn-ed")]
        model: ModelKind,
        /// Random hyperparameter search before the final fit.
        #[arg(long)]
        search: bool,
        /// Search trials.
        #[arg(long, requires = "search")]
        budget: Option<usize>,
        #[arg(long)]
        max_epochs: Option<usize>,
    },
    /// Compare attn-ED and the Vanilla LSTM on the test windows.
    Evaluate {
        #[arg(long, value_enum)]
        scope: Option<ScopeArg>,
    },
    /// Kernel SHAP explanations and summary plots.
    Explain {
        #[arg(long, default_value = "attn-ed")]
        model: ModelKind,
        #[arg(long, value_enum)]
        scope: Option<ScopeArg>,
    },
    /// Train both models, evaluate both scopes and explain attn-ED.
    Benchmark {
        #[arg(long)]
        max_epochs: Option<usize>,
    },
}

impl Cli {
    /// The configuration file (or defaults) with command-line overrides.
    pub fn resolve_config(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.workspace = o.clone();
        }
        if let Some(p) = self.participant {
            cfg.participant = p;
        }
        if let Some(p) = &self.preset {
            cfg.model.preset = Some(p.clone());
            cfg.model.hyper = None;
        }
        match &self.command {
            Command::Synth { participants, days } => {
                if let Some(n) = participants {
                    cfg.synth.n_participants = *n;
                }
                if let Some(d) = days {
                    cfg.synth.days = *d;
                }
            }
            Command::Train { budget, max_epochs, .. } => {
                if let Some(b) = budget {
                    cfg.search.budget = *b;
                }
                if let Some(e) = max_epochs {
                    cfg.train.max_epochs = *e;
                }
            }
            Command::Benchmark { max_epochs: Some(e) } => cfg.train.max_epochs = *e,
            _ => {}
        }
        Ok(cfg)
    }

    fn scopes(&self, arg: Option<ScopeArg>, participant: u32) -> Vec<Scope> {
        let arg = arg.unwrap_or(if self.participant.is_some() {
            ScopeArg::Personalized
        } else {
            ScopeArg::Both
        });
        match arg {
            ScopeArg::Personalized => vec![Scope::Personalized(participant)],
            ScopeArg::Global => vec![Scope::Global],
            ScopeArg::Both => vec![Scope::Personalized(participant), Scope::Global],
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = cli.resolve_config()?;
    let mut out = std::io::stdout().lock();
    let print = |r: std::io::Result<()>| r.map_err(|e| CliError::Data(format!("stdout: {e}")));
    match &cli.command {
        Command::Synth { .. } => print(print_manifest_summary(&mut out, &cmd_synth(&cfg)?))?,
        Command::Prep { input } => print(print_manifest_summary(&mut out, &cmd_prep(&cfg, input.as_deref())?))?,
        Command::Train { model, search, .. } => {
            let (m, _) = cmd_train(&cfg, *model, *search)?;
            print(print_manifest_summary(&mut out, &m))?;
        }
        Command::Evaluate { scope } => {
            let (m, results) = cmd_evaluate(&cfg, &cli.scopes(*scope, cfg.participant))?;
            print(print_manifest_summary(&mut out, &m))?;
            print(std::io::Write::write_all(&mut out, comparison_table(&results).as_bytes()))?;
        }
        Command::Explain { model, scope } => {
            for (m, report) in cmd_explain(&cfg, *model, &cli.scopes(*scope, cfg.participant))? {
                print(print_manifest_summary(&mut out, &m))?;
                let ranked = report.global.ranked_names().join(" > ");
                print(std::io::Write::write_all(&mut out, format!("  ranking: {ranked}\n").as_bytes()))?;
            }
        }
        Command::Benchmark { .. } => {
            let (m, outcome) = cmd_benchmark(&cfg)?;
            print(print_manifest_summary(&mut out, &m))?;
            print(std::io::Write::write_all(&mut out, comparison_table(&outcome.metrics).as_bytes()))?;
        }
    }
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = configure_threads().and_then(|_| run(&cli));
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
