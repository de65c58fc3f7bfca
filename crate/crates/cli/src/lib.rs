//! `ctxed`: the event-detection pipeline as subcommands.
//!
//! Every command takes `--config <json>`, repeated `--set dotted.key=value`
//! overrides, `--out <dir>` and `--seed <n>`, and writes a `manifest.json`
//! beside its outputs. Exit codes: 0 success, 1 validation error, 2 runtime
//! error.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod presets;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use error::{CliError, CliResult, EXIT_RUNTIME, EXIT_VALIDATION};

#[derive(Debug, Parser)]
#[command(name = "ctxed", version, about = "Context-enhanced event detection over token embeddings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// JSON config file; keys not known to the command are rejected.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override a config value, e.g. `--set lora.rank=4`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
    /// Seed override for commands with a seeded config.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl Common {
    /// `--set` overrides followed by `--seed`, when the config has a seed.
    pub fn overrides(&self, has_seed: bool) -> Vec<String> {
        let mut o = self.set.clone();
        if let (true, Some(seed)) = (has_seed, self.seed) {
            o.push(format!("seed={seed}"));
        }
        o
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate and normalize JSONL splits, or generate a synthetic dataset.
    Ingest(commands::ingest::IngestArgs),
    /// Write planted-signal embeddings for one or more corpora.
    SynthEmbed(commands::embed::EmbedArgs),
    /// Train a model and keep the best epoch by dev score.
    Train(commands::train::TrainArgs),
    /// Score a checkpoint on a labelled corpus.
    Eval(commands::eval::EvalArgs),
    /// Top-k / quartile long-tail analysis and paired t-test against a baseline.
    Analyze(commands::analyze::AnalyzeArgs),
    /// Render few- or zero-shot prompts for a corpus.
    PromptBuild(commands::prompt::BuildArgs),
    /// Collect model responses for rendered prompts and score them.
    PromptScore(commands::prompt::ScoreArgs),
}

fn dispatch(cli: Cli, argv: &[String]) -> CliResult<()> {
    match cli.command {
        Command::Ingest(a) => commands::ingest::run(a, argv),
        Command::SynthEmbed(a) => commands::embed::run(a, argv),
        Command::Train(a) => commands::train::run(a, argv),
        Command::Eval(a) => commands::eval::run(a, argv),
        Command::Analyze(a) => commands::analyze::run(a, argv),
        Command::PromptBuild(a) => commands::prompt::build(a, argv),
        Command::PromptScore(a) => commands::prompt::score(a, argv),
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { 0 };
        }
    };
    let argv: Vec<String> = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match dispatch(cli, &argv) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
