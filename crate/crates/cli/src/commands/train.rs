use std::path::PathBuf;

use clap::{Args, ValueEnum};

use ctxed_core::exec::ExecMode;
use ctxed_core::trainer::{train, Checkpoint, TrainConfig};

use super::{create_out, load, load_embeddings, write_json};
use crate::config::resolve;
use crate::error::CliResult;
use crate::manifest::Recorder;
use crate::Common;

pub const CHECKPOINT_FILE: &str = "checkpoint.ckpt";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Exec {
    Sequential,
    Parallel,
}

impl From<Exec> for ExecMode {
    fn from(e: Exec) -> Self {
        match e {
            Exec::Sequential => ExecMode::Sequential,
            Exec::Parallel => ExecMode::Parallel,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub dev: PathBuf,
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Scheduling of per-sentence work; results are identical either way.
    #[arg(long, value_enum, default_value = "parallel")]
    pub exec: Exec,
}

pub fn run(args: TrainArgs, argv: &[String]) -> CliResult<()> {
    let cfg: TrainConfig = resolve(&TrainConfig::default(), args.common.config.as_deref(), &args.common.overrides(true))?;
    cfg.validate()?;
    let out = &args.common.out;
    create_out(out)?;
    let mut rec = Recorder::new("train", argv, &cfg, Some(cfg.seed))?;
    let train_corpus = load(&args.train, "train", &mut rec)?;
    let dev = load(&args.dev, "dev", &mut rec)?;
    let emb = load_embeddings(&args.embeddings, &mut rec)?;

    let run = train(&cfg, &train_corpus, &dev, &emb, args.exec.into())?;
    for h in &run.history {
        eprintln!(
            "epoch {:>3}  loss {:.5}  dev micro {:.4}  macro {:.4}",
            h.epoch, h.train_loss, h.dev_micro_f1, h.dev_macro_f1
        );
    }
    let ckpt = out.join(CHECKPOINT_FILE);
    Checkpoint::from_run(&run).write(&ckpt)?;
    rec.output(&ckpt);
    write_json(out, "history.json", &run.history, &mut rec)?;
    write_json(out, "dev_report.json", &run.best_report, &mut rec)?;
    let best = run.best();
    println!(
        "best epoch {}: dev micro-F1 {:.4}, macro-F1 {:.4}",
        best.epoch, best.dev_micro_f1, best.dev_macro_f1
    );
    rec.write(out)?;
    Ok(())
}
