use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use ctxed_core::eval::{score, ti_score, MacroSet, ScoreOptions};
use ctxed_core::trainer::{predict_corpus, Checkpoint};

use super::train::Exec;
use super::{create_out, load, load_embeddings, write_json, write_jsonl};
use crate::config::resolve;
use crate::error::CliResult;
use crate::manifest::Recorder;
use crate::Common;

pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long, value_enum, default_value = "parallel")]
    pub exec: Exec,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub macro_set: MacroSet,
    pub retain_none: bool,
}

#[derive(Serialize)]
struct PredictionRow<'a> {
    id: &'a str,
    events: &'a [ctxed_core::corpus::EventMention],
}

pub fn run(args: EvalArgs, argv: &[String]) -> CliResult<()> {
    let cfg: EvalConfig = resolve(&EvalConfig::default(), args.common.config.as_deref(), &args.common.overrides(false))?;
    let out = &args.common.out;
    let mut rec = Recorder::new("eval", argv, &cfg, args.common.seed)?;
    rec.input(&args.checkpoint);
    let ckpt = Checkpoint::read(&args.checkpoint)?;
    let corpus = load(&args.corpus, "eval", &mut rec)?;
    ckpt.check_vocab(corpus.vocab())?;
    let emb = load_embeddings(&args.embeddings, &mut rec)?;
    create_out(out)?;

    let pred = predict_corpus(&ckpt.model, &corpus, &emb, args.exec.into())?;
    let opts = ScoreOptions {
        macro_set: cfg.macro_set,
        retain_none: cfg.retain_none,
    };
    let report = score(&pred, corpus.all_mentions(), &opts);
    let ti = ti_score(&pred, corpus.all_mentions());
    print!("{}", report.to_table());
    println!(
        "trigger identification: P {:.4} R {:.4} F1 {:.4}",
        ti.micro.precision, ti.micro.recall, ti.micro.f1
    );
    write_json(out, REPORT_FILE, &report, &mut rec)?;
    write_json(out, "ti_report.json", &ti, &mut rec)?;
    let rows: Vec<PredictionRow> = corpus
        .sentences()
        .iter()
        .zip(&pred)
        .map(|(s, p)| PredictionRow { id: &s.id, events: p })
        .collect();
    write_jsonl(out, "predictions.jsonl", &rows, &mut rec)?;
    rec.write(out)?;
    Ok(())
}
