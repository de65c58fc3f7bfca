use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use ctxed_core::corpus::type_frequencies;
use ctxed_core::eval::{compare_reports, topk_analysis, MetricsReport, QuartileMode};

use super::{create_out, load, write_json, write_text};
use crate::config::resolve;
use crate::error::{CliError, CliResult};
use crate::manifest::Recorder;
use crate::Common;

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub common: Common,
    /// `report.json` written by `eval`.
    #[arg(long)]
    pub report: PathBuf,
    /// Training corpus that defines type frequencies.
    #[arg(long)]
    pub train: PathBuf,
    /// Second report for a paired t-test on per-type F1.
    #[arg(long)]
    pub baseline: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzeConfig {
    /// Empty means every k from 1 to the number of gold types.
    pub ks: Vec<usize>,
    pub quartile_mode: QuartileMode,
}

fn read_report(path: &Path, rec: &mut Recorder) -> CliResult<MetricsReport> {
    rec.input(path);
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::validation(format!("{}: not a metrics report: {e}", path.display())))
}

/// JSON has no infinities; they are written as the strings "inf" / "-inf".
fn json_float(v: f64) -> serde_json::Value {
    if v.is_finite() {
        v.into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn run(args: AnalyzeArgs, argv: &[String]) -> CliResult<()> {
    let cfg: AnalyzeConfig = resolve(&AnalyzeConfig::default(), args.common.config.as_deref(), &args.common.overrides(false))?;
    let out = &args.common.out;
    let mut rec = Recorder::new("analyze", argv, &cfg, args.common.seed)?;
    let report = read_report(&args.report, &mut rec)?;
    let freq = type_frequencies(&load(&args.train, "train", &mut rec)?);
    let baseline = args.baseline.as_ref().map(|p| read_report(p, &mut rec)).transpose()?;
    create_out(out)?;

    let ks: Vec<usize> = if cfg.ks.is_empty() {
        (1..=report.gold_types().len()).collect()
    } else {
        cfg.ks.clone()
    };
    let table = topk_analysis(&report, &freq, &ks, cfg.quartile_mode)?;
    write_text(out, "topk.csv", &table.topk_csv(), &mut rec)?;
    write_text(out, "quartiles.csv", &table.quartiles_csv(), &mut rec)?;
    write_json(out, "analysis.json", &table, &mut rec)?;
    print!("{}", table.topk_csv());
    print!("{}", table.quartiles_csv());

    if let Some(base) = baseline {
        let cmp = compare_reports(&report, &base)?;
        println!(
            "paired t-test over {} types: t = {}, df = {}, p = {}: {}",
            cmp.types.len(),
            cmp.test.t,
            cmp.test.df,
            cmp.test.p,
            cmp.verdict()
        );
        let summary = serde_json::json!({
            "types": cmp.types,
            "t": json_float(cmp.test.t),
            "df": cmp.test.df,
            "p": cmp.test.p,
            "significant": cmp.significant,
            "verdict": cmp.verdict(),
        });
        write_json(out, "ttest.json", &summary, &mut rec)?;
    }
    rec.write(out)?;
    Ok(())
}
