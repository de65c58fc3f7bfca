use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use ctxed_core::corpus::{type_frequencies, upsample, write_corpus, Corpus};

use super::{create_out, load, write_json};
use crate::config::resolve;
use crate::error::{CliError, CliResult};
use crate::manifest::Recorder;
use crate::presets::{synth_splits, Preset, SynthSpec};
use crate::Common;

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, conflicts_with = "synthetic")]
    pub train: Option<PathBuf>,
    #[arg(long, conflicts_with = "synthetic")]
    pub dev: Option<PathBuf>,
    #[arg(long, conflicts_with = "synthetic")]
    pub test: Option<PathBuf>,
    /// Generate a synthetic train/dev pair instead of reading files.
    #[arg(long, value_enum)]
    pub synthetic: Option<Preset>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UpsampleConfig {
    /// 0 disables upsampling.
    pub min_count: usize,
    pub max_factor: usize,
}

impl Default for UpsampleConfig {
    fn default() -> Self {
        UpsampleConfig { min_count: 0, max_factor: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    pub synthetic: Option<Preset>,
    pub synth: SynthSpec,
    pub seed: u64,
    pub upsample: UpsampleConfig,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            synthetic: None,
            synth: SynthSpec::default(),
            seed: 0,
            upsample: UpsampleConfig::default(),
        }
    }
}

fn resolve_config(args: &IngestArgs) -> CliResult<IngestConfig> {
    let overrides = args.common.overrides(true);
    let mut defaults = IngestConfig {
        synthetic: args.synthetic,
        ..IngestConfig::default()
    };
    if let Some(p) = args.synthetic {
        defaults.synth = p.spec();
    }
    let first = resolve(&defaults, args.common.config.as_deref(), &overrides)?;
    // a preset chosen in the config file brings its own generator defaults
    match first.synthetic {
        Some(p) if p.spec() != defaults.synth => {
            defaults.synthetic = Some(p);
            defaults.synth = p.spec();
            resolve(&defaults, args.common.config.as_deref(), &overrides)
        }
        _ => Ok(first),
    }
}

pub fn run(args: IngestArgs, argv: &[String]) -> CliResult<()> {
    let cfg = resolve_config(&args)?;
    let out = &args.common.out;
    create_out(out)?;
    let mut rec = Recorder::new("ingest", argv, &cfg, Some(cfg.seed))?;

    let mut splits: Vec<(&str, Corpus)> = Vec::new();
    if let Some(preset) = cfg.synthetic {
        let (train, dev) = synth_splits(&cfg.synth, cfg.seed)?;
        splits.push(("train", train));
        splits.push(("dev", dev));
        write_json(out, "synth_embed.json", &preset.embed_spec(&cfg.synth, cfg.seed), &mut rec)?;
    } else {
        let Some(train) = &args.train else {
            return Err(CliError::validation("ingest needs --train (or --synthetic)"));
        };
        splits.push(("train", load(train, "train", &mut rec)?));
        for (name, path) in [("dev", &args.dev), ("test", &args.test)] {
            if let Some(p) = path {
                splits.push((name, load(p, name, &mut rec)?));
            }
        }
    }

    let vocab = splits
        .iter()
        .skip(1)
        .fold(splits[0].1.vocab().clone(), |v, (_, c)| v.union(c.vocab()));
    let mut normalized = Vec::with_capacity(splits.len());
    for (name, corpus) in splits {
        let mut corpus = corpus.with_vocab(vocab.clone())?;
        if name == "train" && cfg.upsample.min_count > 0 {
            if cfg.upsample.max_factor == 0 {
                return Err(CliError::validation("upsample.max_factor must be at least 1"));
            }
            corpus = upsample(&corpus, cfg.upsample.min_count, cfg.upsample.max_factor);
        }
        let path = out.join(format!("{name}.jsonl"));
        write_corpus(&corpus, &path)?;
        rec.output(&path);
        println!("{name}: {} sentences, {} mentions", corpus.len(), corpus.mention_count());
        normalized.push((name, corpus));
    }
    println!("{} event types", vocab.len());
    write_json(out, "freq.json", &type_frequencies(&normalized[0].1), &mut rec)?;
    rec.write(out)?;
    Ok(())
}
