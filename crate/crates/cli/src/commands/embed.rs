use std::path::PathBuf;

use clap::Args;

use ctxed_core::corpus::synth_embed_with;

use super::{create_out, load};
use crate::config::resolve;
use crate::error::CliResult;
use crate::manifest::Recorder;
use crate::presets::EmbedSpec;
use crate::Common;

pub const EMBEDDINGS_FILE: &str = "embeddings.emb";

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[command(flatten)]
    pub common: Common,
    /// Corpora to embed; all must share one vocabulary.
    #[arg(long = "corpus", required = true)]
    pub corpora: Vec<PathBuf>,
}

pub fn run(args: EmbedArgs, argv: &[String]) -> CliResult<()> {
    let cfg: EmbedSpec = resolve(&EmbedSpec::default(), args.common.config.as_deref(), &args.common.overrides(true))?;
    let out = &args.common.out;
    create_out(out)?;
    let mut rec = Recorder::new("synth-embed", argv, &cfg, Some(cfg.seed))?;
    let corpora = args
        .corpora
        .iter()
        .enumerate()
        .map(|(i, p)| load(p, &format!("corpus{i}"), &mut rec))
        .collect::<CliResult<Vec<_>>>()?;
    let refs: Vec<_> = corpora.iter().collect();
    let store = synth_embed_with(&refs, &cfg.to_core())?;
    let path = out.join(EMBEDDINGS_FILE);
    store.write(&path)?;
    rec.output(&path);
    println!("{} sentences embedded at D={}", store.len(), store.dim());
    rec.write(out)?;
    Ok(())
}
