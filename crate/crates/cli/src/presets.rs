//! Synthetic datasets with planted signal.

use serde::{Deserialize, Serialize};

use ctxed_core::corpus::{synth_corpus, synth_embed_with, synth_type_names, Corpus, EmbeddingStore, SynthCorpusConfig, SynthEmbedConfig};
use ctxed_core::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// 20 Zipfian types, each with its own token centroid.
    Planted,
    /// 10 types in 5 pairs; each pair shares a token centroid and differs only
    /// in a sentence-level offset on the other words.
    Confusable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub num_types: usize,
    pub train_sentences: usize,
    pub dev_sentences: usize,
    pub zipf_exponent: f64,
    pub max_mentions: usize,
    pub trigger_avoids_last: bool,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Preset::Planted.spec()
    }
}

/// Embedding settings; also the config schema of `synth-embed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedSpec {
    pub dim: usize,
    pub noise_sigma: f64,
    pub seed: u64,
    pub confusable_pairs: Vec<(String, String)>,
    pub context_offset: f64,
}

impl Default for EmbedSpec {
    fn default() -> Self {
        EmbedSpec {
            dim: 32,
            noise_sigma: 0.1,
            seed: 0,
            confusable_pairs: Vec::new(),
            context_offset: 1.0,
        }
    }
}

impl EmbedSpec {
    pub fn to_core(&self) -> SynthEmbedConfig {
        SynthEmbedConfig {
            dim: self.dim,
            noise_sigma: self.noise_sigma,
            seed: self.seed,
            confusable_pairs: self.confusable_pairs.clone(),
            context_offset: self.context_offset,
        }
    }
}

impl Preset {
    pub fn spec(self) -> SynthSpec {
        match self {
            Preset::Planted => SynthSpec {
                num_types: 20,
                train_sentences: 2000,
                dev_sentences: 400,
                zipf_exponent: 1.0,
                max_mentions: 2,
                trigger_avoids_last: false,
            },
            Preset::Confusable => SynthSpec {
                num_types: 10,
                train_sentences: 2000,
                dev_sentences: 400,
                zipf_exponent: 1.0,
                max_mentions: 1,
                trigger_avoids_last: true,
            },
        }
    }

    /// Embedding settings for corpora generated with `seed`.
    pub fn embed_spec(self, spec: &SynthSpec, seed: u64) -> EmbedSpec {
        let confusable_pairs = match self {
            Preset::Planted => Vec::new(),
            Preset::Confusable => {
                let names = synth_type_names(spec.num_types);
                names.chunks_exact(2).map(|p| (p[0].clone(), p[1].clone())).collect()
            }
        };
        EmbedSpec {
            seed: seed.wrapping_add(2),
            confusable_pairs,
            ..EmbedSpec::default()
        }
    }
}

/// Train and dev splits; dev uses `seed + 1`.
pub fn synth_splits(spec: &SynthSpec, seed: u64) -> Result<(Corpus, Corpus)> {
    let base = SynthCorpusConfig {
        num_types: spec.num_types,
        zipf_exponent: spec.zipf_exponent,
        max_mentions: spec.max_mentions,
        trigger_avoids_last: spec.trigger_avoids_last,
        ..SynthCorpusConfig::default()
    };
    let train = synth_corpus(&SynthCorpusConfig {
        sentences: spec.train_sentences,
        seed,
        ..base.clone()
    })?;
    let dev = synth_corpus(&SynthCorpusConfig {
        split_name: "dev".into(),
        id_prefix: "dev".into(),
        sentences: spec.dev_sentences,
        seed: seed.wrapping_add(1),
        ..base
    })?;
    Ok((train, dev))
}

/// A complete synthetic dataset: splits plus embeddings covering both.
pub struct SynthDataset {
    pub train: Corpus,
    pub dev: Corpus,
    pub embeddings: EmbeddingStore,
}

pub fn synth_dataset(preset: Preset, seed: u64) -> Result<SynthDataset> {
    let spec = preset.spec();
    let (train, dev) = synth_splits(&spec, seed)?;
    let embeddings = synth_embed_with(&[&train, &dev], &preset.embed_spec(&spec, seed).to_core())?;
    Ok(SynthDataset { train, dev, embeddings })
}
