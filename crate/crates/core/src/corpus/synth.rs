//! Synthetic corpora and planted-signal embeddings.
//!
//! Each label gets a centroid on the unit sphere and every word is embedded as
//! its gold label's centroid plus isotropic gaussian noise, so a token-level
//! classifier can recover the labels. Optionally, pairs of event types share a
//! token centroid and differ only by an offset added to the *other* words of
//! their sentence, which only a context-aware model can exploit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{word_labels, Corpus, EmbeddingStore, EventMention, EventTypeVocabulary, Sentence, NA_INDEX};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpusConfig {
    pub split_name: String,
    pub id_prefix: String,
    pub num_types: usize,
    pub sentences: usize,
    /// Type `k` (1-based frequency rank) is drawn with weight `k^-s`.
    pub zipf_exponent: f64,
    pub min_len: usize,
    pub max_len: usize,
    pub max_mentions: usize,
    pub two_word_prob: f64,
    /// Fraction of sentences without any trigger.
    pub empty_prob: f64,
    /// Keep triggers off the final word so the last token is always context.
    pub trigger_avoids_last: bool,
    pub seed: u64,
}

impl Default for SynthCorpusConfig {
    fn default() -> Self {
        SynthCorpusConfig {
            split_name: "train".into(),
            id_prefix: "train".into(),
            num_types: 20,
            sentences: 2000,
            zipf_exponent: 1.0,
            min_len: 6,
            max_len: 16,
            max_mentions: 2,
            two_word_prob: 0.2,
            empty_prob: 0.1,
            trigger_avoids_last: false,
            seed: 0,
        }
    }
}

pub fn synth_type_names(n: usize) -> Vec<String> {
    (0..n).map(|k| format!("Event{k:02}")).collect()
}

/// Generates sentences whose mentions are separated by at least one `NA` word.
pub fn synth_corpus(cfg: &SynthCorpusConfig) -> Result<Corpus> {
    if cfg.min_len < 2 || cfg.max_len < cfg.min_len {
        return Err(Error::InvalidConfig("need 2 <= min_len <= max_len".into()));
    }
    let types = synth_type_names(cfg.num_types);
    let vocab = EventTypeVocabulary::new(types.clone())?;
    let weights: Vec<f64> = (1..=cfg.num_types).map(|k| (k as f64).powf(-cfg.zipf_exponent)).collect();
    let total: f64 = weights.iter().sum();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut entries = Vec::with_capacity(cfg.sentences);
    for i in 0..cfg.sentences {
        let len = rng.random_range(cfg.min_len..=cfg.max_len);
        let mut tokens: Vec<String> = (0..len).map(|_| format!("w{}", rng.random_range(0..1000))).collect();
        let mut mentions: Vec<EventMention> = Vec::new();
        let wanted = if cfg.num_types == 0 || rng.random::<f64>() < cfg.empty_prob {
            0
        } else {
            rng.random_range(1..=cfg.max_mentions.max(1))
        };
        let usable = if cfg.trigger_avoids_last { len - 1 } else { len };
        for _ in 0..wanted {
            let mut u = rng.random::<f64>() * total;
            let mut k = 0;
            while k + 1 < weights.len() && u >= weights[k] {
                u -= weights[k];
                k += 1;
            }
            let span = if rng.random::<f64>() < cfg.two_word_prob { 2 } else { 1 };
            // a few placement attempts; give up silently if the sentence is crowded
            for _ in 0..8 {
                if usable < span {
                    break;
                }
                let start = rng.random_range(0..=usable - span);
                let end = start + span;
                let clear = mentions.iter().all(|m| end < m.start || start > m.end);
                if clear {
                    for (j, tok) in tokens[start..end].iter_mut().enumerate() {
                        *tok = format!("{}_{}_{j}", types[k].to_lowercase(), rng.random_range(0..50));
                    }
                    mentions.push(EventMention::new(start, end, types[k].clone()));
                    break;
                }
            }
        }
        let sentence = Sentence::new(format!("{}-{i:05}", cfg.id_prefix), tokens)?;
        entries.push((sentence, mentions));
    }
    Corpus::new(cfg.split_name.clone(), entries, vocab)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthEmbedConfig {
    pub dim: usize,
    pub noise_sigma: f64,
    pub seed: u64,
    /// `(a, b)`: `b` reuses `a`'s token centroid; sentences holding `b` shift
    /// their non-trigger words by `+offset`, sentences holding `a` by `-offset`.
    pub confusable_pairs: Vec<(String, String)>,
    /// Length of each pair's offset vector.
    pub context_offset: f64,
}

impl SynthEmbedConfig {
    pub fn new(dim: usize, noise_sigma: f64, seed: u64) -> Self {
        SynthEmbedConfig {
            dim,
            noise_sigma,
            seed,
            confusable_pairs: Vec::new(),
            context_offset: 1.0,
        }
    }
}

pub fn synth_embed(corpora: &[&Corpus], dim: usize, noise_sigma: f64, seed: u64) -> Result<EmbeddingStore> {
    synth_embed_with(corpora, &SynthEmbedConfig::new(dim, noise_sigma, seed))
}

/// Embeds every sentence of every given corpus (which must share one vocabulary).
pub fn synth_embed_with(corpora: &[&Corpus], cfg: &SynthEmbedConfig) -> Result<EmbeddingStore> {
    if cfg.dim < 2 {
        return Err(Error::InvalidConfig("synthetic embeddings need dim >= 2".into()));
    }
    if cfg.noise_sigma < 0.0 || !cfg.noise_sigma.is_finite() {
        return Err(Error::InvalidConfig("noise_sigma must be finite and non-negative".into()));
    }
    let Some(first) = corpora.first() else {
        return EmbeddingStore::new(cfg.dim);
    };
    let vocab = first.vocab();
    if corpora.iter().any(|c| c.vocab() != vocab) {
        return Err(Error::LabelSpaceMismatch("corpora passed to synth_embed disagree on vocabulary".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut centroids: Vec<Vec<f64>> = (0..vocab.num_labels()).map(|_| unit_vector(&mut rng, cfg.dim)).collect();
    // (label a, label b, offset)
    let mut pairs = Vec::with_capacity(cfg.confusable_pairs.len());
    for (a, b) in &cfg.confusable_pairs {
        let la = vocab.label_of(a).ok_or_else(|| Error::UnknownEventType(a.clone()))?;
        let lb = vocab.label_of(b).ok_or_else(|| Error::UnknownEventType(b.clone()))?;
        centroids[lb] = centroids[la].clone();
        let mut offset = unit_vector(&mut rng, cfg.dim);
        offset.iter_mut().for_each(|v| *v *= cfg.context_offset);
        pairs.push((la, lb, offset));
    }

    let mut store = EmbeddingStore::new(cfg.dim)?;
    for corpus in corpora {
        for (sentence, mentions) in corpus.iter() {
            let labels = word_labels(sentence, mentions, vocab)?;
            let mut shift = vec![0.0; cfg.dim];
            for (la, lb, offset) in &pairs {
                let sign = if labels.contains(lb) {
                    1.0
                } else if labels.contains(la) {
                    -1.0
                } else {
                    0.0
                };
                for (s, o) in shift.iter_mut().zip(offset) {
                    *s += sign * o;
                }
            }
            let mut data = Vec::with_capacity(labels.len() * cfg.dim);
            for &label in &labels {
                let centroid = &centroids[label];
                for d in 0..cfg.dim {
                    let mut v = centroid[d];
                    if label == NA_INDEX {
                        v += shift[d];
                    }
                    if cfg.noise_sigma > 0.0 {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        v += cfg.noise_sigma * z;
                    }
                    data.push(v as f32);
                }
            }
            store.insert(sentence.id.clone(), data)?;
        }
    }
    Ok(store)
}

fn unit_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}
