use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use ctxed_core::corpus::{Corpus, EventMention, Sentence};

use crate::error::PromptError;

/// How the shot percentage is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShotMode {
    /// `min(c_t, max(min_count, round(p·c_t)))` exemplars for each type.
    #[default]
    PerType,
    /// `round(p·N)` mentions drawn from the whole corpus, then each type topped
    /// up to `min(min_count, c_t)`.
    Global,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotConfig {
    pub shot_percent: f64,
    pub min_count: usize,
    pub temperature: f64,
    pub seed: u64,
    pub mode: ShotMode,
}

impl Default for ShotConfig {
    fn default() -> Self {
        ShotConfig {
            shot_percent: 0.03,
            min_count: 3,
            temperature: 0.4,
            seed: 0,
            mode: ShotMode::PerType,
        }
    }
}

impl ShotConfig {
    pub fn zero_shot(temperature: f64) -> Self {
        ShotConfig {
            shot_percent: 0.0,
            min_count: 0,
            temperature,
            ..Default::default()
        }
    }

    pub fn is_zero_shot(&self) -> bool {
        self.shot_percent == 0.0 && self.min_count == 0
    }

    pub fn validate(&self) -> Result<(), PromptError> {
        if !(self.shot_percent.is_finite() && (0.0..=1.0).contains(&self.shot_percent)) {
            return Err(PromptError::InvalidShotConfig(format!(
                "shot_percent must be in [0, 1], got {}",
                self.shot_percent
            )));
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(PromptError::InvalidShotConfig(format!(
                "temperature must be non-negative, got {}",
                self.temperature
            )));
        }
        Ok(())
    }

    /// Exemplars for a type with `available` mentions under [`ShotMode::PerType`].
    pub fn per_type_count(&self, available: usize) -> usize {
        let scaled = (self.shot_percent * available as f64).round() as usize;
        available.min(self.min_count.max(scaled))
    }
}

/// A training sentence with one of its mentions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exemplar {
    pub sentence: Sentence,
    pub mention: EventMention,
}

impl Exemplar {
    pub fn trigger_text(&self) -> String {
        self.sentence.tokens[self.mention.start..self.mention.end].join(" ")
    }
}

/// Seeded exemplar selection without replacement, grouped by event type in
/// vocabulary order and in corpus order within a type.
pub fn sample_shots(train: &Corpus, cfg: &ShotConfig) -> Result<Vec<Exemplar>, PromptError> {
    cfg.validate()?;
    // (sentence index, mention) per type, in corpus order.
    let types = train.vocab().event_types();
    let mut by_type: Vec<Vec<(usize, &EventMention)>> = vec![Vec::new(); types.len()];
    for (i, mentions) in train.all_mentions().iter().enumerate() {
        for m in mentions {
            let label = train.vocab().label_of(&m.type_name).expect("corpus types are in its vocabulary");
            by_type[label - 1].push((i, m));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut chosen: Vec<Vec<usize>> = vec![Vec::new(); types.len()];
    match cfg.mode {
        ShotMode::PerType => {
            for (t, pool) in by_type.iter().enumerate() {
                let n = cfg.per_type_count(pool.len());
                chosen[t] = sample(&mut rng, pool.len(), n).into_vec();
            }
        }
        ShotMode::Global => {
            let flat: Vec<(usize, usize)> = by_type
                .iter()
                .enumerate()
                .flat_map(|(t, pool)| (0..pool.len()).map(move |k| (t, k)))
                .collect();
            let n = ((cfg.shot_percent * flat.len() as f64).round() as usize).min(flat.len());
            for idx in sample(&mut rng, flat.len(), n) {
                let (t, k) = flat[idx];
                chosen[t].push(k);
            }
            for (t, pool) in by_type.iter().enumerate() {
                let floor = cfg.min_count.min(pool.len());
                if chosen[t].len() < floor {
                    let rest: Vec<usize> = (0..pool.len()).filter(|k| !chosen[t].contains(k)).collect();
                    let extra = sample(&mut rng, rest.len(), floor - chosen[t].len());
                    chosen[t].extend(extra.into_iter().map(|j| rest[j]));
                }
            }
        }
    }
    let mut out = Vec::new();
    for (t, mut picks) in chosen.into_iter().enumerate() {
        picks.sort_unstable();
        for k in picks {
            let (i, m) = by_type[t][k];
            out.push(Exemplar {
                sentence: train.sentences()[i].clone(),
                mention: m.clone(),
            });
        }
    }
    Ok(out)
}
