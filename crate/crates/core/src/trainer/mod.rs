//! Supervised training loop, evaluation and checkpoints.

mod checkpoint;
mod evaluate;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, SavedMetrics, CHECKPOINT_VERSION};
pub use evaluate::{evaluate_model, predict_corpus, SentenceBatch};

use crate::corpus::{Corpus, EmbeddingStore, EventTypeVocabulary};
use crate::error::{Error, Result};
use crate::eval::MetricsReport;
use crate::exec::{map_indexed, ExecMode};
use crate::fusion::{FusionVariant, HeadOrder, Model, ModelConfig};
use crate::lora::{apply_lora, LoraConfig};
use crate::nn::{adamw_step, lr_schedule, AdamWConfig, DecayShape, Grads};

/// Dev metric used for model selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectBy {
    #[default]
    MacroF1,
    MicroF1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub variant: FusionVariant,
    pub hidden_dim: usize,
    pub dropout_p: f64,
    pub head_order: HeadOrder,
    pub lr: f64,
    /// Fraction of all updates spent warming up.
    pub warmup: f64,
    pub decay: DecayShape,
    pub weight_decay: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub select_by: SelectBy,
    /// Stop after this many epochs without a dev improvement.
    pub patience: Option<usize>,
    pub lora: LoraConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            variant: FusionVariant::Film,
            hidden_dim: 100,
            dropout_p: 0.2,
            head_order: HeadOrder::default(),
            lr: 3e-3,
            warmup: 0.1,
            decay: DecayShape::Linear,
            weight_decay: 0.01,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            epochs: 30,
            batch_size: 32,
            seed: 42,
            select_by: SelectBy::default(),
            patience: None,
            lora: LoraConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return bad(format!("lr must be finite and non-negative, got {}", self.lr));
        }
        if !(0.0..=1.0).contains(&self.warmup) {
            return bad(format!("warmup must be in [0, 1], got {}", self.warmup));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return bad(format!("weight_decay must be non-negative, got {}", self.weight_decay));
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) || self.adam_eps <= 0.0 {
            return bad("adam betas must be in [0, 1) and eps positive".into());
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        if self.patience == Some(0) {
            return bad("patience must be at least 1 when set".into());
        }
        Ok(())
    }

    pub fn model_config(&self, embed_dim: usize, num_labels: usize) -> ModelConfig {
        ModelConfig {
            variant: self.variant,
            embed_dim,
            hidden_dim: self.hidden_dim,
            num_labels,
            dropout: self.dropout_p,
            head_order: self.head_order,
        }
    }

    pub fn adamw(&self) -> AdamWConfig {
        AdamWConfig {
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            eps: self.adam_eps,
            weight_decay: self.weight_decay,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean token cross-entropy over the training set at the end of the epoch
    /// (eval mode, no dropout).
    pub train_loss: f64,
    /// Mean token cross-entropy accumulated during the epoch's updates
    /// (training mode).
    pub running_loss: f64,
    pub dev_micro_f1: f64,
    pub dev_macro_f1: f64,
}

#[derive(Debug, Clone)]
pub struct TrainRun {
    pub config: TrainConfig,
    pub vocab: EventTypeVocabulary,
    pub history: Vec<EpochRecord>,
    /// 1-based epoch of the selected model.
    pub best_epoch: usize,
    pub best_model: Model,
    pub best_report: MetricsReport,
    /// Model after the final epoch.
    pub last_model: Model,
}

impl TrainRun {
    pub fn best(&self) -> &EpochRecord {
        &self.history[self.best_epoch - 1]
    }
}

/// Mixes a sequence of integers into one RNG seed (splitmix64 finalizer).
pub fn derive_seed(parts: &[u64]) -> u64 {
    let mut h: u64 = 0x9e37_79b9_7f4a_7c15;
    for &p in parts {
        h ^= p.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(h << 6).wrapping_add(h >> 2);
        let mut z = h;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        h = z ^ (z >> 31);
    }
    h
}

/// Builds the initial model for `config` (adapters attached when enabled).
pub fn init_model(config: &TrainConfig, embed_dim: usize, vocab: &EventTypeVocabulary) -> Result<Model> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[config.seed, 0]));
    let mut model = Model::new(config.model_config(embed_dim, vocab.num_labels()), &mut rng)?;
    apply_lora(&mut model, &config.lora, &mut rng)?;
    Ok(model)
}

fn selection_score(select_by: SelectBy, report: &MetricsReport) -> f64 {
    match select_by {
        SelectBy::MacroF1 => report.macro_avg.f1,
        SelectBy::MicroF1 => report.micro.f1,
    }
}

/// Trains a fresh model and keeps the best epoch by the dev metric (ties go
/// to the earliest epoch).
pub fn train(
    config: &TrainConfig,
    train_corpus: &Corpus,
    dev_corpus: &Corpus,
    embeddings: &EmbeddingStore,
    mode: ExecMode,
) -> Result<TrainRun> {
    config.validate()?;
    if train_corpus.vocab() != dev_corpus.vocab() {
        return Err(Error::LabelSpaceMismatch(format!(
            "train has {} event types, dev has {}",
            train_corpus.vocab().len(),
            dev_corpus.vocab().len()
        )));
    }
    if train_corpus.is_empty() {
        return Err(Error::InvalidConfig("training corpus is empty".into()));
    }
    let vocab = train_corpus.vocab().clone();
    let train_data = SentenceBatch::build(train_corpus, embeddings, true)?;
    let dev_data = SentenceBatch::build(dev_corpus, embeddings, false)?;
    let mut model = init_model(config, embeddings.dim(), &vocab)?;
    let adamw = config.adamw();

    let n = train_data.len();
    let steps_per_epoch = n.div_ceil(config.batch_size);
    let total_steps = steps_per_epoch * config.epochs;
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, usize, Model, MetricsReport)> = None;
    let mut update = 0usize;

    for epoch in 1..=config.epochs {
        let mut shuffle_rng = ChaCha8Rng::seed_from_u64(derive_seed(&[config.seed, 1, epoch as u64]));
        order.shuffle(&mut shuffle_rng);
        let (mut loss_sum, mut token_sum) = (0.0, 0usize);
        for (step, batch) in order.chunks(config.batch_size).enumerate() {
            let tokens: usize = batch.iter().map(|&i| train_data.labels[i].len()).sum();
            let scale = 1.0 / tokens as f64;
            let per_sentence = map_indexed(mode, batch, |j, &i| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[config.seed, 2, epoch as u64, step as u64, j as u64]));
                model.loss_and_grads(&train_data.states[i], &train_data.labels[i], scale, &mut Some(&mut rng))
            });
            let mut grads: Option<Grads> = None;
            let mut batch_loss = 0.0;
            for result in per_sentence {
                let (loss, g) = result?;
                batch_loss += loss;
                match grads.as_mut() {
                    Some(acc) => acc.add_assign(&g),
                    None => grads = Some(g),
                }
            }
            let grads = grads.expect("non-empty batch");
            if !batch_loss.is_finite() || !grads.all_finite() {
                return Err(Error::NonFinite(format!(
                    "epoch {epoch}, step {step}: loss {batch_loss}; lower the learning rate (currently {})",
                    config.lr
                )));
            }
            model.params_mut().set_grads(&grads);
            let lr = lr_schedule(update, total_steps, config.lr, config.warmup, config.decay);
            adamw_step(model.params_mut(), lr, &adamw);
            update += 1;
            loss_sum += batch_loss;
            token_sum += tokens;
        }
        let report = evaluate::evaluate_batch(&model, &dev_data, dev_corpus, mode)?;
        history.push(EpochRecord {
            epoch,
            train_loss: evaluate::mean_loss(&model, &train_data, mode)?,
            running_loss: loss_sum / token_sum as f64,
            dev_micro_f1: report.micro.f1,
            dev_macro_f1: report.macro_avg.f1,
        });
        let score = selection_score(config.select_by, &report);
        let improved = best.as_ref().is_none_or(|(s, ..)| score > *s);
        if improved {
            best = Some((score, epoch, model.clone(), report));
        }
        let best_epoch = best.as_ref().map_or(epoch, |b| b.1);
        if config.patience.is_some_and(|p| epoch - best_epoch >= p) {
            break;
        }
    }
    let (_, best_epoch, best_model, best_report) = best.expect("at least one epoch");
    Ok(TrainRun {
        config: config.clone(),
        vocab,
        history,
        best_epoch,
        best_model,
        best_report,
        last_model: model,
    })
}
