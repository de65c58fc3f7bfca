use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{TrainConfig, TrainRun};
use crate::corpus::EventTypeVocabulary;
use crate::error::{Error, Result};
use crate::fusion::{Model, ModelConfig};
use crate::lora::{apply_lora, LoraConfig};

const MAGIC: &[u8; 4] = b"CKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SavedMetrics {
    pub epoch: usize,
    pub micro_f1: f64,
    pub macro_f1: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ParamEntry {
    name: String,
    shape: Vec<usize>,
    trainable: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    model: ModelConfig,
    lora: Option<LoraConfig>,
    vocab: EventTypeVocabulary,
    train_config: Option<TrainConfig>,
    dev: Option<SavedMetrics>,
    params: Vec<ParamEntry>,
}

/// A model with the vocabulary it predicts over.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub model: Model,
    pub vocab: EventTypeVocabulary,
    pub train_config: Option<TrainConfig>,
    pub dev: Option<SavedMetrics>,
}

impl Checkpoint {
    pub fn from_run(run: &TrainRun) -> Checkpoint {
        let best = run.best();
        Checkpoint {
            model: run.best_model.clone(),
            vocab: run.vocab.clone(),
            train_config: Some(run.config.clone()),
            dev: Some(SavedMetrics {
                epoch: best.epoch,
                micro_f1: best.dev_micro_f1,
                macro_f1: best.dev_macro_f1,
            }),
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let ps = self.model.params();
        let header = Header {
            model: self.model.config().clone(),
            lora: self.model.lora().cloned(),
            vocab: self.vocab.clone(),
            train_config: self.train_config.clone(),
            dev: self.dev,
            params: ps
                .iter()
                .map(|(_, name, p)| ParamEntry {
                    name: name.to_string(),
                    shape: p.value.shape().to_vec(),
                    trainable: p.trainable,
                })
                .collect(),
        };
        let json = serde_json::to_vec(&header)?;
        let mut out = Vec::with_capacity(12 + json.len() + 8 * ps.counts().0);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u32).to_le_bytes());
        out.extend_from_slice(&json);
        for (_, _, p) in ps.iter() {
            for v in p.value.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Checkpoint> {
        if bytes.len() < 12 {
            return Err(Error::Truncated(format!("checkpoint has {} bytes", bytes.len())));
        }
        if &bytes[..4] != MAGIC {
            return Err(Error::BadMagic {
                expected: String::from_utf8_lossy(MAGIC).into_owned(),
                found: String::from_utf8_lossy(&bytes[..4]).into_owned(),
            });
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
        if version != CHECKPOINT_VERSION {
            return Err(Error::VersionMismatch {
                expected: CHECKPOINT_VERSION,
                found: version,
            });
        }
        let header_len = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
        let header_end = 12 + header_len;
        if bytes.len() < header_end {
            return Err(Error::Truncated("checkpoint header".into()));
        }
        let header: Header = serde_json::from_slice(&bytes[12..header_end])
            .map_err(|e| Error::CorruptedCheckpoint(format!("header: {e}")))?;
        if header.model.num_labels != header.vocab.num_labels() {
            return Err(Error::LabelSpaceMismatch(format!(
                "model has {} labels, stored vocabulary has {}",
                header.model.num_labels,
                header.vocab.num_labels()
            )));
        }
        let scalars: usize = header.params.iter().map(|p| p.shape.iter().product::<usize>()).sum();
        let payload = &bytes[header_end..];
        if payload.len() < scalars * 8 {
            return Err(Error::Truncated(format!(
                "checkpoint payload has {} bytes, expected {}",
                payload.len(),
                scalars * 8
            )));
        }
        if payload.len() > scalars * 8 {
            return Err(Error::CorruptedCheckpoint("trailing bytes after payload".into()));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut model = Model::new(header.model.clone(), &mut rng)?;
        if let Some(lora) = &header.lora {
            apply_lora(&mut model, lora, &mut rng)?;
        }
        let names = model.params().names();
        if names.len() != header.params.len() {
            return Err(Error::CorruptedCheckpoint(format!(
                "{} stored tensors, architecture has {}",
                header.params.len(),
                names.len()
            )));
        }
        let mut offset = 0;
        for (entry, name) in header.params.iter().zip(&names) {
            let p = model.params_mut().by_name_mut(name).expect("listed name");
            if &entry.name != name || entry.shape != p.value.shape() {
                return Err(Error::CorruptedCheckpoint(format!(
                    "tensor {} {:?} does not match architecture tensor {name} {:?}",
                    entry.name,
                    entry.shape,
                    p.value.shape()
                )));
            }
            for v in p.value.data_mut() {
                *v = f64::from_le_bytes(payload[offset..offset + 8].try_into().expect("8 bytes"));
                offset += 8;
            }
            p.trainable = entry.trainable;
        }
        if !model.params().iter().all(|(_, _, p)| p.value.all_finite()) {
            return Err(Error::CorruptedCheckpoint("non-finite parameter values".into()));
        }
        Ok(Checkpoint {
            model,
            vocab: header.vocab,
            train_config: header.train_config,
            dev: header.dev,
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Checkpoint> {
        Checkpoint::from_bytes(&std::fs::read(path)?)
    }

    /// Fails with a label-space mismatch unless the checkpoint predicts over `vocab`.
    pub fn check_vocab(&self, vocab: &EventTypeVocabulary) -> Result<()> {
        if &self.vocab != vocab {
            return Err(Error::LabelSpaceMismatch(format!(
                "checkpoint has {} labels {:?}, data has {} labels {:?}",
                self.vocab.num_labels(),
                self.vocab.event_types(),
                vocab.num_labels(),
                vocab.event_types()
            )));
        }
        Ok(())
    }
}

/// Writes the best model of `run` to `path`.
pub fn save_checkpoint(run: &TrainRun, path: impl AsRef<Path>) -> Result<()> {
    Checkpoint::from_run(run).write(path)
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    Checkpoint::read(path)
}
