use crate::corpus::{word_labels, Corpus, EmbeddingStore, EventMention};
use crate::error::{Error, Result};
use crate::eval::{decode_spans, score, MetricsReport, ScoreOptions};
use crate::exec::{map_indexed, ExecMode};
use crate::fusion::Model;
use crate::nn::{softmax_cross_entropy_sum, Tensor};

/// Token-state matrices (and optionally gold labels) for every sentence of a corpus.
#[derive(Debug, Clone)]
pub struct SentenceBatch {
    pub states: Vec<Tensor>,
    pub labels: Vec<Vec<usize>>,
}

impl SentenceBatch {
    pub fn build(corpus: &Corpus, embeddings: &EmbeddingStore, with_labels: bool) -> Result<Self> {
        embeddings.check_covers(corpus)?;
        let mut states = Vec::with_capacity(corpus.len());
        let mut labels = Vec::new();
        for (sentence, mentions) in corpus.iter() {
            states.push(embeddings.matrix(&sentence.id)?);
            if with_labels {
                labels.push(word_labels(sentence, mentions, corpus.vocab())?);
            }
        }
        Ok(SentenceBatch { states, labels })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

pub(crate) fn predict_batch(model: &Model, data: &SentenceBatch, corpus: &Corpus, mode: ExecMode) -> Result<Vec<Vec<EventMention>>> {
    if model.config().num_labels != corpus.vocab().num_labels() {
        return Err(Error::LabelSpaceMismatch(format!(
            "model has {} labels, corpus vocabulary has {}",
            model.config().num_labels,
            corpus.vocab().num_labels()
        )));
    }
    map_indexed(mode, &data.states, |_, h| {
        let labels = model.predict_labels(h)?;
        decode_spans(&labels, corpus.vocab())
    })
    .into_iter()
    .collect()
}

pub(crate) fn evaluate_batch(model: &Model, data: &SentenceBatch, corpus: &Corpus, mode: ExecMode) -> Result<MetricsReport> {
    let pred = predict_batch(model, data, corpus, mode)?;
    Ok(score(&pred, corpus.all_mentions(), &ScoreOptions::default()))
}

/// Eval-mode predicted mentions for every sentence, in corpus order.
pub fn predict_corpus(model: &Model, corpus: &Corpus, embeddings: &EmbeddingStore, mode: ExecMode) -> Result<Vec<Vec<EventMention>>> {
    let data = SentenceBatch::build(corpus, embeddings, false)?;
    predict_batch(model, &data, corpus, mode)
}

/// Predicts every sentence, decodes spans and scores them against the gold mentions.
pub fn evaluate_model(model: &Model, corpus: &Corpus, embeddings: &EmbeddingStore, mode: ExecMode) -> Result<MetricsReport> {
    let pred = predict_corpus(model, corpus, embeddings, mode)?;
    Ok(score(&pred, corpus.all_mentions(), &ScoreOptions::default()))
}

/// Eval-mode mean token cross-entropy over a labelled batch.
pub(crate) fn mean_loss(model: &Model, data: &SentenceBatch, mode: ExecMode) -> Result<f64> {
    let sums = map_indexed(mode, &data.states, |i, h| {
        let logits = model.logits(h)?;
        Ok::<_, Error>(softmax_cross_entropy_sum(&logits, &data.labels[i], 0.0)?.0)
    });
    let mut total = 0.0;
    for s in sums {
        total += s?;
    }
    let tokens: usize = data.labels.iter().map(Vec::len).sum();
    Ok(total / tokens as f64)
}
