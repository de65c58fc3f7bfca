//! Datasets of tokenized sentences with `(start, end, type)` trigger spans,
//! plus the token-embedding stores the models consume.

mod embeddings;
mod freq;
mod io;
mod labels;
mod synth;
mod upsample;
mod vocab;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub use embeddings::EmbeddingStore;
pub use freq::{type_frequencies, FrequencyTable};
pub use io::{load_corpus, parse_corpus, write_corpus, SCHEMA_VERSION};
pub use labels::word_labels;
pub use synth::{synth_corpus, synth_type_names, synth_embed, synth_embed_with, SynthCorpusConfig, SynthEmbedConfig};
pub use upsample::upsample;
pub use vocab::{EventTypeVocabulary, NA, NA_INDEX, NONE};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub id: String,
    pub tokens: Vec<String>,
}

impl Sentence {
    pub fn new(id: impl Into<String>, tokens: Vec<String>) -> Result<Self> {
        let s = Sentence { id: id.into(), tokens };
        s.validate()?;
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    fn validate(&self) -> Result<()> {
        if self.tokens.is_empty() {
            return Err(Error::InvalidSentence {
                sentence: self.id.clone(),
                reason: "no tokens".into(),
            });
        }
        if self.tokens.iter().any(String::is_empty) {
            return Err(Error::InvalidSentence {
                sentence: self.id.clone(),
                reason: "empty token".into(),
            });
        }
        Ok(())
    }
}

/// A trigger span; `end` is exclusive.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EventMention {
    pub start: usize,
    pub end: usize,
    #[serde(rename = "type")]
    pub type_name: String,
}

impl EventMention {
    pub fn new(start: usize, end: usize, type_name: impl Into<String>) -> Self {
        EventMention {
            start,
            end,
            type_name: type_name.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

/// Checks span bounds and rejects overlaps. Returns the mentions sorted by start.
pub(crate) fn validate_mentions(sentence: &Sentence, mut mentions: Vec<EventMention>) -> Result<Vec<EventMention>> {
    for m in &mentions {
        if m.start >= m.end {
            return Err(Error::EmptySpan {
                sentence: sentence.id.clone(),
                start: m.start,
                end: m.end,
            });
        }
        if m.end > sentence.len() {
            return Err(Error::SpanOutOfBounds {
                sentence: sentence.id.clone(),
                start: m.start,
                end: m.end,
                len: sentence.len(),
            });
        }
    }
    mentions.sort();
    for pair in mentions.windows(2) {
        if pair[1].start < pair[0].end {
            return Err(Error::OverlappingSpans {
                sentence: sentence.id.clone(),
                a_start: pair[0].start,
                a_end: pair[0].end,
                b_start: pair[1].start,
                b_end: pair[1].end,
            });
        }
    }
    Ok(mentions)
}

/// One split of a dataset. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    split_name: String,
    sentences: Vec<Sentence>,
    mentions: Vec<Vec<EventMention>>,
    index: HashMap<String, usize>,
    vocab: EventTypeVocabulary,
}

impl Corpus {
    pub fn new(
        split_name: impl Into<String>,
        entries: Vec<(Sentence, Vec<EventMention>)>,
        vocab: EventTypeVocabulary,
    ) -> Result<Self> {
        let mut sentences = Vec::with_capacity(entries.len());
        let mut mentions = Vec::with_capacity(entries.len());
        let mut index = HashMap::with_capacity(entries.len());
        for (sentence, ms) in entries {
            sentence.validate()?;
            if index.insert(sentence.id.clone(), sentences.len()).is_some() {
                return Err(Error::DuplicateSentence(sentence.id));
            }
            for m in &ms {
                if !vocab.contains(&m.type_name) {
                    return Err(Error::UnknownEventType(m.type_name.clone()));
                }
            }
            let ms = validate_mentions(&sentence, ms)?;
            sentences.push(sentence);
            mentions.push(ms);
        }
        Ok(Corpus {
            split_name: split_name.into(),
            sentences,
            mentions,
            index,
            vocab,
        })
    }

    pub fn split_name(&self) -> &str {
        &self.split_name
    }

    pub fn vocab(&self) -> &EventTypeVocabulary {
        &self.vocab
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// Mentions of the sentence at position `i`, sorted by start.
    pub fn mentions_at(&self, i: usize) -> &[EventMention] {
        &self.mentions[i]
    }

    pub fn mentions(&self, sentence_id: &str) -> Option<&[EventMention]> {
        self.index.get(sentence_id).map(|&i| self.mentions[i].as_slice())
    }

    pub fn all_mentions(&self) -> &[Vec<EventMention>] {
        &self.mentions
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Sentence, &[EventMention])> {
        self.sentences.iter().zip(self.mentions.iter().map(Vec::as_slice))
    }

    pub fn mention_count(&self) -> usize {
        self.mentions.iter().map(Vec::len).sum()
    }

    /// Re-labels the corpus under a (typically wider) vocabulary.
    pub fn with_vocab(self, vocab: EventTypeVocabulary) -> Result<Self> {
        let entries = self.sentences.into_iter().zip(self.mentions).collect();
        Corpus::new(self.split_name, entries, vocab)
    }

    pub(crate) fn entries(&self) -> Vec<(Sentence, Vec<EventMention>)> {
        self.sentences.iter().cloned().zip(self.mentions.iter().cloned()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn sentence_invariants() {
        assert!(Sentence::new("a", vec![]).is_err());
        assert!(Sentence::new("a", toks(&["x", ""])).is_err());
        assert!(Sentence::new("a", toks(&["x"])).is_ok());
    }

    #[test]
    fn corpus_rejects_bad_spans() {
        let vocab = EventTypeVocabulary::new(vec!["A".into()]).unwrap();
        let s = Sentence::new("s", toks(&["a", "b", "c"])).unwrap();
        let build = |ms: Vec<EventMention>| Corpus::new("t", vec![(s.clone(), ms)], vocab.clone());
        assert!(matches!(build(vec![EventMention::new(2, 2, "A")]), Err(Error::EmptySpan { .. })));
        assert!(matches!(build(vec![EventMention::new(2, 4, "A")]), Err(Error::SpanOutOfBounds { .. })));
        assert!(matches!(
            build(vec![EventMention::new(0, 2, "A"), EventMention::new(1, 3, "A")]),
            Err(Error::OverlappingSpans { .. })
        ));
        assert!(matches!(build(vec![EventMention::new(0, 1, "B")]), Err(Error::UnknownEventType(_))));
        assert!(build(vec![EventMention::new(0, 1, "A"), EventMention::new(1, 3, "A")]).is_ok());
    }

    #[test]
    fn duplicate_ids_rejected() {
        let vocab = EventTypeVocabulary::new(vec![]).unwrap();
        let s = Sentence::new("s", toks(&["a"])).unwrap();
        assert!(matches!(
            Corpus::new("t", vec![(s.clone(), vec![]), (s, vec![])], vocab),
            Err(Error::DuplicateSentence(_))
        ));
    }
}
