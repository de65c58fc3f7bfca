use super::{validate_mentions, EventMention, EventTypeVocabulary, Sentence, NA_INDEX};
use crate::error::{Error, Result};

/// One label per word: the covering mention's type, or `NA`.
pub fn word_labels(sentence: &Sentence, mentions: &[EventMention], vocab: &EventTypeVocabulary) -> Result<Vec<usize>> {
    let mentions = validate_mentions(sentence, mentions.to_vec())?;
    let mut labels = vec![NA_INDEX; sentence.len()];
    for m in &mentions {
        let label = vocab
            .label_of(&m.type_name)
            .ok_or_else(|| Error::UnknownEventType(m.type_name.clone()))?;
        labels[m.start..m.end].fill(label);
    }
    Ok(labels)
}
