use crate::corpus::{EventMention, EventTypeVocabulary, NA_INDEX};
use crate::error::{Error, Result};

/// Turns per-word labels into mentions: each maximal run of one identical
/// non-`NA` label becomes a span. `NA` and label changes both end a run.
pub fn decode_spans(labels: &[usize], vocab: &EventTypeVocabulary) -> Result<Vec<EventMention>> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < labels.len() {
        let label = labels[i];
        let mut j = i + 1;
        while j < labels.len() && labels[j] == label {
            j += 1;
        }
        if label != NA_INDEX {
            let name = vocab.name_of(label).ok_or(Error::LabelOutOfRange {
                label,
                classes: vocab.num_labels(),
            })?;
            out.push(EventMention::new(i, j, name));
        }
        i = j;
    }
    Ok(out)
}
