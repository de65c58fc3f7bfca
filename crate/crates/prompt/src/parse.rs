use serde::{Deserialize, Serialize};
use serde_json::Value;

use ctxed_core::corpus::{EventTypeVocabulary, NONE};

/// A post-validated model prediction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionEntry {
    pub trigger: String,
    pub e_start: usize,
    /// A vocabulary type or `NONE`.
    pub eventtype: String,
}

impl PredictionEntry {
    pub fn word_count(&self) -> usize {
        self.trigger.split_whitespace().count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedEntry {
    pub raw: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ParseOutcome {
    pub entries: Vec<PredictionEntry>,
    pub rejected: Vec<RejectedEntry>,
    /// Set when no JSON array could be found.
    pub diagnostic: Option<String>,
}

impl ParseOutcome {
    pub fn none_count(&self) -> usize {
        self.entries.iter().filter(|e| e.eventtype == NONE).count()
    }
}

/// The first `[` at which a complete JSON array parses.
fn first_array(text: &str) -> Option<Vec<Value>> {
    for (pos, _) in text.match_indices('[') {
        let mut stream = serde_json::Deserializer::from_str(&text[pos..]).into_iter::<Value>();
        if let Some(Ok(Value::Array(items))) = stream.next() {
            return Some(items);
        }
    }
    None
}

fn validate(item: &Value, vocab: &EventTypeVocabulary, tokens: &[String]) -> Result<PredictionEntry, String> {
    let obj = item.as_object().ok_or("entry is not an object")?;
    let trigger = obj
        .get("trigger")
        .ok_or("missing field trigger")?
        .as_str()
        .ok_or("trigger is not a string")?;
    let e_start = obj.get("e_start").ok_or("missing field e_start")?;
    let e_start = e_start
        .as_u64()
        .ok_or("e_start is not a non-negative integer")?;
    let eventtype = obj
        .get("eventtype")
        .ok_or("missing field eventtype")?
        .as_str()
        .ok_or("eventtype is not a string")?;
    let words: Vec<&str> = trigger.split_whitespace().collect();
    if words.is_empty() || words.len() > 2 {
        return Err(format!("trigger has {} words (expected 1 or 2)", words.len()));
    }
    let start = usize::try_from(e_start).map_err(|_| "e_start out of range".to_string())?;
    let end = start.checked_add(words.len()).filter(|&e| e <= tokens.len());
    let Some(end) = end else {
        return Err(format!("e_start {start} out of bounds for {} tokens", tokens.len()));
    };
    if tokens[start..end].iter().zip(&words).any(|(t, w)| t != w) {
        return Err(format!("trigger {trigger:?} does not match tokens at {start}"));
    }
    let eventtype = if vocab.contains(eventtype) { eventtype } else { NONE };
    Ok(PredictionEntry {
        trigger: words.join(" "),
        e_start: start,
        eventtype: eventtype.to_string(),
    })
}

/// Extracts the first JSON array in `text` and validates each entry against
/// the sentence tokens and the vocabulary. Types outside the vocabulary become
/// `NONE`; malformed entries are rejected with a reason. Never fails.
pub fn parse_llm_output(text: &str, vocab: &EventTypeVocabulary, tokens: &[String]) -> ParseOutcome {
    let Some(items) = first_array(text) else {
        return ParseOutcome {
            diagnostic: Some("no JSON array found in response".into()),
            ..Default::default()
        };
    };
    let mut out = ParseOutcome::default();
    for item in &items {
        match validate(item, vocab, tokens) {
            Ok(entry) => out.entries.push(entry),
            Err(reason) => out.rejected.push(RejectedEntry {
                raw: item.to_string(),
                reason,
            }),
        }
    }
    out
}
