use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Corpus;

/// Mention counts per event type with a descending-frequency ordering
/// (ties broken by type name).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyTable {
    counts: BTreeMap<String, usize>,
    order: Vec<String>,
}

impl FrequencyTable {
    pub fn from_counts(counts: BTreeMap<String, usize>) -> Self {
        let mut order: Vec<String> = counts.keys().cloned().collect();
        // BTreeMap keys are already name-sorted, so a stable sort by count keeps the tie rule.
        order.sort_by(|a, b| counts[b].cmp(&counts[a]));
        FrequencyTable { counts, order }
    }

    pub fn count(&self, type_name: &str) -> usize {
        self.counts.get(type_name).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &BTreeMap<String, usize> {
        &self.counts
    }

    /// Types by descending count.
    pub fn ordered(&self) -> &[String] {
        &self.order
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }
}

pub fn type_frequencies(corpus: &Corpus) -> FrequencyTable {
    let mut counts: BTreeMap<String, usize> = corpus
        .vocab()
        .event_types()
        .iter()
        .map(|t| (t.clone(), 0))
        .collect();
    for ms in corpus.all_mentions() {
        for m in ms {
            *counts.entry(m.type_name.clone()).or_default() += 1;
        }
    }
    FrequencyTable::from_counts(counts)
}
