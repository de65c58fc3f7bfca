use std::collections::BTreeMap;

use super::{type_frequencies, Corpus, Sentence};

/// Duplicates whole sentences so rare types reach `min_count` mentions.
///
/// Types are processed in vocabulary order. For each deficient type, the
/// sentences that contain it are cycled in ascending id order, and each pick
/// is duplicated unless that sentence already appears `max_factor` times.
/// Copies get ids `"<id>#2"`, `"<id>#3"`, ... and are appended after the
/// originals. Never fails; stops early when the cap is reached.
pub fn upsample(corpus: &Corpus, min_count: usize, max_factor: usize) -> Corpus {
    let freq = type_frequencies(corpus);
    let mut counts: BTreeMap<String, usize> = freq.counts().clone();
    let mut copies = vec![1usize; corpus.len()];
    let mut appended: Vec<usize> = Vec::new();

    for t in corpus.vocab().event_types() {
        if counts[t] >= min_count {
            continue;
        }
        let mut holders: Vec<usize> = (0..corpus.len())
            .filter(|&i| corpus.mentions_at(i).iter().any(|m| &m.type_name == t))
            .collect();
        holders.sort_by(|&a, &b| corpus.sentences()[a].id.cmp(&corpus.sentences()[b].id));
        let mut cursor = 0;
        while counts[t] < min_count {
            let Some(offset) = (0..holders.len()).find(|k| copies[holders[(cursor + k) % holders.len()]] < max_factor)
            else {
                break;
            };
            let pick = holders[(cursor + offset) % holders.len()];
            cursor = (cursor + offset + 1) % holders.len();
            copies[pick] += 1;
            appended.push(pick);
            for m in corpus.mentions_at(pick) {
                *counts.get_mut(&m.type_name).expect("vocab type") += 1;
            }
        }
    }

    if appended.is_empty() {
        return corpus.clone();
    }
    let mut entries = corpus.entries();
    let mut emitted = vec![1usize; corpus.len()];
    for pick in appended {
        emitted[pick] += 1;
        let original = &corpus.sentences()[pick];
        let dup = Sentence {
            id: format!("{}#{}", original.id, emitted[pick]),
            tokens: original.tokens.clone(),
        };
        entries.push((dup, corpus.mentions_at(pick).to_vec()));
    }
    Corpus::new(corpus.split_name(), entries, corpus.vocab().clone()).expect("duplicates preserve invariants")
}
