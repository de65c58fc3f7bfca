use ctxed_core::corpus::{Corpus, EventMention};
use ctxed_core::eval::{score, MetricsReport, ScoreOptions};

use crate::parse::{parse_llm_output, ParseOutcome, PredictionEntry};

#[derive(Debug, Clone, PartialEq)]
pub struct PromptScore {
    pub report: MetricsReport,
    pub rejected: usize,
    /// Responses with no parseable JSON array.
    pub unparsed: usize,
}

/// `(e_start, e_start + words, eventtype)` for each entry, `NONE` included.
pub fn entries_to_mentions(entries: &[PredictionEntry]) -> Vec<EventMention> {
    entries
        .iter()
        .map(|e| EventMention::new(e.e_start, e.e_start + e.word_count(), e.eventtype.clone()))
        .collect()
}

/// Scores parsed responses (aligned with the corpus sentences) against gold.
/// `NONE` entries are excluded from scoring and reported in `none_count`.
pub fn prompt_score(outcomes: &[ParseOutcome], gold: &Corpus) -> PromptScore {
    let pred: Vec<Vec<EventMention>> = outcomes.iter().map(|o| entries_to_mentions(&o.entries)).collect();
    PromptScore {
        report: score(&pred, gold.all_mentions(), &ScoreOptions::default()),
        rejected: outcomes.iter().map(|o| o.rejected.len()).sum(),
        unparsed: outcomes.iter().filter(|o| o.diagnostic.is_some()).count(),
    }
}

/// Parses one raw response per gold sentence against the gold vocabulary, then scores.
pub fn score_responses(responses: &[String], gold: &Corpus) -> (Vec<ParseOutcome>, PromptScore) {
    let outcomes: Vec<ParseOutcome> = gold
        .sentences()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let text = responses.get(i).map(String::as_str).unwrap_or("");
            parse_llm_output(text, gold.vocab(), &s.tokens)
        })
        .collect();
    let scored = prompt_score(&outcomes, gold);
    (outcomes, scored)
}
