use std::collections::BTreeMap;

use ctxed_core::corpus::{
    type_frequencies, word_labels, Corpus, EventMention, EventTypeVocabulary, Sentence, NONE,
};
use ctxed_core::eval::{decode_spans, score, ti_score, MacroSet, ScoreOptions};
use proptest::prelude::*;

const TYPES: [&str; 4] = ["A", "B", "C", NONE];
const MAX_LEN: usize = 6;

fn mention() -> impl Strategy<Value = EventMention> {
    (0..MAX_LEN, 1..3usize, 0..TYPES.len())
        .prop_map(|(start, len, t)| EventMention::new(start, (start + len).min(MAX_LEN), TYPES[t]))
}

fn mention_sets() -> impl Strategy<Value = (Vec<Vec<EventMention>>, Vec<Vec<EventMention>>)> {
    (1..5usize).prop_flat_map(|n| {
        let side = || prop::collection::vec(prop::collection::vec(mention(), 0..4), n);
        let gold = side()
            .prop_map(|v| v.into_iter().map(|ms| ms.into_iter().filter(|m| m.type_name != NONE).collect()).collect());
        (side(), gold)
    })
}

/// Counts by enumerating every possible triple instead of matching mention lists.
fn oracle(pred: &[Vec<EventMention>], gold: &[Vec<EventMention>], macro_set: MacroSet) -> (f64, f64, f64, f64) {
    let mut per_type: BTreeMap<&str, (usize, usize, usize)> = BTreeMap::new();
    for (p, g) in pred.iter().zip(gold) {
        for start in 0..MAX_LEN {
            for end in start + 1..=MAX_LEN {
                for t in TYPES.iter().filter(|&&t| t != NONE) {
                    let in_p = p.iter().any(|m| m.start == start && m.end == end && m.type_name == *t);
                    let in_g = g.iter().any(|m| m.start == start && m.end == end && m.type_name == *t);
                    if in_p || in_g {
                        let e = per_type.entry(t).or_default();
                        e.0 += usize::from(in_p && in_g);
                        e.1 += usize::from(in_p);
                        e.2 += usize::from(in_g);
                    }
                }
            }
        }
    }
    let prf = |tp: usize, np: usize, ng: usize| {
        let p = if np == 0 { 0.0 } else { tp as f64 / np as f64 };
        let r = if ng == 0 { 0.0 } else { tp as f64 / ng as f64 };
        let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
        (p, r, f)
    };
    let (tp, np, ng) = per_type.values().fold((0, 0, 0), |a, v| (a.0 + v.0, a.1 + v.1, a.2 + v.2));
    let (mp, mr, mf) = prf(tp, np, ng);
    let included: Vec<_> = per_type
        .values()
        .filter(|v| macro_set == MacroSet::GoldUnionPred || v.2 > 0)
        .collect();
    let macro_f1 = if included.is_empty() {
        0.0
    } else {
        included.iter().map(|v| prf(v.0, v.1, v.2).2).sum::<f64>() / included.len() as f64
    };
    (mp, mr, mf, macro_f1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn score_matches_enumeration_oracle((pred, gold) in mention_sets()) {
        for macro_set in [MacroSet::GoldUnionPred, MacroSet::GoldOnly] {
            let r = score(&pred, &gold, &ScoreOptions { macro_set, ..Default::default() });
            let (p, rc, f, mf) = oracle(&pred, &gold, macro_set);
            prop_assert_eq!((r.micro.precision, r.micro.recall, r.micro.f1, r.macro_avg.f1), (p, rc, f, mf));
        }
        let r = score(&pred, &gold, &ScoreOptions::default());
        let nones = pred.iter().flatten().filter(|m| m.type_name == NONE).count();
        prop_assert_eq!(r.none_count, nones);
    }

    #[test]
    fn trigger_identification_dominates_micro_f1((pred, gold) in mention_sets()) {
        let tc = score(&pred, &gold, &ScoreOptions::default());
        let ti = ti_score(&pred, &gold);
        prop_assert!(ti.micro.f1 >= tc.micro.f1);
        prop_assert!(ti.micro.recall >= tc.micro.recall);
        prop_assert!(ti.micro.precision >= tc.micro.precision);
    }

    #[test]
    fn swapping_pred_and_gold_swaps_micro_precision_and_recall((pred, gold) in mention_sets()) {
        let clean: Vec<Vec<EventMention>> = pred
            .iter()
            .map(|ms| ms.iter().filter(|m| m.type_name != NONE).cloned().collect())
            .collect();
        let a = score(&clean, &gold, &ScoreOptions::default());
        let b = score(&gold, &clean, &ScoreOptions::default());
        prop_assert_eq!(a.micro.precision, b.micro.recall);
        prop_assert_eq!(a.micro.recall, b.micro.precision);
        prop_assert_eq!(a.micro.f1, b.micro.f1);
    }

    #[test]
    fn sentence_order_does_not_matter((pred, gold) in mention_sets(), rot in 0usize..5) {
        let k = rot % pred.len();
        let mut p2 = pred.clone();
        let mut g2 = gold.clone();
        p2.rotate_left(k);
        g2.rotate_left(k);
        let a = score(&pred, &gold, &ScoreOptions::default());
        let b = score(&p2, &g2, &ScoreOptions::default());
        prop_assert_eq!(a.micro, b.micro);
        prop_assert_eq!(a.per_type, b.per_type);
        prop_assert!((a.macro_avg.f1 - b.macro_avg.f1).abs() < 1e-15);
    }

    #[test]
    fn labels_round_trip_when_mentions_are_separated(
        len in 1usize..12,
        picks in prop::collection::vec((0usize..12, 1usize..3, 0usize..3), 0..5),
    ) {
        let vocab = EventTypeVocabulary::new(vec!["A".into(), "B".into(), "C".into()]).unwrap();
        // Greedy placement with at least one word between mentions.
        let mut taken = vec![false; len];
        let mut mentions = Vec::new();
        for (start, width, t) in picks {
            let end = start + width;
            let lo = start.saturating_sub(1);
            let hi = (end + 1).min(len);
            if end <= len && !taken[lo..hi].iter().any(|&x| x) {
                taken[start..end].iter_mut().for_each(|x| *x = true);
                mentions.push(EventMention::new(start, end, ["A", "B", "C"][t]));
            }
        }
        mentions.sort();
        let sentence = Sentence::new("s", (0..len).map(|i| format!("w{i}")).collect()).unwrap();
        let labels = word_labels(&sentence, &mentions, &vocab).unwrap();
        prop_assert_eq!(decode_spans(&labels, &vocab).unwrap(), mentions);
    }

    #[test]
    fn frequencies_sum_to_mention_count(sets in prop::collection::vec(prop::collection::vec((0usize..3, 0usize..3), 0..3), 1..10)) {
        let vocab = EventTypeVocabulary::new(vec!["A".into(), "B".into(), "C".into()]).unwrap();
        let entries: Vec<_> = sets
            .into_iter()
            .enumerate()
            .map(|(i, ms)| {
                let mut mentions: Vec<EventMention> = Vec::new();
                for (slot, t) in ms {
                    if mentions.iter().all(|m| m.start != 2 * slot) {
                        mentions.push(EventMention::new(2 * slot, 2 * slot + 1, ["A", "B", "C"][t]));
                    }
                }
                (Sentence::new(format!("s{i}"), (0..6).map(|k| format!("w{k}")).collect()).unwrap(), mentions)
            })
            .collect();
        let corpus = Corpus::new("train", entries, vocab).unwrap();
        let freq = type_frequencies(&corpus);
        prop_assert_eq!(freq.total(), corpus.mention_count());
        prop_assert_eq!(freq.ordered().len(), 3);
        for w in freq.ordered().windows(2) {
            prop_assert!(freq.count(&w[0]) >= freq.count(&w[1]));
        }
    }
}

#[test]
fn adjacent_same_type_mentions_merge_on_decode() {
    let vocab = EventTypeVocabulary::new(vec!["A".into()]).unwrap();
    let sentence = Sentence::new("s", vec!["x".into(), "y".into()]).unwrap();
    let mentions = vec![EventMention::new(0, 1, "A"), EventMention::new(1, 2, "A")];
    let labels = word_labels(&sentence, &mentions, &vocab).unwrap();
    assert_eq!(labels, vec![1, 1]);
    assert_eq!(decode_spans(&labels, &vocab).unwrap(), vec![EventMention::new(0, 2, "A")]);
}
