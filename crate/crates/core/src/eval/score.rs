use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::{EventMention, NONE};

/// Label used for trigger identification scoring, where types are erased.
pub const TRIGGER: &str = "trigger";

/// Which types the macro average runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MacroSet {
    #[default]
    GoldUnionPred,
    GoldOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ScoreOptions {
    pub macro_set: MacroSet,
    /// Score `NONE` predictions as ordinary (always wrong) mentions instead of
    /// dropping them.
    pub retain_none: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    /// 0/0 is taken as 0 for every ratio.
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Prf {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        Prf {
            precision,
            recall,
            f1: f1(precision, recall),
        }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeScore {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub gold: usize,
    pub pred: usize,
    #[serde(flatten)]
    pub prf: Prf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_type: BTreeMap<String, TypeScore>,
    pub micro: Prf,
    #[serde(rename = "macro")]
    pub macro_avg: Prf,
    /// Types averaged by `macro_avg`, sorted by name.
    pub macro_types: Vec<String>,
    pub total_gold: usize,
    pub total_pred: usize,
    /// `NONE` predictions dropped before scoring.
    pub none_count: usize,
    pub options: ScoreOptions,
}

impl MetricsReport {
    pub fn f1_of(&self, type_name: &str) -> f64 {
        self.per_type.get(type_name).map_or(0.0, |s| s.prf.f1)
    }

    /// Types with at least one gold mention, sorted by name.
    pub fn gold_types(&self) -> Vec<String> {
        self.per_type
            .iter()
            .filter(|(_, s)| s.gold > 0)
            .map(|(t, _)| t.clone())
            .collect()
    }

    /// Aligned-column text rendering.
    pub fn to_table(&self) -> String {
        let width = self.per_type.keys().map(String::len).max().unwrap_or(4).max(8);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}  {:>6} {:>6} {:>6}  {:>7} {:>7} {:>7}",
            "type", "tp", "fp", "fn", "P", "R", "F1"
        );
        for (name, s) in &self.per_type {
            let _ = writeln!(
                out,
                "{:<width$}  {:>6} {:>6} {:>6}  {:>7.4} {:>7.4} {:>7.4}",
                name, s.tp, s.fp, s.fn_, s.prf.precision, s.prf.recall, s.prf.f1
            );
        }
        for (label, prf) in [("micro", self.micro), ("macro", self.macro_avg)] {
            let _ = writeln!(
                out,
                "{:<width$}  {:>6} {:>6} {:>6}  {:>7.4} {:>7.4} {:>7.4}",
                label, "", "", "", prf.precision, prf.recall, prf.f1
            );
        }
        let _ = writeln!(
            out,
            "gold={} pred={} none={} macro_types={}",
            self.total_gold,
            self.total_pred,
            self.none_count,
            self.macro_types.len()
        );
        out
    }
}

/// Exact-match scoring: a prediction counts only if `(start, end, type)` all
/// equal a gold triple in the same sentence. Sentences are aligned by index;
/// duplicate triples within one sentence count once.
pub fn score(pred: &[Vec<EventMention>], gold: &[Vec<EventMention>], opts: &ScoreOptions) -> MetricsReport {
    let n = pred.len().max(gold.len());
    let empty: Vec<EventMention> = Vec::new();
    let mut counts: BTreeMap<String, (usize, usize, usize)> = BTreeMap::new(); // (tp, pred, gold)
    let mut none_count = 0;
    for i in 0..n {
        let p_raw = pred.get(i).unwrap_or(&empty);
        let g_raw = gold.get(i).unwrap_or(&empty);
        let mut p: BTreeSet<&EventMention> = BTreeSet::new();
        for m in p_raw {
            if m.type_name == NONE && !opts.retain_none {
                none_count += 1;
            } else {
                p.insert(m);
            }
        }
        let g: BTreeSet<&EventMention> = g_raw.iter().collect();
        for m in &p {
            let e = counts.entry(m.type_name.clone()).or_default();
            e.1 += 1;
            if g.contains(m) {
                e.0 += 1;
            }
        }
        for m in &g {
            counts.entry(m.type_name.clone()).or_default().2 += 1;
        }
    }

    let mut per_type = BTreeMap::new();
    let (mut tp_all, mut pred_all, mut gold_all) = (0, 0, 0);
    for (name, (tp, np, ng)) in counts {
        tp_all += tp;
        pred_all += np;
        gold_all += ng;
        per_type.insert(
            name,
            TypeScore {
                tp,
                fp: np - tp,
                fn_: ng - tp,
                gold: ng,
                pred: np,
                prf: Prf::from_counts(tp, np - tp, ng - tp),
            },
        );
    }
    let macro_types: Vec<String> = per_type
        .iter()
        .filter(|(_, s)| match opts.macro_set {
            MacroSet::GoldUnionPred => true,
            MacroSet::GoldOnly => s.gold > 0,
        })
        .map(|(t, _)| t.clone())
        .collect();
    let macro_avg = if macro_types.is_empty() {
        Prf::default()
    } else {
        let k = macro_types.len() as f64;
        let (mut p, mut r, mut f) = (0.0, 0.0, 0.0);
        for t in &macro_types {
            let s = &per_type[t].prf;
            p += s.precision;
            r += s.recall;
            f += s.f1;
        }
        Prf {
            precision: p / k,
            recall: r / k,
            f1: f / k,
        }
    };
    MetricsReport {
        micro: Prf::from_counts(tp_all, pred_all - tp_all, gold_all - tp_all),
        per_type,
        macro_avg,
        macro_types,
        total_gold: gold_all,
        total_pred: pred_all,
        none_count,
        options: *opts,
    }
}

/// Trigger identification: types are ignored and a mention is correct when its
/// span matches any span on the other side of the same sentence. Mentions are
/// counted individually after the same triple dedup as [`score`], so a span
/// carrying two gold types counts twice. `tp` reports the matched predictions;
/// recall uses the matched gold mentions (`gold - fn`). `NONE` predictions are
/// dropped and counted.
pub fn ti_score(pred: &[Vec<EventMention>], gold: &[Vec<EventMention>]) -> MetricsReport {
    let n = pred.len().max(gold.len());
    let empty: Vec<EventMention> = Vec::new();
    let (mut tp_pred, mut tp_gold, mut np, mut ng, mut none_count) = (0, 0, 0, 0, 0);
    for i in 0..n {
        let p_raw = pred.get(i).unwrap_or(&empty);
        let g: BTreeSet<&EventMention> = gold.get(i).unwrap_or(&empty).iter().collect();
        let p: BTreeSet<&EventMention> = p_raw.iter().filter(|m| m.type_name != NONE).collect();
        none_count += p_raw.iter().filter(|m| m.type_name == NONE).count();
        let g_spans: BTreeSet<(usize, usize)> = g.iter().map(|m| (m.start, m.end)).collect();
        let p_spans: BTreeSet<(usize, usize)> = p.iter().map(|m| (m.start, m.end)).collect();
        np += p.len();
        ng += g.len();
        tp_pred += p.iter().filter(|m| g_spans.contains(&(m.start, m.end))).count();
        tp_gold += g.iter().filter(|m| p_spans.contains(&(m.start, m.end))).count();
    }
    let precision = ratio(tp_pred, np);
    let recall = ratio(tp_gold, ng);
    let prf = Prf {
        precision,
        recall,
        f1: f1(precision, recall),
    };
    let mut per_type = BTreeMap::new();
    if np + ng > 0 {
        per_type.insert(
            TRIGGER.to_string(),
            TypeScore {
                tp: tp_pred,
                fp: np - tp_pred,
                fn_: ng - tp_gold,
                gold: ng,
                pred: np,
                prf,
            },
        );
    }
    MetricsReport {
        macro_types: per_type.keys().cloned().collect(),
        per_type,
        micro: prf,
        macro_avg: prf,
        total_gold: ng,
        total_pred: np,
        none_count,
        options: ScoreOptions::default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(s: usize, e: usize, t: &str) -> EventMention {
        EventMention::new(s, e, t)
    }

    #[test]
    fn worked_example() {
        let gold = vec![vec![m(0, 1, "A"), m(3, 4, "B")]];
        let pred = vec![vec![m(0, 1, "A"), m(3, 4, "C")]];
        let r = score(&pred, &gold, &ScoreOptions::default());
        assert_eq!(r.micro.precision, 0.5);
        assert_eq!(r.micro.recall, 0.5);
        assert_eq!(r.micro.f1, 0.5);
        assert_eq!(r.f1_of("A"), 1.0);
        assert_eq!(r.f1_of("B"), 0.0);
        assert_eq!(r.f1_of("C"), 0.0);
        assert_eq!(r.macro_avg.f1, 1.0 / 3.0);
        let gold_only = score(&pred, &gold, &ScoreOptions {
            macro_set: MacroSet::GoldOnly,
            ..Default::default()
        });
        assert_eq!(gold_only.macro_avg.f1, 0.5);
    }

    #[test]
    fn perfect_prediction() {
        let gold = vec![vec![m(0, 1, "A")], vec![], vec![m(2, 4, "B")]];
        let r = score(&gold, &gold, &ScoreOptions::default());
        assert_eq!(r.micro.f1, 1.0);
        assert_eq!(r.macro_avg.f1, 1.0);
        assert_eq!(r.macro_avg.precision, 1.0);
    }

    #[test]
    fn all_na_predictor() {
        let gold = vec![vec![m(0, 1, "A")]];
        let r = score(&[vec![]], &gold, &ScoreOptions::default());
        assert_eq!(r.micro, Prf::default());
        assert_eq!(r.total_pred, 0);
    }

    #[test]
    fn none_entries_dropped_and_counted() {
        let gold = vec![vec![m(0, 1, "A")]];
        let pred = vec![vec![m(0, 1, NONE), m(2, 3, NONE)]];
        let r = score(&pred, &gold, &ScoreOptions::default());
        assert_eq!(r.none_count, 2);
        assert_eq!(r.total_pred, 0);
        let kept = score(&pred, &gold, &ScoreOptions {
            retain_none: true,
            ..Default::default()
        });
        assert_eq!(kept.per_type[NONE].fp, 2);
    }

    #[test]
    fn ti_erases_types_but_not_spans() {
        let gold = vec![vec![m(3, 4, "B")]];
        assert_eq!(ti_score(&[vec![m(3, 4, "C")]], &gold).micro.f1, 1.0);
        assert_eq!(ti_score(&[vec![m(3, 5, "B")]], &gold).micro.f1, 0.0);
    }

    #[test]
    fn ti_counts_a_doubly_typed_span_twice() {
        let gold = vec![vec![m(0, 1, "A"), m(0, 1, "B")], vec![m(2, 3, "A")]];
        let pred = vec![vec![m(0, 1, "A"), m(0, 1, "B")], vec![]];
        let tc = score(&pred, &gold, &ScoreOptions::default());
        let ti = ti_score(&pred, &gold);
        assert_eq!((ti.total_gold, ti.total_pred), (3, 2));
        assert_eq!(ti.micro, tc.micro);
        assert_eq!(ti.per_type[TRIGGER].fn_, 1);
    }

    #[test]
    fn table_mentions_every_type() {
        let gold = vec![vec![m(0, 1, "Attack"), m(3, 4, "Death")]];
        let table = score(&gold, &gold, &ScoreOptions::default()).to_table();
        assert!(table.contains("Attack") && table.contains("Death") && table.contains("macro"));
    }
}
