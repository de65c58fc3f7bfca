use serde::{Deserialize, Serialize};

use super::score::MetricsReport;
use super::ttest::{paired_t_test, TTest};
use crate::corpus::FrequencyTable;
use crate::error::{Error, Result};

/// How frequency quartiles are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuartileMode {
    /// Four buckets with equal numbers of types; the remainder goes to the rarest bucket.
    #[default]
    TypeCount,
    /// Buckets cut at quarters of the cumulative mention mass.
    MentionMass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuartileBucket {
    /// 0 = most frequent types.
    pub index: usize,
    pub types: Vec<String>,
    /// `None` when the bucket is empty.
    pub macro_f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileTable {
    /// `(k, macro-F1 over the k most frequent gold types)`, `k` strictly increasing.
    pub topk: Vec<(usize, f64)>,
    pub quartiles: Vec<QuartileBucket>,
    /// Gold types of the report ranked by training frequency.
    pub ranked_types: Vec<String>,
}

impl QuantileTable {
    pub fn topk_csv(&self) -> String {
        let mut out = String::from("k,macro_f1\n");
        for (k, f) in &self.topk {
            out.push_str(&format!("{k},{f}\n"));
        }
        out
    }

    pub fn quartiles_csv(&self) -> String {
        let mut out = String::from("quartile,num_types,macro_f1\n");
        for q in &self.quartiles {
            let f = q.macro_f1.map_or(String::new(), |v| v.to_string());
            out.push_str(&format!("{},{},{}\n", q.index + 1, q.types.len(), f));
        }
        out
    }
}

fn mean_f1(report: &MetricsReport, types: &[String]) -> Option<f64> {
    if types.is_empty() {
        return None;
    }
    Some(types.iter().map(|t| report.f1_of(t)).sum::<f64>() / types.len() as f64)
}

/// Macro-F1 restricted to the most frequent gold types, plus frequency quartiles.
///
/// Only types with gold mentions in the report are ranked; their order comes
/// from `freq` (descending training count, name tie-break).
pub fn topk_analysis(report: &MetricsReport, freq: &FrequencyTable, ks: &[usize], mode: QuartileMode) -> Result<QuantileTable> {
    let gold = report.gold_types();
    if let Some(missing) = gold.iter().find(|t| !freq.counts().contains_key(*t)) {
        return Err(Error::InvalidAnalysis(format!("type {missing} is missing from the frequency table")));
    }
    let ranked: Vec<String> = freq.ordered().iter().filter(|t| gold.contains(t)).cloned().collect();
    let n = ranked.len();

    let mut ks = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let mut topk = Vec::with_capacity(ks.len());
    for k in ks {
        if k == 0 || k > n {
            return Err(Error::InvalidAnalysis(format!("k = {k} outside 1..={n} gold types")));
        }
        topk.push((k, mean_f1(report, &ranked[..k]).expect("k >= 1")));
    }

    let mut buckets: Vec<Vec<String>> = vec![Vec::new(); 4];
    match mode {
        QuartileMode::TypeCount => {
            let size = n / 4;
            for (i, t) in ranked.iter().enumerate() {
                buckets[(i / size.max(1)).min(3)].push(t.clone());
            }
            if size == 0 {
                // fewer than four types: one per bucket from the top
                buckets = vec![Vec::new(); 4];
                for (i, t) in ranked.iter().enumerate() {
                    buckets[i].push(t.clone());
                }
            }
        }
        QuartileMode::MentionMass => {
            let total: usize = ranked.iter().map(|t| freq.count(t)).sum();
            let mut before = 0usize;
            for t in &ranked {
                let q = if total == 0 { 0 } else { (4 * before / total).min(3) };
                buckets[q].push(t.clone());
                before += freq.count(t);
            }
        }
    }
    let quartiles = buckets
        .into_iter()
        .enumerate()
        .map(|(index, types)| QuartileBucket {
            index,
            macro_f1: mean_f1(report, &types),
            types,
        })
        .collect();
    Ok(QuantileTable {
        topk,
        quartiles,
        ranked_types: ranked,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub types: Vec<String>,
    pub test: TTest,
    pub significant: bool,
}

impl Comparison {
    pub fn verdict(&self) -> &'static str {
        if self.significant {
            "significant (p < 0.05)"
        } else {
            "not significant"
        }
    }
}

/// Paired t-test over per-type F1 of two reports, paired on their shared gold types.
pub fn compare_reports(a: &MetricsReport, b: &MetricsReport) -> Result<Comparison> {
    let gold_b = b.gold_types();
    let types: Vec<String> = a.gold_types().into_iter().filter(|t| gold_b.contains(t)).collect();
    if types.is_empty() {
        return Err(Error::InvalidAnalysis("reports have disjoint gold type sets".into()));
    }
    let fa: Vec<f64> = types.iter().map(|t| a.f1_of(t)).collect();
    let fb: Vec<f64> = types.iter().map(|t| b.f1_of(t)).collect();
    let test = paired_t_test(&fa, &fb)?;
    Ok(Comparison {
        significant: test.p < 0.05,
        types,
        test,
    })
}
