//! Paired comparisons of correlations across protocol tiers and stimuli.

use std::collections::BTreeMap;

use super::stats::{wilcoxon_signed_rank, Wilcoxon};
use super::MetricReport;
use crate::error::{Error, Result};
use crate::io::manifest::{Condition, Stimulus};
use crate::metrics::Family;

#[derive(Debug, Clone, PartialEq)]
pub struct PairDiff {
    pub metric: String,
    pub family: Family,
    pub dataset: String,
    pub protocol_a: String,
    pub protocol_b: String,
    pub r_a: f64,
    pub r_b: f64,
    /// `r_b - r_a`.
    pub diff: f64,
}

/// Pairs reports sharing a key; pairs where either `r` is undefined are
/// dropped. Output is sorted by key.
fn pair_up<K: Ord>(a: &[MetricReport], b: &[MetricReport], key: impl Fn(&MetricReport) -> K) -> Vec<PairDiff> {
    let bs: BTreeMap<K, &MetricReport> = b.iter().map(|r| (key(r), r)).collect();
    let mut pairs: BTreeMap<K, PairDiff> = BTreeMap::new();
    for ra in a {
        let k = key(ra);
        let Some(rb) = bs.get(&k) else { continue };
        let (Some(r_a), Some(r_b)) = (ra.r, rb.r) else { continue };
        pairs.insert(
            k,
            PairDiff {
                metric: ra.metric.clone(),
                family: ra.family,
                dataset: ra.dataset.clone(),
                protocol_a: ra.protocol.clone(),
                protocol_b: rb.protocol.clone(),
                r_a,
                r_b,
                diff: r_b - r_a,
            },
        );
    }
    pairs.into_values().collect()
}

fn test_pairs(pairs: &[PairDiff]) -> Result<Wilcoxon> {
    let b: Vec<f64> = pairs.iter().map(|p| p.r_b).collect();
    let a: Vec<f64> = pairs.iter().map(|p| p.r_a).collect();
    wilcoxon_signed_rank(&b, &a)
}

/// Wilcoxon test of `r_B - r_A` over reports paired by metric and dataset.
pub fn compare_protocols(a: &[MetricReport], b: &[MetricReport]) -> Result<(Wilcoxon, Vec<PairDiff>)> {
    let pairs = pair_up(a, b, |r| (r.metric.clone(), r.dataset.clone()));
    if pairs.len() < 5 {
        return Err(Error::undefined(format!("insufficient pairs ({})", pairs.len())));
    }
    Ok((test_pairs(&pairs)?, pairs))
}

/// One row of `comparisons.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    /// `mc_vs_ex` or `word_vs_sentence`.
    pub analysis: String,
    /// `all` or a method family.
    pub stratum: String,
    pub n_pairs: usize,
    pub w: Option<f64>,
    pub p: Option<f64>,
    pub mean_diff: Option<f64>,
    pub note: Option<String>,
    pub pairs: Vec<PairDiff>,
}

fn rows(analysis: &str, pairs: Vec<PairDiff>) -> Vec<Comparison> {
    let mut strata: Vec<(String, Vec<PairDiff>)> = vec![("all".into(), pairs.clone())];
    for fam in [Family::Signal, Family::Model, Family::Text, Family::Audio] {
        let sub: Vec<PairDiff> = pairs.iter().filter(|p| p.family == fam).cloned().collect();
        if !sub.is_empty() {
            strata.push((fam.to_string(), sub));
        }
    }
    strata
        .into_iter()
        .map(|(stratum, pairs)| {
            let n = pairs.len();
            let mean_diff = (n > 0).then(|| pairs.iter().map(|p| p.diff).sum::<f64>() / n as f64);
            let (w, p, note) = if n < 5 {
                (None, None, Some(format!("insufficient pairs ({n})")))
            } else {
                match test_pairs(&pairs) {
                    Ok(t) => (Some(t.w), Some(t.p), None),
                    Err(Error::Undefined(u)) => (None, None, Some(u.reason)),
                    Err(e) => (None, None, Some(e.to_string())),
                }
            };
            Comparison {
                analysis: analysis.to_string(),
                stratum,
                n_pairs: n,
                w,
                p,
                mean_diff,
                note,
                pairs,
            }
        })
        .collect()
}

fn missing(analysis: &str, note: &str) -> Comparison {
    Comparison {
        analysis: analysis.to_string(),
        stratum: "all".into(),
        n_pairs: 0,
        w: None,
        p: None,
        mean_diff: None,
        note: Some(note.to_string()),
        pairs: Vec::new(),
    }
}

/// Both paired analyses over a set of reports: MC against EX at equal
/// stimulus type, and words against sentences at equal tier.
pub fn run_comparisons(reports: &[MetricReport]) -> Vec<Comparison> {
    let split = |f: &dyn Fn(&MetricReport) -> bool| -> Vec<MetricReport> {
        reports.iter().filter(|r| f(r)).cloned().collect()
    };
    let mut out = Vec::new();

    let mc = split(&|r| r.condition == Condition::MC);
    let ex = split(&|r| r.condition == Condition::EX);
    if ex.is_empty() || mc.is_empty() {
        let which = if ex.is_empty() { "EX" } else { "MC" };
        out.push(missing("mc_vs_ex", &format!("{which} protocol missing")));
    } else {
        let pairs = pair_up(&mc, &ex, |r| (r.metric.clone(), r.dataset.clone(), r.stimulus));
        out.extend(rows("mc_vs_ex", pairs));
    }

    let word = split(&|r| r.stimulus == Stimulus::Word);
    let sentence = split(&|r| r.stimulus == Stimulus::Sentence);
    if word.is_empty() || sentence.is_empty() {
        let which = if word.is_empty() { "word" } else { "sentence" };
        out.push(missing("word_vs_sentence", &format!("{which} protocol missing")));
    } else {
        let pairs = pair_up(&word, &sentence, |r| (r.metric.clone(), r.dataset.clone(), r.condition));
        out.extend(rows("word_vs_sentence", pairs));
    }
    out
}
