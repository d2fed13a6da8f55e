//! Protocol runs: utterance scoring, speaker aggregation, correlation
//! against clinical targets, confounders and paired comparisons.

pub mod compare;
pub mod report;
pub mod stats;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rayon::prelude::*;

use crate::config::Config;
use crate::dsp::{wada_snr, WadaTable};
use crate::error::{Error, Result};
use crate::io::manifest::{Condition, Corpus, Group, Polarity, ProtocolSpec, Stimulus, UtteranceRecord};
use crate::lm::NGramModel;
use crate::metrics::{Family, Level, Metric, ScoringContext, UtteranceScore};

pub use report::{ProtocolConfounders, Report};
pub use compare::{compare_protocols, run_comparisons, Comparison, PairDiff};
pub use stats::{pearson, wilcoxon_signed_rank, Wilcoxon};

/// Metric name used for the per-utterance WADA SNR confounder.
pub const WADA_METRIC: &str = "wada_snr";
/// Utterance id written for speaker-level scores.
pub const SPEAKER_ROW: &str = "*";

#[derive(Debug, Clone, PartialEq)]
pub struct SpeakerScore {
    pub speaker_id: String,
    pub metric: String,
    pub value: f64,
    /// Defined utterance scores behind `value`.
    pub n_utts: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Aggregation {
    /// Sorted by speaker id.
    pub speakers: Vec<SpeakerScore>,
    /// Speakers with no defined score.
    pub excluded: Vec<String>,
}

/// Unweighted mean of the defined utterance scores of each speaker.
pub fn aggregate_speaker(scores: &[UtteranceScore]) -> Aggregation {
    let mut by: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for s in scores {
        let e = by.entry(&s.speaker_id).or_default();
        if let Some(v) = s.value {
            e.0 += v;
            e.1 += 1;
        }
    }
    let mut out = Aggregation::default();
    for (spk, (sum, n)) in by {
        if n == 0 {
            out.excluded.push(spk.to_string());
            continue;
        }
        let metric = scores.iter().find(|s| s.speaker_id == spk).map(|s| s.metric.clone()).unwrap_or_default();
        out.speakers.push(SpeakerScore {
            speaker_id: spk.to_string(),
            metric,
            value: sum / n as f64,
            n_utts: n,
        });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricInfo {
    pub name: String,
    pub family: Family,
    pub polarity: Polarity,
}

impl MetricInfo {
    pub fn of(m: &dyn Metric) -> Self {
        Self {
            name: m.name().to_string(),
            family: m.family(),
            polarity: m.polarity(),
        }
    }
}

/// Every utterance score of one protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolScores {
    pub protocol: String,
    /// In the order the metrics were requested.
    pub metrics: Vec<(MetricInfo, Vec<UtteranceScore>)>,
    pub wada: Vec<UtteranceScore>,
}

/// Shared, read-only inputs of a scoring run.
pub struct RunInputs<'a> {
    pub corpus: &'a Corpus,
    pub config: &'a Config,
    pub lm: Option<&'a NGramModel>,
    pub wada: &'a WadaTable,
    pub workers: usize,
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} worker(s): {e}")))
}

fn wada_score(ctx: &ScoringContext, rec: &UtteranceRecord) -> Result<UtteranceScore> {
    let result = ctx.audio(rec).and_then(|a| wada_snr(&a, ctx.wada));
    let (value, reason) = match result {
        Ok(v) => (Some(v), None),
        Err(Error::Undefined(u)) => (None, Some(u.reason)),
        Err(e) => return Err(e),
    };
    Ok(UtteranceScore {
        utterance_id: rec.utterance_id.clone(),
        speaker_id: rec.speaker_id.clone(),
        metric: WADA_METRIC.to_string(),
        value,
        reason,
        polarity: Polarity::HigherIsBetter,
        diagnostics: BTreeMap::new(),
    })
}

/// Scores every utterance of `protocol` whose speaker has a target.
///
/// Work is spread over `inputs.workers` threads; results keep utterance id
/// order, so output does not depend on the worker count.
pub fn score_protocol(
    inputs: &RunInputs,
    protocol: &ProtocolSpec,
    metrics: &[Arc<dyn Metric>],
) -> Result<ProtocolScores> {
    let corpus = inputs.corpus;
    let all = corpus.protocol_records(protocol);
    let records: Vec<&UtteranceRecord> =
        all.iter().copied().filter(|r| protocol.speaker_targets.contains_key(&r.speaker_id)).collect();
    let ctx = ScoringContext {
        corpus,
        config: inputs.config,
        lm: inputs.lm,
        wada: inputs.wada,
        pool: all.iter().copied().filter(|r| r.group == Group::Control).collect(),
    };
    let pool = thread_pool(inputs.workers)?;
    pool.install(|| {
        let mut out = Vec::with_capacity(metrics.len());
        for m in metrics {
            log::info!("{}: scoring {} over {} utterance(s)", protocol.name, m.name(), records.len());
            let scores = match m.level() {
                Level::Utterance => records
                    .par_iter()
                    .map(|r| UtteranceScore::from_result(&r.utterance_id, &r.speaker_id, m.as_ref(), m.score(&ctx, r)))
                    .collect::<Result<Vec<_>>>()?,
                Level::Speaker => {
                    let mut by: BTreeMap<&str, Vec<&UtteranceRecord>> = BTreeMap::new();
                    for r in &records {
                        by.entry(r.speaker_id.as_str()).or_default().push(r);
                    }
                    let groups: Vec<_> = by.into_iter().collect();
                    groups
                        .par_iter()
                        .map(|(spk, recs)| {
                            UtteranceScore::from_result(SPEAKER_ROW, spk, m.as_ref(), m.score_speaker(&ctx, recs))
                        })
                        .collect::<Result<Vec<_>>>()?
                }
            };
            out.push((MetricInfo::of(m.as_ref()), scores));
        }
        let wada = records.par_iter().map(|r| wada_score(&ctx, r)).collect::<Result<Vec<_>>>()?;
        Ok(ProtocolScores {
            protocol: protocol.name.clone(),
            metrics: out,
            wada,
        })
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub protocol: String,
    pub dataset: String,
    pub condition: Condition,
    pub stimulus: Stimulus,
    pub metric: String,
    pub family: Family,
    pub polarity: Polarity,
    pub n_speakers: usize,
    /// Correlation of polarity-signed scores with polarity-signed targets.
    pub r: Option<f64>,
    /// Correlation of the scores as emitted with the targets as given.
    pub r_raw: Option<f64>,
    /// Age and mean WADA SNR against the signed targets, on the same speakers.
    pub confounder_r: BTreeMap<String, Option<f64>>,
    pub excluded: Vec<String>,
    /// Why `r` is undefined, when it is.
    pub note: Option<String>,
    pub speakers: Vec<SpeakerScore>,
}

/// Correlation of each confounder with the signed targets of `speakers`.
fn confounders(
    corpus: &Corpus,
    protocol: &ProtocolSpec,
    wada: &Aggregation,
    speakers: &[&str],
) -> BTreeMap<String, Option<f64>> {
    let sign = protocol.target_polarity.sign();
    let target = |s: &str| sign * protocol.speaker_targets[s];
    let wada_of: BTreeMap<&str, f64> = wada.speakers.iter().map(|s| (s.speaker_id.as_str(), s.value)).collect();
    let correlate = |value: &dyn Fn(&str) -> Option<f64>| {
        let (x, y): (Vec<f64>, Vec<f64>) =
            speakers.iter().filter_map(|s| Some((value(s)?, target(s)))).unzip();
        pearson(&x, &y).ok()
    };
    let mut out = BTreeMap::new();
    out.insert("age".to_string(), correlate(&|s| corpus.speaker_age(s)));
    out.insert(WADA_METRIC.to_string(), correlate(&|s| wada_of.get(s).copied()));
    out
}

/// Speaker-level correlations of every scored metric in `scores`.
pub fn build_reports(corpus: &Corpus, protocol: &ProtocolSpec, scores: &ProtocolScores) -> Vec<MetricReport> {
    let wada = aggregate_speaker(&scores.wada);
    let tsign = protocol.target_polarity.sign();
    scores
        .metrics
        .iter()
        .map(|(info, utts)| {
            let agg = aggregate_speaker(utts);
            let speakers: Vec<SpeakerScore> = agg
                .speakers
                .into_iter()
                .filter(|s| protocol.speaker_targets.contains_key(&s.speaker_id))
                .collect();
            let seen: BTreeSet<&str> = utts.iter().map(|u| u.speaker_id.as_str()).collect();
            let mut excluded = agg.excluded;
            excluded.extend(
                protocol.speaker_targets.keys().filter(|s| !seen.contains(s.as_str())).cloned(),
            );
            excluded.sort();
            let x: Vec<f64> = speakers.iter().map(|s| s.value).collect();
            let y: Vec<f64> = speakers.iter().map(|s| protocol.speaker_targets[&s.speaker_id]).collect();
            let sx: Vec<f64> = x.iter().map(|v| info.polarity.sign() * v).collect();
            let sy: Vec<f64> = y.iter().map(|v| tsign * v).collect();
            let (r, note) = match pearson(&sx, &sy) {
                Ok(r) => (Some(r), None),
                Err(Error::Undefined(u)) => (None, Some(u.reason)),
                Err(e) => (None, Some(e.to_string())),
            };
            let ids: Vec<&str> = speakers.iter().map(|s| s.speaker_id.as_str()).collect();
            MetricReport {
                protocol: protocol.name.clone(),
                dataset: protocol.dataset.clone(),
                condition: protocol.condition,
                stimulus: protocol.stimulus,
                metric: info.name.clone(),
                family: info.family,
                polarity: info.polarity,
                n_speakers: speakers.len(),
                r,
                r_raw: pearson(&x, &y).ok(),
                confounder_r: confounders(corpus, protocol, &wada, &ids),
                excluded,
                note,
                speakers,
            }
        })
        .collect()
}

/// Confounder correlations over every speaker with a target.
pub fn protocol_confounders(corpus: &Corpus, protocol: &ProtocolSpec, wada: &[UtteranceScore]) -> ProtocolConfounders {
    let ids: Vec<&str> = protocol.speaker_targets.keys().map(String::as_str).collect();
    ProtocolConfounders {
        protocol: protocol.name.clone(),
        n_speakers: ids.len(),
        r: confounders(corpus, protocol, &aggregate_speaker(wada), &ids),
    }
}

/// Scores and reports one protocol.
pub fn run_protocol(
    inputs: &RunInputs,
    protocol: &ProtocolSpec,
    metrics: &[Arc<dyn Metric>],
) -> Result<(ProtocolScores, Vec<MetricReport>)> {
    let scores = score_protocol(inputs, protocol, metrics)?;
    let reports = build_reports(inputs.corpus, protocol, &scores);
    Ok((scores, reports))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u(spk: &str, v: Option<f64>) -> UtteranceScore {
        UtteranceScore {
            utterance_id: format!("{spk}-{v:?}"),
            speaker_id: spk.into(),
            metric: "m".into(),
            value: v,
            reason: v.is_none().then(|| "x".into()),
            polarity: Polarity::HigherIsBetter,
            diagnostics: BTreeMap::new(),
        }
    }

    #[test]
    fn aggregation_rules() {
        let agg = aggregate_speaker(&[
            u("a", Some(0.2)),
            u("a", Some(0.4)),
            u("b", Some(0.5)),
            u("b", None),
            u("c", None),
        ]);
        assert_eq!(agg.speakers.len(), 2);
        assert!((agg.speakers[0].value - 0.3).abs() < 1e-15);
        assert_eq!(agg.speakers[0].n_utts, 2);
        assert_eq!(agg.speakers[1].value, 0.5);
        assert_eq!(agg.speakers[1].n_utts, 1);
        assert_eq!(agg.excluded, vec!["c"]);
    }
}
