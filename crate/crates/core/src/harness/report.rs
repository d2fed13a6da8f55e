//! CSV and Markdown outputs.
//!
//! Floats are written with Rust's shortest round-trip formatting so that
//! score files read back to the exact values that produced them.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::compare::Comparison;
use super::{MetricInfo, MetricReport};
use crate::error::{Error, Result};
use crate::metrics::UtteranceScore;

const SCORE_HEADER: [&str; 6] = ["utterance_id", "speaker_id", "metric", "value", "defined_flag", "reason"];

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn p4(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.4}")).unwrap_or_default()
}

fn cell(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.3}")).unwrap_or_else(|| "n/a".into())
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(())
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    create_parent(path)?;
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file))
}

fn finish(mut w: csv::Writer<fs::File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// `<out>/scores/<protocol>/<metric>.csv`
pub fn score_path(out: &Path, protocol: &str, metric: &str) -> PathBuf {
    out.join("scores").join(protocol).join(format!("{metric}.csv"))
}

pub fn write_scores(path: &Path, scores: &[UtteranceScore]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(SCORE_HEADER)?;
    for s in scores {
        w.write_record([
            s.utterance_id.as_str(),
            s.speaker_id.as_str(),
            s.metric.as_str(),
            &opt(s.value),
            if s.is_defined() { "1" } else { "0" },
            s.reason.as_deref().unwrap_or(""),
        ])?;
    }
    finish(w, path)
}

/// Reads a score file written by [`write_scores`].
pub fn read_scores(path: &Path, info: &MetricInfo) -> Result<Vec<UtteranceScore>> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(io) => Error::io(path, std::io::Error::new(io.kind(), io.to_string())),
        _ => Error::Csv(e),
    })?;
    let header = rd.headers()?.clone();
    if header.iter().take(5).ne(SCORE_HEADER.iter().take(5).copied()) {
        return Err(Error::Format(format!("{}: unexpected score header {:?}", path.display(), header)));
    }
    let mut out = Vec::new();
    for (i, row) in rd.records().enumerate() {
        let row = row?;
        let bad = |m: &str| Error::Format(format!("{} row {}: {m}", path.display(), i + 2));
        let value = match (&row[4], &row[3]) {
            ("1", v) => Some(v.parse::<f64>().map_err(|_| bad("value is not a number"))?),
            ("0", _) => None,
            _ => return Err(bad("defined_flag must be 0 or 1")),
        };
        if row[2] != info.name {
            return Err(bad(&format!("metric {:?} where {:?} was expected", &row[2], info.name)));
        }
        out.push(UtteranceScore {
            utterance_id: row[0].to_string(),
            speaker_id: row[1].to_string(),
            metric: info.name.clone(),
            value,
            reason: row.get(5).filter(|r| !r.is_empty()).map(str::to_string),
            polarity: info.polarity,
            diagnostics: BTreeMap::new(),
        });
    }
    Ok(out)
}

/// Confounder correlations over every speaker with a target in a protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfounders {
    pub protocol: String,
    pub n_speakers: usize,
    pub r: BTreeMap<String, Option<f64>>,
}

/// Everything `report` writes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    /// Ordered by protocol, then metric as requested.
    pub reports: Vec<MetricReport>,
    pub confounders: Vec<ProtocolConfounders>,
    pub comparisons: Vec<Comparison>,
}

impl Report {
    pub fn write(&self, out: &Path) -> Result<()> {
        fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        self.write_report_csv(&out.join("report.csv"))?;
        self.write_confounders_csv(&out.join("confounders.csv"))?;
        self.write_comparisons_csv(&out.join("comparisons.csv"))?;
        self.write_pairs_csv(&out.join("comparison_pairs.csv"))?;
        let md = out.join("report.md");
        fs::write(&md, self.markdown()).map_err(|e| Error::io(&md, e))
    }

    fn write_report_csv(&self, path: &Path) -> Result<()> {
        let mut w = writer(path)?;
        w.write_record([
            "protocol", "dataset", "condition", "stimulus", "metric", "family", "polarity", "n_speakers", "r",
            "r_raw", "r_age", "r_wada_snr", "excluded", "note",
        ])?;
        for r in &self.reports {
            let conf = |k: &str| opt(r.confounder_r.get(k).copied().flatten());
            w.write_record([
                r.protocol.clone(),
                r.dataset.clone(),
                r.condition.to_string(),
                r.stimulus.to_string(),
                r.metric.clone(),
                r.family.to_string(),
                r.polarity.to_string(),
                r.n_speakers.to_string(),
                opt(r.r),
                opt(r.r_raw),
                conf("age"),
                conf(super::WADA_METRIC),
                r.excluded.join(";"),
                r.note.clone().unwrap_or_default(),
            ])?;
        }
        finish(w, path)
    }

    fn write_confounders_csv(&self, path: &Path) -> Result<()> {
        let mut w = writer(path)?;
        w.write_record(["protocol", "metric", "confounder", "n_speakers", "r"])?;
        for c in &self.confounders {
            for (k, v) in &c.r {
                w.write_record([c.protocol.as_str(), "*", k, &c.n_speakers.to_string(), &opt(*v)])?;
            }
        }
        for r in &self.reports {
            for (k, v) in &r.confounder_r {
                w.write_record([r.protocol.as_str(), &r.metric, k, &r.n_speakers.to_string(), &opt(*v)])?;
            }
        }
        finish(w, path)
    }

    fn write_comparisons_csv(&self, path: &Path) -> Result<()> {
        let mut w = writer(path)?;
        w.write_record(["analysis", "stratum", "n_pairs", "w", "p", "mean_diff", "note"])?;
        for c in &self.comparisons {
            w.write_record([
                c.analysis.clone(),
                c.stratum.clone(),
                c.n_pairs.to_string(),
                opt(c.w),
                p4(c.p),
                opt(c.mean_diff),
                c.note.clone().unwrap_or_default(),
            ])?;
        }
        finish(w, path)
    }

    fn write_pairs_csv(&self, path: &Path) -> Result<()> {
        let mut w = writer(path)?;
        w.write_record(["analysis", "metric", "family", "dataset", "protocol_a", "protocol_b", "r_a", "r_b", "diff"])?;
        for c in self.comparisons.iter().filter(|c| c.stratum == "all") {
            for p in &c.pairs {
                w.write_record([
                    c.analysis.clone(),
                    p.metric.clone(),
                    p.family.to_string(),
                    p.dataset.clone(),
                    p.protocol_a.clone(),
                    p.protocol_b.clone(),
                    p.r_a.to_string(),
                    p.r_b.to_string(),
                    p.diff.to_string(),
                ])?;
            }
        }
        finish(w, path)
    }

    /// Metric-by-protocol grid with a uniform average column.
    fn grid(&self, md: &mut String, value: impl Fn(&MetricReport) -> Option<f64>) {
        let mut protocols: Vec<&str> = Vec::new();
        let mut metrics: Vec<(&MetricReport, &str)> = Vec::new();
        for r in &self.reports {
            if !protocols.contains(&r.protocol.as_str()) {
                protocols.push(&r.protocol);
            }
            if !metrics.iter().any(|(_, m)| *m == r.metric) {
                metrics.push((r, &r.metric));
            }
        }
        metrics.sort_by_key(|(r, _)| r.family);
        let _ = writeln!(md, "| Family | Metric | {} | Avg |", protocols.join(" | "));
        let _ = writeln!(md, "|---|---|{}---|", "---|".repeat(protocols.len()));
        for (first, metric) in metrics {
            let cells: Vec<Option<f64>> = protocols
                .iter()
                .map(|p| self.reports.iter().find(|r| r.protocol == *p && r.metric == metric).and_then(&value))
                .collect();
            let defined: Vec<f64> = cells.iter().flatten().copied().collect();
            let avg = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
            let row: Vec<String> = cells.into_iter().map(cell).collect();
            let _ = writeln!(md, "| {} | {} | {} | {} |", first.family, metric, row.join(" | "), cell(avg));
        }
    }

    pub fn markdown(&self) -> String {
        let mut md = String::from("# Speaker-level Pearson correlation\n\n");
        md.push_str("Polarity-adjusted r: positive values mean the metric tracks intelligibility.\n\n");
        self.grid(&mut md, |r| r.r);
        md.push_str("\n## Raw r\n\nScores and targets as emitted, without polarity adjustment.\n\n");
        self.grid(&mut md, |r| r.r_raw);

        md.push_str("\n## Confounders\n\n| Protocol | Speakers | Age | WADA SNR |\n|---|---|---|---|\n");
        for c in &self.confounders {
            let get = |k: &str| cell(c.r.get(k).copied().flatten());
            let _ = writeln!(
                md,
                "| {} | {} | {} | {} |",
                c.protocol,
                c.n_speakers,
                get("age"),
                get(super::WADA_METRIC)
            );
        }

        md.push_str("\n## Paired comparisons\n\n| Analysis | Stratum | Pairs | W | p | Mean diff | Note |\n");
        md.push_str("|---|---|---|---|---|---|---|\n");
        for c in &self.comparisons {
            let _ = writeln!(
                md,
                "| {} | {} | {} | {} | {} | {} | {} |",
                c.analysis,
                c.stratum,
                c.n_pairs,
                c.w.map(|w| w.to_string()).unwrap_or_else(|| "n/a".into()),
                c.p.map(|p| format!("{p:.4}")).unwrap_or_else(|| "n/a".into()),
                cell(c.mean_diff),
                c.note.as_deref().unwrap_or("")
            );
        }

        let excluded: Vec<&MetricReport> = self.reports.iter().filter(|r| !r.excluded.is_empty()).collect();
        if !excluded.is_empty() {
            md.push_str("\n## Excluded speakers\n\n");
            for r in excluded {
                let _ = writeln!(md, "- {} / {}: {}", r.protocol, r.metric, r.excluded.join(", "));
            }
        }
        md
    }
}
