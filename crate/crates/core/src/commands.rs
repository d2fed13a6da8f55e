//! Entry points behind the CLI subcommands.
//!
//! Everything the binary does goes through these functions, so library
//! callers get byte-identical outputs.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::config::Config;
use crate::dsp::WadaTable;
use crate::error::{Error, Result};
use crate::harness::report::{read_scores, score_path, write_scores, Report};
use crate::harness::{
    build_reports, protocol_confounders, run_comparisons, score_protocol, MetricInfo, ProtocolScores, RunInputs,
    WADA_METRIC,
};
use crate::io::manifest::{inspect_manifest, load_manifest, Corpus, Finding, Polarity, ProtocolSpec, Severity};
use crate::lm::NGramModel;
use crate::metrics::{Family, Metric, MetricRegistry};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Validation(_) | Error::Json { .. } => EXIT_VALIDATION,
        Error::Config(_) => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub manifest: PathBuf,
    /// All protocols when `None`.
    pub protocols: Option<Vec<String>>,
    /// Score: every registered metric when `None`. Report: every metric
    /// with score files for all selected protocols.
    pub metrics: Option<Vec<String>>,
    pub workers: usize,
    pub out: PathBuf,
    pub config: Config,
}

impl RunOptions {
    pub fn new(manifest: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        Self {
            manifest: manifest.into(),
            protocols: None,
            metrics: None,
            workers: 1,
            out: out.into(),
            config: Config::default(),
        }
    }
}

/// Every finding for a manifest; a validation error when any is an error.
pub fn cmd_validate(manifest: &Path) -> Result<Vec<Finding>> {
    let (_, findings) = inspect_manifest(manifest)?;
    if findings.iter().any(|f| f.severity == Severity::Error) {
        return Err(Error::Validation(findings));
    }
    Ok(findings)
}

fn select_protocols<'a>(corpus: &'a Corpus, names: Option<&[String]>) -> Result<Vec<&'a ProtocolSpec>> {
    match names {
        None => Ok(corpus.protocols.iter().collect()),
        Some(names) => names
            .iter()
            .map(|n| {
                corpus.protocol(n).ok_or_else(|| {
                    let known: Vec<&str> = corpus.protocols.iter().map(|p| p.name.as_str()).collect();
                    Error::Config(format!("unknown protocol {n:?}; manifest defines: {}", known.join(", ")))
                })
            })
            .collect(),
    }
}

/// Scores the selected protocols and writes
/// `<out>/scores/<protocol>/<metric>.csv` plus `wada_snr.csv` per protocol.
/// Returns the files written, in order.
pub fn cmd_score(opts: &RunOptions, registry: &MetricRegistry) -> Result<Vec<PathBuf>> {
    let metrics: Vec<Arc<dyn Metric>> = match &opts.metrics {
        Some(names) => registry.select(names)?,
        None => registry.all(),
    };
    let corpus = load_manifest(&opts.manifest)?;
    for w in &corpus.warnings {
        log::warn!("{w}");
    }
    let protocols = select_protocols(&corpus, opts.protocols.as_deref())?;
    let lm = corpus.lm_path.as_ref().map(NGramModel::load).transpose()?;
    let custom = opts.config.wada.table_path.as_ref().map(WadaTable::load).transpose()?;
    let wada = custom.as_ref().unwrap_or_else(|| WadaTable::bundled());
    let inputs = RunInputs {
        corpus: &corpus,
        config: &opts.config,
        lm: lm.as_ref(),
        wada,
        workers: opts.workers,
    };
    let mut written = Vec::new();
    for p in protocols {
        let scores = score_protocol(&inputs, p, &metrics)?;
        for (info, rows) in &scores.metrics {
            let path = score_path(&opts.out, &p.name, &info.name);
            write_scores(&path, rows)?;
            written.push(path);
        }
        let path = score_path(&opts.out, &p.name, WADA_METRIC);
        write_scores(&path, &scores.wada)?;
        written.push(path);
    }
    Ok(written)
}

fn missing_scores(metric: &str, protocol: &str, path: &Path) -> Error {
    Error::InvalidInput(format!(
        "no scores for metric {metric:?} in protocol {protocol:?} (expected {}); run `pathmetrics score` with this metric first",
        path.display()
    ))
}

/// Reads the score files of the selected protocols and writes report.csv,
/// report.md, confounders.csv, comparisons.csv and comparison_pairs.csv.
pub fn cmd_report(opts: &RunOptions, registry: &MetricRegistry) -> Result<Report> {
    let corpus = load_manifest(&opts.manifest)?;
    let protocols = select_protocols(&corpus, opts.protocols.as_deref())?;
    let infos: Vec<MetricInfo> = match &opts.metrics {
        Some(names) => registry.select(names)?.iter().map(|m| MetricInfo::of(m.as_ref())).collect(),
        None => {
            let found: Vec<MetricInfo> = registry
                .all()
                .iter()
                .filter(|m| protocols.iter().all(|p| score_path(&opts.out, &p.name, m.name()).is_file()))
                .map(|m| MetricInfo::of(m.as_ref()))
                .collect();
            if found.is_empty() {
                return Err(Error::InvalidInput(format!(
                    "no score files under {}; run `pathmetrics score` first",
                    opts.out.join("scores").display()
                )));
            }
            found
        }
    };
    let wada_info = MetricInfo {
        name: WADA_METRIC.into(),
        family: Family::Signal,
        polarity: Polarity::HigherIsBetter,
    };

    let mut report = Report::default();
    for p in protocols {
        let mut scores = ProtocolScores {
            protocol: p.name.clone(),
            metrics: Vec::new(),
            wada: Vec::new(),
        };
        for info in &infos {
            let path = score_path(&opts.out, &p.name, &info.name);
            if !path.is_file() {
                return Err(missing_scores(&info.name, &p.name, &path));
            }
            scores.metrics.push((info.clone(), read_scores(&path, info)?));
        }
        let path = score_path(&opts.out, &p.name, WADA_METRIC);
        if !path.is_file() {
            return Err(missing_scores(WADA_METRIC, &p.name, &path));
        }
        scores.wada = read_scores(&path, &wada_info)?;
        report.reports.extend(build_reports(&corpus, p, &scores));
        report.confounders.push(protocol_confounders(&corpus, p, &scores.wada));
    }
    report.comparisons = run_comparisons(&report.reports);
    report.write(&opts.out)?;
    Ok(report)
}
