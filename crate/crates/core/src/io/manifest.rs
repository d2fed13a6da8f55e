//! Dataset manifests and evaluation protocols.
//!
//! A manifest directory holds `manifest.json`, which names its companion
//! documents (`vocab_sem.json`, `vocab_phone.json`, `lexicon.json`,
//! `protocols.json`, optionally an ARPA language model). Relative paths are
//! resolved against the manifest's directory. See the README for schemas.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::lexicon::{pronounce_all, Lexicon};
use super::text::{content_key, words};
use super::vocab::{check_schema, VocabSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Pathological,
    Control,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stimulus {
    Word,
    Sentence,
}

impl fmt::Display for Stimulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stimulus::Word => "Word",
            Stimulus::Sentence => "Sentence",
        })
    }
}

/// Protocol tier: matched content, extended, or unfiltered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Condition {
    MC,
    EX,
    Full,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::MC => "MC",
            Condition::EX => "EX",
            Condition::Full => "Full",
        })
    }
}

/// Direction of a clinical target or metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    #[default]
    HigherIsBetter,
    LowerIsBetter,
}

impl Polarity {
    pub fn sign(self) -> f64 {
        match self {
            Polarity::HigherIsBetter => 1.0,
            Polarity::LowerIsBetter => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Polarity::HigherIsBetter => Polarity::LowerIsBetter,
            Polarity::LowerIsBetter => Polarity::HigherIsBetter,
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarity::HigherIsBetter => "higher_is_better",
            Polarity::LowerIsBetter => "lower_is_better",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceRecord {
    pub utterance_id: String,
    pub speaker_id: String,
    pub group: Group,
    pub stimulus: Stimulus,
    #[serde(default)]
    pub content_key: String,
    pub transcript: String,
    #[serde(default)]
    pub phonemes: Vec<String>,
    pub audio_path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sem_logits_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phone_logits_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub age: Option<f64>,
}

impl UtteranceRecord {
    pub fn words(&self) -> Vec<String> {
        words(&self.transcript)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSpec {
    pub name: String,
    pub dataset: String,
    pub condition: Condition,
    pub stimulus: Stimulus,
    pub utterance_ids: Vec<String>,
    pub speaker_targets: BTreeMap<String, f64>,
    /// Whether larger targets mean more intelligible (the default) or more severe.
    #[serde(default)]
    pub target_polarity: Polarity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Category {
    Schema,
    Duplicate,
    Content,
    Lexicon,
    Protocol,
    Subset,
    Target,
    MissingFile,
}

/// One validation result, tied to the record or protocol it concerns.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Finding {
    pub severity: Severity,
    pub category: Category,
    pub subject: String,
    pub message: String,
}

impl Finding {
    fn error(category: Category, subject: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Error,
            category,
            subject: subject.into(),
            message: message.into(),
        }
    }

    fn warning(category: Category, subject: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Warning,
            ..Self::error(category, subject, message)
        }
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{sev} [{:?}] {}: {}", self.category, self.subject, self.message)
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ManifestFile {
    pub schema_version: u32,
    pub dataset: String,
    #[serde(default = "default_language")]
    pub language: String,
    pub vocab_sem: PathBuf,
    pub vocab_phone: PathBuf,
    pub lexicon: PathBuf,
    pub protocols: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lm: Option<PathBuf>,
    /// Posterior/feature frame hop in seconds.
    #[serde(default = "default_hop")]
    pub frame_hop: f64,
    pub utterances: Vec<UtteranceRecord>,
}

fn default_language() -> String {
    "en".into()
}

fn default_hop() -> f64 {
    0.02
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ProtocolsFile {
    pub schema_version: u32,
    pub protocols: Vec<ProtocolSpec>,
}

/// A loaded, validated dataset.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub base_dir: PathBuf,
    pub dataset: String,
    pub language: String,
    pub frame_hop: f64,
    pub records: Vec<UtteranceRecord>,
    pub protocols: Vec<ProtocolSpec>,
    pub lexicon: Lexicon,
    pub vocab_sem: VocabSpec,
    pub vocab_phone: VocabSpec,
    pub lm_path: Option<PathBuf>,
    /// Non-fatal findings (e.g. referenced files not yet present).
    pub warnings: Vec<Finding>,
    index: HashMap<String, usize>,
}

impl Corpus {
    pub fn record(&self, utterance_id: &str) -> Option<&UtteranceRecord> {
        self.index.get(utterance_id).map(|&i| &self.records[i])
    }

    pub fn protocol(&self, name: &str) -> Option<&ProtocolSpec> {
        self.protocols.iter().find(|p| p.name == name)
    }

    /// Records of a protocol, sorted by utterance id.
    pub fn protocol_records(&self, protocol: &ProtocolSpec) -> Vec<&UtteranceRecord> {
        let mut out: Vec<_> = protocol
            .utterance_ids
            .iter()
            .filter_map(|id| self.record(id))
            .collect();
        out.sort_by(|a, b| a.utterance_id.cmp(&b.utterance_id));
        out
    }

    /// Age per speaker, taken from the first record that carries one.
    pub fn speaker_age(&self, speaker_id: &str) -> Option<f64> {
        self.records
            .iter()
            .filter(|r| r.speaker_id == speaker_id)
            .find_map(|r| r.age)
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.into(),
        message: e.to_string(),
    })
}

/// A malformed referenced document is a validation failure, not a runtime one.
fn invalid(subject: &str, err: Error) -> Error {
    match err {
        Error::Format(m) => Error::Validation(vec![Finding::error(Category::Schema, subject, m)]),
        e => e,
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Parses and validates a manifest. Errors when any finding is an error;
/// warnings are kept on the returned corpus.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Corpus> {
    let (corpus, findings) = inspect_manifest(path)?;
    if findings.iter().any(|f| f.severity == Severity::Error) {
        return Err(Error::Validation(findings));
    }
    Ok(Corpus {
        warnings: findings,
        ..corpus
    })
}

/// Parses a manifest and returns it along with every finding, without
/// failing on validation errors. Hard I/O and JSON errors still fail.
pub fn inspect_manifest(path: impl AsRef<Path>) -> Result<(Corpus, Vec<Finding>)> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let file: ManifestFile = read_json(path)?;
    check_schema(file.schema_version, path).map_err(|e| invalid("manifest", e))?;

    let vocab_sem = VocabSpec::load(resolve(&base, &file.vocab_sem)).map_err(|e| invalid("vocab_sem", e))?;
    let vocab_phone = VocabSpec::load(resolve(&base, &file.vocab_phone)).map_err(|e| invalid("vocab_phone", e))?;
    let lexicon = Lexicon::load(resolve(&base, &file.lexicon)).map_err(|e| invalid("lexicon", e))?;
    let protocols_path = resolve(&base, &file.protocols);
    let protocols: ProtocolsFile = read_json(&protocols_path)?;
    check_schema(protocols.schema_version, &protocols_path).map_err(|e| invalid("protocols", e))?;

    let mut findings = Vec::new();
    if !(file.frame_hop > 0.0 && file.frame_hop.is_finite()) {
        findings.push(Finding::error(
            Category::Schema,
            "manifest",
            format!("frame_hop must be positive, got {}", file.frame_hop),
        ));
    }

    for problem in lexicon.problems(&vocab_phone) {
        findings.push(Finding::error(Category::Lexicon, "lexicon", problem));
    }

    let mut records = file.utterances;
    for r in &mut records {
        r.audio_path = resolve(&base, &r.audio_path);
        for p in [
            &mut r.sem_logits_path,
            &mut r.phone_logits_path,
            &mut r.features_path,
        ]
        .into_iter()
        .flatten()
        {
            *p = resolve(&base, p);
        }
        fill_record(r, &lexicon, &mut findings);
    }

    let mut index = HashMap::new();
    for (i, r) in records.iter().enumerate() {
        if index.insert(r.utterance_id.clone(), i).is_some() {
            findings.push(Finding::error(
                Category::Duplicate,
                &r.utterance_id,
                "duplicate utterance_id",
            ));
        }
        for p in &r.phonemes {
            if vocab_phone.id(p).is_none() {
                findings.push(Finding::error(
                    Category::Lexicon,
                    &r.utterance_id,
                    format!("phoneme {p:?} is not in the phonetic vocab"),
                ));
            }
        }
        let mut files = vec![("audio", &r.audio_path)];
        for (kind, p) in [
            ("semantic posteriors", &r.sem_logits_path),
            ("phonetic posteriors", &r.phone_logits_path),
            ("features", &r.features_path),
        ] {
            if let Some(p) = p {
                files.push((kind, p));
            }
        }
        for (kind, p) in files {
            if !p.exists() {
                findings.push(Finding::warning(
                    Category::MissingFile,
                    &r.utterance_id,
                    format!("{kind} file {} not found", p.display()),
                ));
            }
        }
    }

    let lm_path = file.lm.as_ref().map(|p| resolve(&base, p));
    let corpus = Corpus {
        base_dir: base,
        dataset: file.dataset,
        language: file.language,
        frame_hop: file.frame_hop,
        records,
        protocols: protocols.protocols,
        lexicon,
        vocab_sem,
        vocab_phone,
        lm_path,
        warnings: Vec::new(),
        index,
    };
    validate_protocols(&corpus, &mut findings);
    findings.sort();
    findings.dedup();
    Ok((corpus, findings))
}

fn fill_record(r: &mut UtteranceRecord, lexicon: &Lexicon, findings: &mut Vec<Finding>) {
    let key = content_key(&r.transcript);
    if r.content_key.is_empty() {
        r.content_key = key;
    } else if r.content_key != key {
        findings.push(Finding::error(
            Category::Content,
            &r.utterance_id,
            format!(
                "content_key {:?} does not match normalised transcript {key:?}",
                r.content_key
            ),
        ));
    }
    if r.phonemes.is_empty() && !r.content_key.is_empty() {
        let ws = r.words();
        match pronounce_all(&ws, lexicon) {
            Some(p) => r.phonemes = p,
            None => {
                let missing: Vec<_> = ws
                    .iter()
                    .filter(|w| lexicon.pronounce(w).is_none())
                    .cloned()
                    .collect();
                findings.push(Finding::error(
                    Category::Lexicon,
                    &r.utterance_id,
                    format!("no pronunciation for {missing:?}"),
                ));
            }
        }
    }
}

fn validate_protocols(corpus: &Corpus, findings: &mut Vec<Finding>) {
    let mut names = HashSet::new();
    for p in &corpus.protocols {
        if !names.insert(p.name.as_str()) {
            findings.push(Finding::error(
                Category::Duplicate,
                &p.name,
                "duplicate protocol name",
            ));
        }
        let mut seen = HashSet::new();
        for id in &p.utterance_ids {
            if !seen.insert(id) {
                findings.push(Finding::error(
                    Category::Duplicate,
                    &p.name,
                    format!("utterance {id:?} listed twice"),
                ));
            }
            let Some(r) = corpus.record(id) else {
                findings.push(Finding::error(
                    Category::Protocol,
                    &p.name,
                    format!("unknown utterance {id:?}"),
                ));
                continue;
            };
            if r.stimulus != p.stimulus {
                findings.push(Finding::error(
                    Category::Protocol,
                    &p.name,
                    format!("utterance {id:?} is a {} but the protocol is {}", r.stimulus, p.stimulus),
                ));
            }
            if r.group == Group::Pathological && !p.speaker_targets.contains_key(&r.speaker_id) {
                findings.push(Finding::error(
                    Category::Target,
                    &p.name,
                    format!("speaker {:?} (utterance {id:?}) has no target", r.speaker_id),
                ));
            }
        }
        for (spk, v) in &p.speaker_targets {
            if !v.is_finite() {
                findings.push(Finding::error(
                    Category::Target,
                    &p.name,
                    format!("target for {spk:?} is not finite"),
                ));
            }
        }
    }

    // MC ⊆ EX ⊆ Full within each (dataset, stimulus).
    let mut groups: BTreeMap<(&str, Stimulus), Vec<&ProtocolSpec>> = BTreeMap::new();
    for p in &corpus.protocols {
        groups.entry((&p.dataset, p.stimulus)).or_default().push(p);
    }
    for ps in groups.values() {
        for inner in ps {
            for outer in ps {
                if inner.condition >= outer.condition {
                    continue;
                }
                let outer_ids: BTreeSet<&String> = outer.utterance_ids.iter().collect();
                let missing: Vec<&String> = inner
                    .utterance_ids
                    .iter()
                    .filter(|id| !outer_ids.contains(id))
                    .collect();
                if !missing.is_empty() {
                    findings.push(Finding::error(
                        Category::Subset,
                        &inner.name,
                        format!(
                            "{} protocol is not a subset of {} protocol {:?}: {} utterance(s) missing, e.g. {:?}",
                            inner.condition,
                            outer.condition,
                            outer.name,
                            missing.len(),
                            missing[0]
                        ),
                    ));
                }
            }
        }
    }
}

/// Controls whose content key equals the target's, ordered by speaker id
/// (then utterance id). An empty result is a valid outcome.
pub fn match_parallel<'a>(
    target: &UtteranceRecord,
    pool: &[&'a UtteranceRecord],
) -> Vec<&'a UtteranceRecord> {
    let mut out: Vec<&UtteranceRecord> = pool
        .iter()
        .copied()
        .filter(|c| c.group == Group::Control && c.content_key == target.content_key)
        .collect();
    out.sort_by(|a, b| {
        (a.speaker_id.as_str(), a.utterance_id.as_str())
            .cmp(&(b.speaker_id.as_str(), b.utterance_id.as_str()))
    });
    out
}

/// Serialises a manifest document.
pub fn save_manifest(path: impl AsRef<Path>, file: &ManifestFile) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(file).expect("manifest serialises");
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn save_protocols(path: impl AsRef<Path>, protocols: &[ProtocolSpec]) -> Result<()> {
    let path = path.as_ref();
    let file = ProtocolsFile {
        schema_version: super::SCHEMA_VERSION,
        protocols: protocols.to_vec(),
    };
    let text = serde_json::to_string_pretty(&file).expect("protocols serialise");
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
