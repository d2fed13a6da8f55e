//! Named intelligibility estimators.
//!
//! Every estimator implements [`Metric`] and is looked up by name in a
//! [`MetricRegistry`]. A metric returns `Err(Error::Undefined)` when an
//! input cannot be scored; the harness records that as an undefined score
//! instead of failing the run.

pub mod dtw;
pub mod estoi;
mod model;
pub mod nad;
mod signal;
pub mod text;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::ctc::{force_align, PosteriorMatrix};
use crate::dsp::{trim_silence, AudioBuffer, Trimmed, WadaTable};
use crate::error::{Error, Result};
use crate::io::manifest::{match_parallel, Corpus, Polarity, UtteranceRecord};
use crate::io::{read_tensor, Tensor2D};
use crate::lm::NGramModel;

pub use estoi::p_estoi;
pub use nad::nad;
pub use text::{asric, edit_distance, per};

/// Method family, used to stratify protocol comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Family {
    Signal,
    Model,
    Text,
    Audio,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Signal => "Signal",
            Family::Model => "Model",
            Family::Text => "Text",
            Family::Audio => "Audio",
        })
    }
}

/// Whether a metric is computed per utterance or once per speaker.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Utterance,
    Speaker,
}

/// A defined score plus free-form diagnostics.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scored {
    pub value: f64,
    pub diagnostics: BTreeMap<String, String>,
}

impl Scored {
    pub fn new(value: f64) -> Self {
        Self {
            value,
            diagnostics: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl fmt::Display) -> Self {
        self.diagnostics.insert(key.to_string(), value.to_string());
        self
    }
}

/// Per-utterance result row. Speaker-level metrics use `"*"` as utterance id.
#[derive(Debug, Clone, PartialEq)]
pub struct UtteranceScore {
    pub utterance_id: String,
    pub speaker_id: String,
    pub metric: String,
    pub value: Option<f64>,
    pub reason: Option<String>,
    pub polarity: Polarity,
    pub diagnostics: BTreeMap<String, String>,
}

impl UtteranceScore {
    pub fn from_result(
        utterance_id: &str,
        speaker_id: &str,
        metric: &dyn Metric,
        result: Result<Scored>,
    ) -> Result<Self> {
        let (value, reason, diagnostics) = match result {
            Ok(s) if s.value.is_finite() => (Some(s.value), None, s.diagnostics),
            Ok(s) => (None, Some(format!("non-finite value {}", s.value)), s.diagnostics),
            Err(Error::Undefined(u)) => (None, Some(u.reason), BTreeMap::new()),
            Err(e) => return Err(e),
        };
        Ok(Self {
            utterance_id: utterance_id.to_string(),
            speaker_id: speaker_id.to_string(),
            metric: metric.name().to_string(),
            value,
            reason,
            polarity: metric.polarity(),
            diagnostics,
        })
    }

    pub fn is_defined(&self) -> bool {
        self.value.is_some()
    }
}

/// Artifacts and settings shared by every metric in one protocol run.
pub struct ScoringContext<'a> {
    pub corpus: &'a Corpus,
    pub config: &'a Config,
    pub lm: Option<&'a NGramModel>,
    pub wada: &'a WadaTable,
    /// Candidate reference recordings (controls of the protocol).
    pub pool: Vec<&'a UtteranceRecord>,
}

fn missing_is_undefined<T>(what: &str, path: &Path, r: Result<T>) -> Result<T> {
    match r {
        Err(Error::Io { source, .. }) if source.kind() == std::io::ErrorKind::NotFound => Err(
            Error::undefined(format!("{what} file {} not found", path.display())),
        ),
        other => other,
    }
}

impl<'a> ScoringContext<'a> {
    pub fn audio(&self, rec: &UtteranceRecord) -> Result<AudioBuffer> {
        missing_is_undefined("audio", &rec.audio_path, AudioBuffer::from_wav(&rec.audio_path))
    }

    fn tensor(&self, what: &str, path: Option<&Path>) -> Result<Tensor2D> {
        let path = path.ok_or_else(|| Error::undefined(format!("no {what} path in manifest")))?;
        missing_is_undefined(what, path, read_tensor(path))
    }

    pub fn sem_posteriors(&self, rec: &UtteranceRecord) -> Result<PosteriorMatrix> {
        let t = self.tensor("semantic posterior", rec.sem_logits_path.as_deref())?;
        PosteriorMatrix::new(t, self.corpus.vocab_sem.clone(), self.corpus.frame_hop)
    }

    pub fn phone_posteriors(&self, rec: &UtteranceRecord) -> Result<PosteriorMatrix> {
        let t = self.tensor("phonetic posterior", rec.phone_logits_path.as_deref())?;
        PosteriorMatrix::new(t, self.corpus.vocab_phone.clone(), self.corpus.frame_hop)
    }

    pub fn features(&self, rec: &UtteranceRecord) -> Result<Tensor2D> {
        self.tensor("feature", rec.features_path.as_deref())
    }

    pub fn lm(&self) -> Result<&'a NGramModel> {
        self.lm
            .ok_or_else(|| Error::Config("this metric needs an `lm` entry in the manifest".into()))
    }

    /// Phoneme ids of a label sequence in the phonetic vocabulary.
    pub fn phone_ids(&self, phones: &[String]) -> Result<Vec<usize>> {
        let vocab = &self.corpus.vocab_phone;
        phones
            .iter()
            .map(|p| {
                vocab
                    .id(p)
                    .ok_or_else(|| Error::InvalidInput(format!("phoneme {p:?} not in phonetic vocab")))
            })
            .collect()
    }

    /// Audio with leading and trailing silence removed by aligning the
    /// reference phonemes to the phonetic posteriors. Falls back to the raw
    /// audio when no alignment is available.
    pub fn trimmed_audio(&self, rec: &UtteranceRecord) -> Result<Trimmed> {
        let audio = self.audio(rec)?;
        let untrimmed = |audio: AudioBuffer| Trimmed { audio, frames: None };
        if rec.phonemes.is_empty() {
            return Ok(untrimmed(audio));
        }
        let post = match self.phone_posteriors(rec) {
            Ok(p) => p,
            Err(Error::Undefined(_)) => return Ok(untrimmed(audio)),
            Err(e) => return Err(e),
        };
        let path = match force_align(&post, &self.phone_ids(&rec.phonemes)?) {
            Ok(p) => p,
            Err(Error::Undefined(_)) => return Ok(untrimmed(audio)),
            Err(e) => return Err(e),
        };
        trim_silence(&audio, &path, &self.corpus.vocab_phone, self.corpus.frame_hop)
    }

    /// Parallel control recordings of `rec`, excluding its own speaker.
    pub fn references(&self, rec: &UtteranceRecord) -> Vec<&'a UtteranceRecord> {
        let pool: Vec<&UtteranceRecord> = self
            .pool
            .iter()
            .copied()
            .filter(|c| c.speaker_id != rec.speaker_id)
            .collect();
        match_parallel(rec, &pool)
    }
}

pub trait Metric: Send + Sync {
    fn name(&self) -> &'static str;
    fn family(&self) -> Family;
    fn polarity(&self) -> Polarity;

    fn level(&self) -> Level {
        Level::Utterance
    }

    fn score(&self, ctx: &ScoringContext, rec: &UtteranceRecord) -> Result<Scored>;

    /// Speaker-level score over pooled recordings; only called when
    /// [`Metric::level`] is [`Level::Speaker`].
    fn score_speaker(&self, _ctx: &ScoringContext, _recs: &[&UtteranceRecord]) -> Result<Scored> {
        Err(Error::InvalidInput(format!("{} is not a speaker-level metric", self.name())))
    }
}

/// Metrics by name, in registration order.
#[derive(Clone, Default)]
pub struct MetricRegistry {
    metrics: Vec<Arc<dyn Metric>>,
}

impl MetricRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_defaults() -> Self {
        let mut r = Self::new();
        r.register(Arc::new(signal::SpeechRate));
        r.register(Arc::new(signal::Cpp));
        r.register(Arc::new(signal::F0Std));
        r.register(Arc::new(signal::Vsa));
        r.register(Arc::new(model::Confidence));
        r.register(Arc::new(model::Asric));
        r.register(Arc::new(model::Dartp));
        r.register(Arc::new(model::PerSem));
        r.register(Arc::new(model::PerPhone));
        r.register(Arc::new(model::Artp));
        r.register(Arc::new(estoi::PEstoi));
        r.register(Arc::new(nad::Nad));
        r
    }

    /// Adds a metric, replacing any earlier one with the same name.
    pub fn register(&mut self, metric: Arc<dyn Metric>) {
        match self.metrics.iter().position(|m| m.name() == metric.name()) {
            Some(i) => self.metrics[i] = metric,
            None => self.metrics.push(metric),
        }
    }

    pub fn get(&self, name: &str) -> Option<Arc<dyn Metric>> {
        self.metrics.iter().find(|m| m.name() == name).cloned()
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.metrics.iter().map(|m| m.name()).collect()
    }

    pub fn all(&self) -> Vec<Arc<dyn Metric>> {
        self.metrics.clone()
    }

    /// Resolves a selection; an unknown name is a config error listing the
    /// registered ones.
    pub fn select<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<Arc<dyn Metric>>> {
        names
            .iter()
            .map(|n| {
                self.get(n.as_ref()).ok_or_else(|| {
                    Error::Config(format!(
                        "unknown metric {:?}; registered metrics: {}",
                        n.as_ref(),
                        self.names().join(", ")
                    ))
                })
            })
            .collect()
    }
}
