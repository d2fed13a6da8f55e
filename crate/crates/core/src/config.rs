//! Run configuration. Loaded from TOML and adjustable with dotted
//! `key=value` overrides such as `pitch.floor_hz=75` or `beam.alpha=0.3`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub pitch: PitchConfig,
    pub cpp: CppConfig,
    pub beam: BeamConfig,
    pub dtw: DtwConfig,
    pub vsa: VsaConfig,
    pub wada: WadaConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PitchConfig {
    pub floor_hz: f64,
    pub ceil_hz: f64,
    pub voicing_threshold: f64,
    pub silence_threshold: f64,
    pub octave_cost: f64,
    pub octave_jump_cost: f64,
    pub voiced_unvoiced_cost: f64,
}

impl Default for PitchConfig {
    fn default() -> Self {
        Self {
            floor_hz: 60.0,
            ceil_hz: 400.0,
            voicing_threshold: 0.45,
            silence_threshold: 0.03,
            octave_cost: 0.01,
            octave_jump_cost: 0.35,
            voiced_unvoiced_cost: 0.14,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CppVariant {
    /// One cepstrum over the whole utterance.
    Utterance,
    /// Mean of per-frame values (40 ms frames, 10 ms hop).
    FrameAveraged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CppConfig {
    pub variant: CppVariant,
    /// Full width of the moving average applied along quefrency; 0 disables it.
    pub quefrency_smoothing_ms: f64,
}

impl Default for CppConfig {
    fn default() -> Self {
        Self {
            variant: CppVariant::Utterance,
            quefrency_smoothing_ms: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeamConfig {
    pub alpha: f64,
    pub beta: f64,
    pub width: usize,
}

impl Default for BeamConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            beta: 1.5,
            width: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameDistance {
    Cosine,
    Euclidean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DtwConfig {
    /// Sakoe-Chiba radius as a fraction of the longer sequence.
    pub radius: f64,
    pub nad_distance: FrameDistance,
}

impl Default for DtwConfig {
    fn default() -> Self {
        Self {
            radius: 0.25,
            nad_distance: FrameDistance::Cosine,
        }
    }
}

/// One corner vowel reference in (F1, F2) Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corner {
    pub vowel: String,
    pub f1: f64,
    pub f2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VsaConfig {
    pub min_frames: usize,
    pub percentile: f64,
    pub corners: BTreeMap<String, Vec<Corner>>,
}

const DEFAULT_CORNERS: &str = include_str!("../data/vsa_corners.toml");

impl Default for VsaConfig {
    fn default() -> Self {
        #[derive(Deserialize)]
        struct Corners {
            corners: BTreeMap<String, Vec<Corner>>,
        }
        let parsed: Corners = toml::from_str(DEFAULT_CORNERS).expect("bundled corner table parses");
        Self {
            min_frames: 50,
            percentile: 0.95,
            corners: parsed.corners,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WadaConfig {
    /// Replacement G→SNR table (CSV with `snr_db,g` rows); bundled table when unset.
    pub table_path: Option<PathBuf>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            pitch: PitchConfig::default(),
            cpp: CppConfig::default(),
            beam: BeamConfig::default(),
            dtw: DtwConfig::default(),
            vsa: VsaConfig::default(),
            wada: WadaConfig::default(),
        }
    }
}

impl Config {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Config =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies `key=value` overrides in order. Values parse as TOML
    /// literals, falling back to a bare string.
    pub fn with_overrides<S: AsRef<str>>(self, overrides: &[S]) -> Result<Self> {
        if overrides.is_empty() {
            return Ok(self);
        }
        let mut root = toml::Value::try_from(&self).map_err(|e| Error::Config(e.to_string()))?;
        for ov in overrides {
            let ov = ov.as_ref();
            let (key, raw) = ov
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override {ov:?} is not key=value")))?;
            let value = parse_value(raw.trim());
            set_dotted(&mut root, key.trim(), value)?;
        }
        let cfg: Config = root
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.pitch;
        if !(p.floor_hz > 0.0 && p.floor_hz < p.ceil_hz) {
            return Err(Error::Config(format!(
                "pitch.floor_hz ({}) must be positive and below pitch.ceil_hz ({})",
                p.floor_hz, p.ceil_hz
            )));
        }
        if !(self.beam.alpha.is_finite() && self.beam.beta.is_finite()) {
            return Err(Error::Config("beam.alpha and beam.beta must be finite".into()));
        }
        if self.beam.width == 0 {
            return Err(Error::Config("beam.width must be at least 1".into()));
        }
        if !(self.dtw.radius > 0.0 && self.dtw.radius <= 1.0) {
            return Err(Error::Config("dtw.radius must be in (0, 1]".into()));
        }
        if !(self.vsa.percentile > 0.0 && self.vsa.percentile <= 1.0) {
            return Err(Error::Config("vsa.percentile must be in (0, 1]".into()));
        }
        Ok(())
    }
}

fn parse_value(raw: &str) -> toml::Value {
    #[derive(Deserialize)]
    struct Wrap {
        v: toml::Value,
    }
    toml::from_str::<Wrap>(&format!("v = {raw}"))
        .map(|w| w.v)
        .unwrap_or_else(|_| toml::Value::String(raw.to_owned()))
}

fn set_dotted(root: &mut toml::Value, key: &str, value: toml::Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    let mut cur = root;
    for (i, part) in parts.iter().enumerate() {
        let table = cur
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("{key}: {part:?} is not a table")))?;
        if i + 1 == parts.len() {
            table.insert((*part).to_owned(), value);
            return Ok(());
        }
        cur = table
            .entry((*part).to_owned())
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    Err(Error::Config(format!("empty override key {key:?}")))
}
