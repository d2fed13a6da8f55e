//! Intelligibility metrics and benchmark harness for pathological speech.
//!
//! The crate is organised bottom-up:
//!
//! - [`io`]: tensor files, manifests, vocabularies, lexicon, WAV input.
//! - [`dsp`]: signal features (CPP, pitch, speech rate, formants, VSA, WADA SNR).
//! - [`lm`]: ARPA n-gram parsing and backoff scoring.
//! - [`ctc`]: greedy and LM-fused beam decoding, forced alignment, articulatory precision.
//! - [`metrics`]: named intelligibility estimators behind the [`metrics::Metric`] trait,
//!   collected in a [`metrics::MetricRegistry`].
//! - [`harness`]: speaker aggregation, correlation, Wilcoxon comparisons, reports.
//! - [`commands`]: the validate / score / report entry points shared with the CLI.

pub mod commands;
pub mod config;
pub mod ctc;
pub mod dsp;
pub mod error;
pub mod harness;
pub mod io;
pub mod lm;
pub mod metrics;
pub mod synth;

pub use config::Config;
pub use error::{Error, Result, Undefined};
