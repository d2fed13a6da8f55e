//! Signal-level features over 16 kHz mono audio.

pub mod cepstrum;
pub mod formant;
pub mod pitch;
pub mod rate;
pub mod resample;
pub mod trim;
pub mod vsa;
pub mod wada;

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub use cepstrum::cpp;
pub use formant::{estimate_formants, FormantFrame, FormantTrack};
pub use pitch::{f0_semitone_std, track_pitch, PitchContour};
pub use rate::speech_rate;
pub use resample::resample_to_16k;
pub use trim::{trim_silence, Trimmed};
pub use vsa::vsa;
pub use wada::{wada_snr, WadaTable};

pub const SAMPLE_RATE: u32 = 16_000;

/// Mono audio at 16 kHz.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f32>,
}

impl AudioBuffer {
    /// Wraps samples that are already at 16 kHz.
    pub fn new(samples: Vec<f32>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidInput("empty audio".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidInput("non-finite audio sample".into()));
        }
        Ok(Self { samples })
    }

    /// Reads a mono WAV file and resamples it to 16 kHz.
    pub fn from_wav(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let (samples, rate) = crate::io::wav::read_wav(path)?;
        resample_to_16k(&samples, rate)
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        SAMPLE_RATE
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / SAMPLE_RATE as f64
    }

    pub fn into_samples(self) -> Vec<f32> {
        self.samples
    }

    pub(crate) fn as_f64(&self) -> Vec<f64> {
        self.samples.iter().map(|&s| s as f64).collect()
    }
}

pub(crate) fn hann(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

pub(crate) fn fft_forward(n: usize) -> Arc<dyn Fft<f64>> {
    FftPlanner::new().plan_fft_forward(n)
}

pub(crate) fn fft_inverse(n: usize) -> Arc<dyn Fft<f64>> {
    FftPlanner::new().plan_fft_inverse(n)
}

/// Zero-padded forward FFT of a real signal.
pub(crate) fn real_fft(x: &[f64], n: usize, plan: &dyn Fft<f64>) -> Vec<Complex<f64>> {
    let mut buf: Vec<Complex<f64>> = x
        .iter()
        .take(n)
        .map(|&v| Complex::new(v, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(n)
        .collect();
    plan.process(&mut buf);
    buf
}

pub(crate) fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
