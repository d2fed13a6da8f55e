//! Cepstral peak prominence.

use rustfft::num_complex::Complex;

use super::{fft_forward, fft_inverse, hann, real_fft, AudioBuffer, SAMPLE_RATE};
use crate::config::{CppConfig, CppVariant};
use crate::error::{Error, Result};

const MIN_DURATION: f64 = 0.05;
/// Regression line starts at this quefrency (seconds).
const REGRESSION_START: f64 = 0.001;
const FRAME_LEN: f64 = 0.04;
const FRAME_HOP: f64 = 0.01;

/// CPP in dB: height of the cepstral peak in the pitch-period band
/// `[1/f0_ceil, 1/f0_floor]` above the least-squares line fitted to the
/// power cepstrum (dB) from 1 ms onwards.
pub fn cpp(audio: &AudioBuffer, cfg: &CppConfig, f0_floor: f64, f0_ceil: f64) -> Result<f64> {
    if audio.duration() < MIN_DURATION {
        return Err(Error::undefined(format!(
            "audio too short for CPP ({:.3} s < {MIN_DURATION} s)",
            audio.duration()
        )));
    }
    let x = audio.as_f64();
    match cfg.variant {
        CppVariant::Utterance => cpp_segment(&x, cfg, f0_floor, f0_ceil),
        CppVariant::FrameAveraged => {
            let fs = SAMPLE_RATE as f64;
            let len = (FRAME_LEN * fs) as usize;
            let hop = (FRAME_HOP * fs) as usize;
            let values: Vec<f64> = (0..)
                .map(|i| i * hop)
                .take_while(|&s| s + len <= x.len())
                .filter_map(|s| cpp_segment(&x[s..s + len], cfg, f0_floor, f0_ceil).ok())
                .collect();
            if values.is_empty() {
                return Err(Error::undefined("no frame with a defined CPP"));
            }
            Ok(values.iter().sum::<f64>() / values.len() as f64)
        }
    }
}

fn cpp_segment(x: &[f64], cfg: &CppConfig, f0_floor: f64, f0_ceil: f64) -> Result<f64> {
    let fs = SAMPLE_RATE as f64;
    let n = x.len();
    let nfft = n.next_power_of_two();
    let w = hann(n);
    let windowed: Vec<f64> = x.iter().zip(&w).map(|(a, b)| a * b).collect();
    let spec = real_fft(&windowed, nfft, fft_forward(nfft).as_ref());

    let power: Vec<f64> = spec.iter().map(|c| c.norm_sqr()).collect();
    let max_power = power.iter().cloned().fold(0.0, f64::max);
    if max_power <= 0.0 {
        return Err(Error::undefined("silent signal has no cepstrum"));
    }
    // Floor relative to the maximum so the log spectrum shifts by a constant
    // under amplitude scaling.
    let floor = max_power * 1e-12;
    let mut log_spec: Vec<Complex<f64>> = power
        .iter()
        .map(|&p| Complex::new(10.0 * p.max(floor).log10(), 0.0))
        .collect();
    fft_inverse(nfft).process(&mut log_spec);

    let half = nfft / 2;
    let mut ceps: Vec<f64> = log_spec[..half]
        .iter()
        .map(|c| (c.re / nfft as f64).powi(2))
        .collect();

    let smooth_bins = (cfg.quefrency_smoothing_ms * 1e-3 * fs / 2.0).round() as usize;
    if smooth_bins > 0 {
        ceps = moving_average(&ceps, smooth_bins);
    }

    let start = (REGRESSION_START * fs).ceil() as usize;
    let lo = (fs / f0_ceil).floor() as usize;
    let hi = ((fs / f0_floor).ceil() as usize).min(half - 1);
    if start + 2 > half || lo >= hi {
        return Err(Error::undefined("signal too short for the pitch quefrency band"));
    }
    let cmax = ceps[1..].iter().cloned().fold(0.0, f64::max);
    let cfloor = cmax * 1e-20;
    let ceps_db: Vec<f64> = ceps
        .iter()
        .map(|&c| 10.0 * c.max(cfloor).max(f64::MIN_POSITIVE).log10())
        .collect();

    let (slope, intercept) = fit_line((start..half).map(|i| (i as f64 / fs, ceps_db[i])));
    let peak = (lo..=hi)
        .max_by(|&a, &b| ceps_db[a].total_cmp(&ceps_db[b]))
        .expect("non-empty band");
    let q = peak as f64 / fs;
    Ok(ceps_db[peak] - (slope * q + intercept))
}

/// Centred moving average of width `2 * half + 1`, shrinking at the edges.
fn moving_average(x: &[f64], half: usize) -> Vec<f64> {
    let mut prefix = Vec::with_capacity(x.len() + 1);
    prefix.push(0.0);
    for v in x {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..x.len())
        .map(|i| {
            let a = i.saturating_sub(half);
            let b = (i + half + 1).min(x.len());
            (prefix[b] - prefix[a]) / (b - a) as f64
        })
        .collect()
}

fn fit_line(points: impl Iterator<Item = (f64, f64)>) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = points.collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
