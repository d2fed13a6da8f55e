//! Rational-ratio polyphase resampling with a Kaiser-windowed sinc kernel.

use super::{AudioBuffer, SAMPLE_RATE};
use crate::error::{Error, Result};

const MIN_RATE: u32 = 8_000;
const MAX_RATE: u32 = 96_000;
/// Zero crossings of the sinc on each side of the kernel centre.
const ZERO_CROSSINGS: f64 = 32.0;
/// Passband edge as a fraction of the lower Nyquist frequency.
const ROLLOFF: f64 = 0.95;
const KAISER_BETA: f64 = 8.6;

pub fn resample_to_16k(samples: &[f32], src_rate: u32) -> Result<AudioBuffer> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("empty audio".into()));
    }
    if !(MIN_RATE..=MAX_RATE).contains(&src_rate) {
        return Err(Error::InvalidInput(format!(
            "unsupported sample rate {src_rate} Hz (expected {MIN_RATE}..={MAX_RATE})"
        )));
    }
    if src_rate == SAMPLE_RATE {
        return AudioBuffer::new(samples.to_vec());
    }
    AudioBuffer::new(resample(samples, src_rate, SAMPLE_RATE))
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Modified Bessel function of the first kind, order zero.
fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let q = x * x / 4.0;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn resample(x: &[f32], from: u32, to: u32) -> Vec<f32> {
    let g = gcd(from as u64, to as u64);
    let up = (to as u64 / g) as usize;
    let down = (from as u64 / g) as usize;

    // Cutoff in cycles per input sample.
    let cutoff = 0.5 * ROLLOFF * (to.min(from) as f64 / from as f64);
    let half_width = ZERO_CROSSINGS / (2.0 * cutoff);
    let taps_per_side = half_width.ceil() as isize;
    let width = 2 * taps_per_side as usize;
    let i0_beta = bessel_i0(KAISER_BETA);

    // taps[phase][j] weights input sample base - taps_per_side + 1 + j for an
    // output whose exact position is base + phase / up.
    let taps: Vec<Vec<f64>> = (0..up)
        .map(|phase| {
            let frac = phase as f64 / up as f64;
            (0..width)
                .map(|j| {
                    let k = j as isize - taps_per_side + 1;
                    let t = frac - k as f64;
                    if t.abs() >= half_width {
                        return 0.0;
                    }
                    let arg = 2.0 * cutoff * t;
                    let sinc = if arg == 0.0 {
                        1.0
                    } else {
                        (std::f64::consts::PI * arg).sin() / (std::f64::consts::PI * arg)
                    };
                    let r = t / half_width;
                    let window = bessel_i0(KAISER_BETA * (1.0 - r * r).max(0.0).sqrt()) / i0_beta;
                    2.0 * cutoff * sinc * window
                })
                .collect()
        })
        .collect();

    let out_len = (x.len() * up).div_ceil(down);
    (0..out_len)
        .map(|n| {
            let pos = n * down;
            let base = (pos / up) as isize;
            let phase = pos % up;
            let kernel = &taps[phase];
            let mut acc = 0.0;
            for (j, &w) in kernel.iter().enumerate() {
                let idx = base - taps_per_side + 1 + j as isize;
                if idx >= 0 && (idx as usize) < x.len() {
                    acc += w * x[idx as usize] as f64;
                }
            }
            acc as f32
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::testsig;
    use rustfft::num_complex::Complex;

    fn sine_at(freq: f64, rate: u32, secs: f64) -> Vec<f32> {
        let n = (secs * rate as f64) as usize;
        (0..n)
            .map(|i| (0.8 * (2.0 * std::f64::consts::PI * freq * i as f64 / rate as f64).sin()) as f32)
            .collect()
    }

    /// Independent check: frequency of the largest DFT magnitude.
    fn dominant_freq(x: &[f32], rate: f64) -> f64 {
        let n = x.len();
        let plan = rustfft::FftPlanner::new().plan_fft_forward(n);
        let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v as f64, 0.0)).collect();
        plan.process(&mut buf);
        let (k, _) = buf[..n / 2]
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap();
        k as f64 * rate / n as f64
    }

    #[test]
    fn passes_16k_through_unchanged() {
        let x = testsig::noise(0.1, 0.3, 1);
        let y = resample_to_16k(&x, 16_000).unwrap();
        assert_eq!(y.samples(), x.as_slice());
    }

    #[test]
    fn downsamples_48k_sine() {
        let x = sine_at(440.0, 48_000, 1.0);
        let y = resample_to_16k(&x, 48_000).unwrap();
        assert!((y.len() as i64 - 16_000).abs() <= 1, "len {}", y.len());
        let f = dominant_freq(y.samples(), 16_000.0);
        assert!((f - 440.0).abs() <= 1.0, "{f}");
        // Peak away from the edge transients.
        let peak = y.samples()[2000..14000].iter().fold(0.0f32, |m, v| m.max(v.abs()));
        assert!((peak / 0.8 - 1.0).abs() < 0.01, "peak {peak}");
    }

    #[test]
    fn upsamples_and_handles_awkward_ratios() {
        for rate in [8_000u32, 22_050, 44_100, 96_000] {
            let x = sine_at(300.0, rate, 0.5);
            let y = resample_to_16k(&x, rate).unwrap();
            let expect = (x.len() as f64 * 16_000.0 / rate as f64).ceil() as usize;
            assert_eq!(y.len(), expect, "rate {rate}");
            let peak = y.samples()[1000..7000].iter().fold(0.0f32, |m, v| m.max(v.abs()));
            assert!((peak / 0.8 - 1.0).abs() < 0.01, "rate {rate}: peak {peak}");
            assert!((dominant_freq(y.samples(), 16_000.0) - 300.0).abs() <= 2.0);
        }
    }

    #[test]
    fn rejects_empty_and_out_of_range() {
        assert!(resample_to_16k(&[], 16_000).is_err());
        assert!(resample_to_16k(&[0.0; 10], 4_000).is_err());
        assert!(resample_to_16k(&[0.0; 10], 192_000).is_err());
    }
}
