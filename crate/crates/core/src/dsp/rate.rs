//! Syllable-nucleus speech rate.
//!
//! Nuclei are peaks of the intensity contour that rise above
//! `max(median, max - 25 dB)`, are separated from neighbouring peaks by a
//! dip of at least 2 dB (otherwise the lower peak is merged into the higher
//! one) and fall on a voiced pitch frame.

use super::pitch::track_pitch;
use super::{hann, median, AudioBuffer, SAMPLE_RATE};
use crate::config::PitchConfig;
use crate::error::{Error, Result};

const WINDOW: f64 = 0.064;
const HOP: f64 = 0.016;
const SILENCE_FLOOR_DB: f64 = 25.0;
const MIN_DIP_DB: f64 = 2.0;
const MIN_DURATION: f64 = 0.3;
const DB_FLOOR: f64 = -300.0;

/// Intensity contour in dB: (frame centre times, levels).
pub fn intensity_contour(audio: &AudioBuffer) -> (Vec<f64>, Vec<f64>) {
    let fs = SAMPLE_RATE as f64;
    let win = (WINDOW * fs) as usize;
    let hop = (HOP * fs) as usize;
    let x = audio.as_f64();
    if x.len() < win {
        return (Vec::new(), Vec::new());
    }
    let w = hann(win);
    let wsum: f64 = w.iter().sum();
    let n = (x.len() - win) / hop + 1;
    (0..n)
        .map(|i| {
            let seg = &x[i * hop..i * hop + win];
            let mean = seg.iter().sum::<f64>() / win as f64;
            let power = seg
                .iter()
                .zip(&w)
                .map(|(v, wv)| wv * (v - mean).powi(2))
                .sum::<f64>()
                / wsum;
            let db = if power > 0.0 {
                (10.0 * power.log10()).max(DB_FLOOR)
            } else {
                DB_FLOOR
            };
            ((i * hop) as f64 / fs + WINDOW / 2.0, db)
        })
        .unzip()
}

/// Indices of intensity peaks that survive thresholding and dip merging.
pub fn syllable_peaks(level: &[f64]) -> Vec<usize> {
    if level.is_empty() {
        return Vec::new();
    }
    let max = level.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max <= DB_FLOOR {
        return Vec::new();
    }
    let threshold = median(level).max(max - SILENCE_FLOOR_DB);
    let n = level.len();
    let candidates = (0..n).filter(|&i| {
        let left = if i == 0 { f64::NEG_INFINITY } else { level[i - 1] };
        let right = if i + 1 == n { f64::NEG_INFINITY } else { level[i + 1] };
        level[i] >= threshold && level[i] > left && level[i] >= right
    });

    let mut kept: Vec<usize> = Vec::new();
    for c in candidates {
        let mut cur = c;
        while let Some(&top) = kept.last() {
            let dip = level[top..=cur].iter().cloned().fold(f64::INFINITY, f64::min);
            if level[top].min(level[cur]) - dip >= MIN_DIP_DB {
                break;
            }
            kept.pop();
            cur = if level[top] >= level[cur] { top } else { cur };
        }
        kept.push(cur);
    }
    kept
}

/// Syllables per second over the whole buffer.
pub fn speech_rate(audio: &AudioBuffer, pitch: &PitchConfig) -> Result<f64> {
    if audio.duration() < MIN_DURATION {
        return Err(Error::undefined(format!(
            "audio too short for speech rate ({:.3} s)",
            audio.duration()
        )));
    }
    let (times, level) = intensity_contour(audio);
    let peaks = syllable_peaks(&level);
    if peaks.is_empty() {
        return Ok(0.0);
    }
    let contour = match track_pitch(audio, pitch) {
        Ok(c) => c,
        Err(Error::Undefined(_)) => return Ok(0.0),
        Err(e) => return Err(e),
    };
    let nuclei = peaks
        .iter()
        .filter(|&&p| contour.is_voiced_at(times[p]))
        .count();
    Ok(nuclei as f64 / audio.duration())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::testsig;

    fn rate(x: Vec<f32>) -> f64 {
        speech_rate(&AudioBuffer::new(x).unwrap(), &PitchConfig::default()).unwrap()
    }

    fn bursts(n: usize, on: f64, off: f64) -> Vec<f32> {
        let v = testsig::vowel(130.0, &[(600.0, 80.0), (1100.0, 100.0)], on);
        let gap = vec![0.0f32; (off * testsig::FS) as usize];
        let mut out = Vec::new();
        for _ in 0..n {
            out.extend_from_slice(&v);
            out.extend_from_slice(&gap);
        }
        out
    }

    #[test]
    fn silence_has_zero_rate() {
        assert_eq!(rate(vec![0.0; 16000]), 0.0);
    }

    #[test]
    fn five_bursts_over_one_and_a_half_seconds() {
        let r = rate(bursts(5, 0.15, 0.15));
        assert!((r - 5.0 / 1.5).abs() <= 0.7, "{r}");
    }

    #[test]
    fn one_continuous_vowel_is_one_nucleus() {
        let r = rate(testsig::vowel(130.0, &[(600.0, 80.0), (1100.0, 100.0)], 1.0));
        assert!((r - 1.0).abs() <= 0.5, "{r}");
    }

    #[test]
    fn unvoiced_bursts_are_not_counted() {
        let mut x = Vec::new();
        for s in 0..4 {
            x.extend(testsig::noise(0.15, 0.3, s));
            x.extend(vec![0.0f32; 2400]);
        }
        assert!(rate(x) <= 1.0);
    }

    #[test]
    fn exactly_invariant_to_amplitude() {
        let x = bursts(4, 0.12, 0.1);
        let base = rate(x.clone());
        for k in [0.1f32, 0.37, 1.0] {
            assert_eq!(rate(x.iter().map(|v| v * k).collect()), base);
        }
    }

    #[test]
    fn shallow_dips_merge_peaks() {
        let level = vec![-50.0, -10.0, -11.0, -10.5, -40.0, -9.0, -60.0];
        // -10 and -10.5 are separated by a 1 dB dip and merge; -9 stands alone.
        assert_eq!(syllable_peaks(&level), vec![1, 5]);
    }

    #[test]
    fn too_short_is_undefined() {
        let err = speech_rate(&AudioBuffer::new(vec![0.1; 1000]).unwrap(), &PitchConfig::default());
        assert!(matches!(err, Err(Error::Undefined(_))));
    }
}
