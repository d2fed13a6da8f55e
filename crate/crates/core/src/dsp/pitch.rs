//! Autocorrelation pitch tracking with Viterbi path selection.
//!
//! Per frame (window of three periods of the pitch floor, 10 ms hop), the
//! Hann-windowed autocorrelation is divided by the window's own
//! autocorrelation, local maxima in the admissible lag range are refined by
//! parabolic interpolation, and each becomes a voiced candidate. Every frame
//! also carries an unvoiced candidate whose strength rises for quiet frames.
//! A Viterbi pass then trades candidate strength against voicing changes
//! and octave jumps.

use super::{fft_forward, fft_inverse, hann, real_fft, AudioBuffer, SAMPLE_RATE};
use crate::config::PitchConfig;
use crate::error::{Error, Result};

pub const FRAME_HOP: f64 = 0.01;
const MAX_CANDIDATES: usize = 15;
const SEMITONE_REF_HZ: f64 = 100.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PitchContour {
    pub frame_hop: f64,
    /// Frame centre times in seconds.
    pub times: Vec<f64>,
    /// Hz per frame; 0 marks unvoiced.
    pub f0: Vec<f64>,
}

impl PitchContour {
    pub fn voiced(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times
            .iter()
            .zip(&self.f0)
            .filter(|(_, &f)| f > 0.0)
            .map(|(&t, &f)| (t, f))
    }

    pub fn voiced_count(&self) -> usize {
        self.f0.iter().filter(|&&f| f > 0.0).count()
    }

    /// Whether the frame nearest to `t` is voiced.
    pub fn is_voiced_at(&self, t: f64) -> bool {
        if self.times.is_empty() {
            return false;
        }
        let idx = ((t - self.times[0]) / self.frame_hop).round();
        let idx = idx.clamp(0.0, (self.times.len() - 1) as f64) as usize;
        self.f0[idx] > 0.0
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    freq: f64,
    strength: f64,
}

pub fn track_pitch(audio: &AudioBuffer, cfg: &PitchConfig) -> Result<PitchContour> {
    let (floor, ceil) = (cfg.floor_hz, cfg.ceil_hz);
    if !(floor > 0.0 && floor < ceil && ceil < SAMPLE_RATE as f64 / 2.0) {
        return Err(Error::InvalidInput(format!(
            "pitch range {floor}..{ceil} Hz is invalid"
        )));
    }
    let fs = SAMPLE_RATE as f64;
    let win = (3.0 / floor * fs).round() as usize;
    let hop = (FRAME_HOP * fs).round() as usize;
    let x = audio.as_f64();
    if x.len() < win {
        return Err(Error::undefined(format!(
            "audio too short for pitch tracking ({} samples < {win})",
            x.len()
        )));
    }

    let nfft = (2 * win).next_power_of_two();
    let fwd = fft_forward(nfft);
    let inv = fft_inverse(nfft);
    let window = hann(win);
    let autocorr = |seg: &[f64]| -> Vec<f64> {
        let mut spec = real_fft(seg, nfft, fwd.as_ref());
        for c in spec.iter_mut() {
            *c = rustfft::num_complex::Complex::new(c.norm_sqr(), 0.0);
        }
        inv.process(&mut spec);
        spec.iter().map(|c| c.re / nfft as f64).collect()
    };
    let window_ac = autocorr(&window);

    let min_lag = ((fs / ceil).floor() as usize).max(2);
    let max_lag = ((fs / floor).ceil() as usize).min(win / 2);
    let global_peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let n_frames = (x.len() - win) / hop + 1;

    let mut times = Vec::with_capacity(n_frames);
    let mut frames: Vec<Vec<Candidate>> = Vec::with_capacity(n_frames);
    for i in 0..n_frames {
        let start = i * hop;
        times.push((start as f64 + win as f64 / 2.0) / fs);
        let seg = &x[start..start + win];
        let mean = seg.iter().sum::<f64>() / win as f64;
        let centred: Vec<f64> = seg.iter().map(|v| v - mean).collect();
        let local_peak = centred.iter().fold(0.0f64, |m, v| m.max(v.abs()));

        let unvoiced_strength = if global_peak > 0.0 {
            let rel = local_peak / global_peak;
            cfg.voicing_threshold
                + (2.0 - rel / (cfg.silence_threshold / (1.0 + cfg.voicing_threshold))).max(0.0)
        } else {
            cfg.voicing_threshold + 2.0
        };
        let mut cands = vec![Candidate {
            freq: 0.0,
            strength: unvoiced_strength,
        }];

        let windowed: Vec<f64> = centred.iter().zip(&window).map(|(a, b)| a * b).collect();
        let ac = autocorr(&windowed);
        if ac[0] > 0.0 {
            let r: Vec<f64> = (0..=max_lag + 1)
                .map(|lag| (ac[lag] / ac[0]) / (window_ac[lag] / window_ac[0]))
                .collect();
            let mut voiced: Vec<Candidate> = Vec::new();
            for lag in min_lag..=max_lag {
                let (a, b, c) = (r[lag - 1], r[lag], r[lag + 1]);
                if !(b > a && b >= c) {
                    continue;
                }
                let denom = a - 2.0 * b + c;
                let delta = if denom != 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
                let mut strength = b - 0.25 * (a - c) * delta;
                if strength > 1.0 {
                    strength = 1.0 / strength;
                }
                let period = (lag as f64 + delta) / fs;
                let freq = 1.0 / period;
                if strength < cfg.voicing_threshold || freq < floor || freq > ceil {
                    continue;
                }
                voiced.push(Candidate {
                    freq,
                    strength: strength - cfg.octave_cost * (floor * period).log2(),
                });
            }
            voiced.sort_by(|a, b| b.strength.total_cmp(&a.strength));
            voiced.truncate(MAX_CANDIDATES);
            cands.extend(voiced);
        }
        frames.push(cands);
    }

    let f0 = viterbi(&frames, cfg);
    Ok(PitchContour {
        frame_hop: FRAME_HOP,
        times,
        f0,
    })
}

fn transition_cost(a: &Candidate, b: &Candidate, cfg: &PitchConfig) -> f64 {
    match (a.freq > 0.0, b.freq > 0.0) {
        (false, false) => 0.0,
        (true, true) => cfg.octave_jump_cost * (a.freq / b.freq).log2().abs(),
        _ => cfg.voiced_unvoiced_cost,
    }
}

fn viterbi(frames: &[Vec<Candidate>], cfg: &PitchConfig) -> Vec<f64> {
    let mut score: Vec<f64> = frames[0].iter().map(|c| c.strength).collect();
    let mut back: Vec<Vec<usize>> = vec![vec![0; frames[0].len()]];
    for t in 1..frames.len() {
        let mut next = Vec::with_capacity(frames[t].len());
        let mut bp = Vec::with_capacity(frames[t].len());
        for cur in &frames[t] {
            let (best_j, best) = frames[t - 1]
                .iter()
                .enumerate()
                .map(|(j, prev)| (j, score[j] - transition_cost(prev, cur, cfg)))
                .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
            next.push(best + cur.strength);
            bp.push(best_j);
        }
        score = next;
        back.push(bp);
    }
    let mut idx = score
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &s)| if s > acc.1 { (i, s) } else { acc })
        .0;
    let mut out = vec![0.0; frames.len()];
    for t in (0..frames.len()).rev() {
        out[t] = frames[t][idx].freq;
        idx = back[t][idx];
    }
    out
}

/// Population standard deviation of voiced f0 in semitones.
pub fn f0_semitone_std(contour: &PitchContour) -> Result<f64> {
    let st: Vec<f64> = contour
        .f0
        .iter()
        .filter(|&&f| f > 0.0)
        .map(|f| 12.0 * (f / SEMITONE_REF_HZ).log2())
        .collect();
    if st.len() < 2 {
        return Err(Error::undefined(format!(
            "{} voiced frame(s); at least 2 needed",
            st.len()
        )));
    }
    let m = st.iter().sum::<f64>() / st.len() as f64;
    Ok((st.iter().map(|v| (v - m).powi(2)).sum::<f64>() / st.len() as f64).sqrt())
}
