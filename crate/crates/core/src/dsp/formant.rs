//! Frame-wise F1/F2 from Burg LPC roots.

use nalgebra::DMatrix;

use super::pitch::PitchContour;
use super::{AudioBuffer, SAMPLE_RATE};

const PRE_EMPHASIS: f64 = 0.97;
const LPC_ORDER: usize = 12;
const WINDOW: f64 = 0.025;
const MAX_BANDWIDTH: f64 = 400.0;
const MIN_FREQ: f64 = 90.0;
const MAX_FREQ: f64 = 5500.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormantFrame {
    pub time: f64,
    pub f1: f64,
    pub f2: f64,
}

pub type FormantTrack = Vec<FormantFrame>;

/// Burg's method. Returns `[1, a1, ..., ap]` for the prediction-error
/// filter `A(z) = 1 + a1 z^-1 + ... + ap z^-p`.
pub fn burg(x: &[f64], order: usize) -> Vec<f64> {
    let n = x.len();
    let mut a = vec![0.0; order + 1];
    a[0] = 1.0;
    if n <= order {
        return a;
    }
    let mut f: Vec<f64> = x.to_vec();
    let mut b: Vec<f64> = x.to_vec();
    for m in 0..order {
        let (mut num, mut den) = (0.0, 0.0);
        for i in (m + 1)..n {
            num += f[i] * b[i - 1];
            den += f[i] * f[i] + b[i - 1] * b[i - 1];
        }
        if den <= 0.0 {
            break;
        }
        let k = -2.0 * num / den;
        let prev = a.clone();
        for i in 1..=m + 1 {
            a[i] = prev[i] + k * prev[m + 1 - i];
        }
        for i in ((m + 1)..n).rev() {
            let fi = f[i];
            f[i] = fi + k * b[i - 1];
            b[i] = b[i - 1] + k * fi;
        }
    }
    a
}

/// Complex roots of `z^p + a1 z^(p-1) + ... + ap` via companion-matrix eigenvalues.
fn poly_roots(a: &[f64]) -> Vec<(f64, f64)> {
    let p = a.len() - 1;
    if p == 0 {
        return Vec::new();
    }
    let mut m = DMatrix::<f64>::zeros(p, p);
    for j in 0..p {
        m[(0, j)] = -a[j + 1];
    }
    for i in 1..p {
        m[(i, i - 1)] = 1.0;
    }
    m.complex_eigenvalues().iter().map(|c| (c.re, c.im)).collect()
}

/// Formant candidates (frequency, bandwidth) in Hz, sorted by frequency.
pub fn lpc_formants(frame: &[f64]) -> Vec<(f64, f64)> {
    let fs = SAMPLE_RATE as f64;
    let n = frame.len();
    let emphasized: Vec<f64> = (0..n)
        .map(|i| frame[i] - if i > 0 { PRE_EMPHASIS * frame[i - 1] } else { 0.0 })
        .collect();
    let windowed: Vec<f64> = emphasized
        .iter()
        .enumerate()
        .map(|(i, v)| {
            v * (0.54 - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos())
        })
        .collect();
    let a = burg(&windowed, LPC_ORDER);
    let mut out: Vec<(f64, f64)> = poly_roots(&a)
        .into_iter()
        .filter(|&(_, im)| im > 0.0)
        .map(|(re, im)| {
            let freq = im.atan2(re) * fs / (2.0 * std::f64::consts::PI);
            let bw = -(re.hypot(im)).ln() * fs / std::f64::consts::PI;
            (freq, bw)
        })
        .filter(|&(f, bw)| bw > 0.0 && bw < MAX_BANDWIDTH && f > MIN_FREQ && f < MAX_FREQ)
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// F1 and F2 on every voiced frame of `contour` that yields two valid
/// formant candidates; other frames are dropped.
pub fn estimate_formants(audio: &AudioBuffer, contour: &PitchContour) -> FormantTrack {
    let fs = SAMPLE_RATE as f64;
    let x = audio.as_f64();
    let half = (WINDOW * fs / 2.0).round() as isize;
    contour
        .voiced()
        .filter_map(|(t, _)| {
            let centre = (t * fs).round() as isize;
            let start = (centre - half).max(0) as usize;
            let end = ((centre + half) as usize).min(x.len());
            if end <= start + LPC_ORDER + 1 {
                return None;
            }
            let seg = &x[start..end];
            if seg.iter().all(|&v| v == 0.0) {
                return None;
            }
            let cands = lpc_formants(seg);
            match cands.as_slice() {
                [(f1, _), (f2, _), ..] if f1 < f2 => Some(FormantFrame {
                    time: t,
                    f1: *f1,
                    f2: *f2,
                }),
                _ => None,
            }
        })
        .collect()
}
