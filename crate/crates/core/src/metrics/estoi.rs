//! P-ESTOI: ESTOI against a DTW-built template of parallel references.
//!
//! References are warped onto the longest one and averaged into a template
//! of one-third-octave band magnitudes. The test utterance is warped onto
//! that template, then scored with ESTOI's spectral correlation over
//! 30-frame segments.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::dtw::{band_radius, dtw};
use super::{Family, Metric, Scored, ScoringContext};
use crate::dsp::{hann, AudioBuffer, SAMPLE_RATE};
use crate::error::{Error, Result};
use crate::io::manifest::{Polarity, UtteranceRecord};

const FRAME: usize = 512;
const HOP: usize = 256;
const BANDS: usize = 15;
const LOWEST_CENTRE: f64 = 150.0;
const SEGMENT: usize = 30;

type Spectrogram = Vec<Vec<f64>>;

/// Frame-by-band magnitude matrix.
pub fn band_spectrogram(audio: &AudioBuffer) -> Spectrogram {
    let mut x = audio.as_f64();
    if x.len() < FRAME {
        x.resize(FRAME, 0.0);
    }
    let window = hann(FRAME);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(FRAME);
    let bin_hz = SAMPLE_RATE as f64 / FRAME as f64;
    let edges: Vec<(usize, usize)> = (0..BANDS)
        .map(|k| {
            let centre = LOWEST_CENTRE * 2f64.powf(k as f64 / 3.0);
            let lo = (centre * 2f64.powf(-1.0 / 6.0) / bin_hz).round() as usize;
            let hi = (centre * 2f64.powf(1.0 / 6.0) / bin_hz).round() as usize;
            (lo, hi.max(lo + 1))
        })
        .collect();
    let n_frames = (x.len() - FRAME) / HOP + 1;
    let mut buf = vec![Complex::new(0.0, 0.0); FRAME];
    (0..n_frames)
        .map(|f| {
            for (i, b) in buf.iter_mut().enumerate() {
                *b = Complex::new(x[f * HOP + i] * window[i], 0.0);
            }
            fft.process(&mut buf);
            edges
                .iter()
                .map(|&(lo, hi)| buf[lo..hi].iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt())
                .collect()
        })
        .collect()
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let ab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let aa: f64 = a.iter().map(|x| x * x).sum();
    let bb: f64 = b.iter().map(|x| x * x).sum();
    match (aa == 0.0, bb == 0.0) {
        (true, true) => 0.0,
        (true, false) | (false, true) => 1.0,
        _ => 1.0 - (ab / (aa.sqrt() * bb.sqrt())).clamp(-1.0, 1.0),
    }
}

/// `seq` warped onto the time axis of `anchor`: each anchor frame gets the
/// mean of the `seq` frames matched to it.
fn warp_onto(anchor: &Spectrogram, seq: &Spectrogram, radius: f64) -> Result<Spectrogram> {
    let band = band_radius(anchor.len(), seq.len(), radius);
    let w = dtw(anchor.len(), seq.len(), Some(band), |i, j| cosine(&anchor[i], &seq[j]))?;
    let mut out = vec![vec![0.0; BANDS]; anchor.len()];
    let mut counts = vec![0usize; anchor.len()];
    for &(i, j) in &w.path {
        for (o, v) in out[i].iter_mut().zip(&seq[j]) {
            *o += v;
        }
        counts[i] += 1;
    }
    for (row, &c) in out.iter_mut().zip(&counts) {
        row.iter_mut().for_each(|v| *v /= c as f64);
    }
    Ok(out)
}

/// Subtracts the mean and scales to unit norm; `None` for a constant vector.
fn standardize(v: &mut [f64]) -> Option<()> {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        v.iter_mut().for_each(|x| *x = 0.0);
        return None;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Some(())
}

/// Row-then-column normalised spectral correlation of one segment, or
/// `None` if no column survives normalisation in both matrices.
fn segment_score(x: &[Vec<f64>], y: &[Vec<f64>]) -> Option<f64> {
    let n = x.len();
    let normalise = |m: &[Vec<f64>]| -> Vec<Option<Vec<f64>>> {
        let mut rows: Vec<Vec<f64>> = (0..BANDS).map(|b| m.iter().map(|f| f[b]).collect()).collect();
        rows.iter_mut().for_each(|r| {
            standardize(r);
        });
        (0..n)
            .map(|t| {
                let mut col: Vec<f64> = rows.iter().map(|r| r[t]).collect();
                standardize(&mut col).map(|_| col)
            })
            .collect()
    };
    let (xs, ys) = (normalise(x), normalise(y));
    let dots: Vec<f64> = xs
        .iter()
        .zip(&ys)
        .filter_map(|(a, b)| Some(a.as_ref()?.iter().zip(b.as_ref()?).map(|(p, q)| p * q).sum()))
        .collect();
    (!dots.is_empty()).then(|| dots.iter().sum::<f64>() / dots.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstoiScore {
    pub value: f64,
    /// Fewer than 30 aligned frames: scored as one shorter segment.
    pub truncated: bool,
}

pub fn p_estoi(test: &AudioBuffer, references: &[AudioBuffer], radius: f64) -> Result<EstoiScore> {
    if references.is_empty() {
        return Err(Error::undefined("no parallel control recordings"));
    }
    let specs: Vec<Spectrogram> = references.iter().map(band_spectrogram).collect();
    let anchor = specs
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.len().cmp(&b.1.len()).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .expect("nonempty");
    let mut template = vec![vec![0.0; BANDS]; specs[anchor].len()];
    for (k, s) in specs.iter().enumerate() {
        let warped = if k == anchor { s.clone() } else { warp_onto(&specs[anchor], s, radius)? };
        for (t, row) in template.iter_mut().zip(&warped) {
            t.iter_mut().zip(row).for_each(|(a, b)| *a += b);
        }
    }
    let n_refs = specs.len() as f64;
    template.iter_mut().flatten().for_each(|v| *v /= n_refs);

    let aligned = warp_onto(&template, &band_spectrogram(test), radius)?;
    let len = template.len();
    let seg = SEGMENT.min(len);
    let scores: Vec<f64> = (0..=len - seg)
        .filter_map(|s| segment_score(&template[s..s + seg], &aligned[s..s + seg]))
        .collect();
    if scores.is_empty() {
        return Err(Error::undefined("no segment with spectral variation"));
    }
    Ok(EstoiScore {
        value: scores.iter().sum::<f64>() / scores.len() as f64,
        truncated: len < SEGMENT,
    })
}

pub struct PEstoi;

impl Metric for PEstoi {
    fn name(&self) -> &'static str {
        "p_estoi"
    }
    fn family(&self) -> Family {
        Family::Audio
    }
    fn polarity(&self) -> Polarity {
        Polarity::HigherIsBetter
    }
    fn score(&self, ctx: &ScoringContext, rec: &UtteranceRecord) -> Result<Scored> {
        let refs = ctx.references(rec);
        if refs.is_empty() {
            return Err(Error::undefined("no parallel control recordings"));
        }
        let test = ctx.trimmed_audio(rec)?.audio;
        let mut audios = Vec::with_capacity(refs.len());
        for r in &refs {
            match ctx.trimmed_audio(r) {
                Ok(t) => audios.push(t.audio),
                Err(Error::Undefined(_)) => {}
                Err(e) => return Err(e),
            }
        }
        let s = p_estoi(&test, &audios, ctx.config.dtw.radius)?;
        Ok(Scored::new(s.value)
            .with("references", audios.len())
            .with("truncated", s.truncated))
    }
}
