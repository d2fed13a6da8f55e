//! CTC algorithms over per-frame label posteriors.

mod align;
mod beam;

pub use align::{articulatory_precision, force_align, per_label_means, AlignmentPath};
pub use beam::{beam_search_decode, words_from_labels, Hypothesis};

use crate::error::{Error, Result};
use crate::io::{Tensor2D, VocabSpec};

/// Floor applied to linear posteriors before taking logs.
pub const PROB_FLOOR: f64 = 1e-10;
const ROW_SUM_TOL: f64 = 1e-3;

/// A T×V matrix of per-frame label probabilities.
#[derive(Debug, Clone)]
pub struct PosteriorMatrix {
    tensor: Tensor2D,
    vocab: VocabSpec,
    frame_hop: f64,
    log: Vec<f64>,
}

impl PosteriorMatrix {
    pub fn new(tensor: Tensor2D, vocab: VocabSpec, frame_hop: f64) -> Result<Self> {
        if tensor.cols() != vocab.len() {
            return Err(Error::InvalidInput(format!(
                "posterior has {} columns but vocab has {} labels",
                tensor.cols(),
                vocab.len()
            )));
        }
        if !(frame_hop > 0.0) {
            return Err(Error::InvalidInput(format!("frame hop must be positive, got {frame_hop}")));
        }
        for (t, row) in tensor.iter_rows().enumerate() {
            if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(Error::InvalidInput(format!("frame {t} has a value outside [0, 1]")));
            }
            let sum: f64 = row.iter().map(|&p| p as f64).sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidInput(format!("frame {t} sums to {sum:.6}, not 1")));
            }
        }
        let log = tensor
            .data()
            .iter()
            .map(|&p| (p as f64).max(PROB_FLOOR).ln())
            .collect();
        Ok(Self {
            tensor,
            vocab,
            frame_hop,
            log,
        })
    }

    /// Convenience constructor from nested rows.
    pub fn from_rows(rows: &[Vec<f32>], vocab: VocabSpec, frame_hop: f64) -> Result<Self> {
        Self::new(Tensor2D::from_rows(rows)?, vocab, frame_hop)
    }

    pub fn frames(&self) -> usize {
        self.tensor.rows()
    }

    pub fn labels(&self) -> usize {
        self.tensor.cols()
    }

    pub fn vocab(&self) -> &VocabSpec {
        &self.vocab
    }

    pub fn frame_hop(&self) -> f64 {
        self.frame_hop
    }

    pub fn tensor(&self) -> &Tensor2D {
        &self.tensor
    }

    pub fn prob(&self, t: usize, v: usize) -> f64 {
        self.tensor.get(t, v) as f64
    }

    /// Floored natural-log probability.
    pub fn ln(&self, t: usize, v: usize) -> f64 {
        self.log[t * self.labels() + v]
    }

    pub fn blank(&self) -> usize {
        self.vocab.blank_index
    }
}

/// Merges adjacent repeats, then drops blanks.
pub fn collapse_path(labels: &[usize], blank: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut prev = None;
    for &l in labels {
        if Some(l) != prev && l != blank {
            out.push(l);
        }
        prev = Some(l);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyDecode {
    pub labels: Vec<usize>,
    pub confidence: f64,
}

/// Per-frame argmax decode. Confidence is the mean winning probability over
/// frames whose winner is not blank, or the mean blank probability when
/// every frame is blank. Argmax ties go to the lowest label index.
pub fn greedy_decode(p: &PosteriorMatrix) -> GreedyDecode {
    let blank = p.blank();
    let best: Vec<(usize, f64)> = (0..p.frames())
        .map(|t| {
            let row = p.tensor.row(t);
            let mut arg = 0;
            for (v, &x) in row.iter().enumerate() {
                if x > row[arg] {
                    arg = v;
                }
            }
            (arg, row[arg] as f64)
        })
        .collect();
    let path: Vec<usize> = best.iter().map(|b| b.0).collect();
    let active: Vec<f64> = best.iter().filter(|b| b.0 != blank).map(|b| b.1).collect();
    let confidence = if active.is_empty() {
        best.iter().map(|b| b.1).sum::<f64>() / best.len() as f64
    } else {
        active.iter().sum::<f64>() / active.len() as f64
    };
    GreedyDecode {
        labels: collapse_path(&path, blank),
        confidence,
    }
}

pub(crate) fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;
    use rand::Rng;

    /// Vocab "_" (blank), "a", "b", ... with `n` labels in total.
    pub fn letters(n: usize) -> VocabSpec {
        let mut labels = vec!["_".to_string()];
        labels.extend((0..n - 1).map(|i| ((b'a' + i as u8) as char).to_string()));
        VocabSpec::new(labels, 0, None).unwrap()
    }

    pub fn one_hot(ids: &[usize], v: usize) -> Vec<Vec<f32>> {
        ids.iter()
            .map(|&i| {
                let mut r = vec![0.0; v];
                r[i] = 1.0;
                r
            })
            .collect()
    }

    pub fn random_rows(rng: &mut impl Rng, t: usize, v: usize) -> Vec<Vec<f32>> {
        (0..t)
            .map(|_| {
                let raw: Vec<f64> = (0..v).map(|_| rng.random::<f64>() + 0.01).collect();
                let s: f64 = raw.iter().sum();
                raw.iter().map(|x| (x / s) as f32).collect()
            })
            .collect()
    }

    /// Every length-`t` path over `v` labels.
    pub fn all_paths(t: usize, v: usize) -> impl Iterator<Item = Vec<usize>> {
        (0..v.pow(t as u32)).map(move |mut k| {
            let mut p = vec![0; t];
            for slot in p.iter_mut().rev() {
                *slot = k % v;
                k /= v;
            }
            p
        })
    }

    pub fn path_score(p: &PosteriorMatrix, path: &[usize]) -> f64 {
        path.iter().enumerate().map(|(t, &l)| p.ln(t, l)).sum()
    }
}
