//! Prefix beam search with n-gram shallow fusion.
//!
//! A hypothesis is ranked by `acoustic + alpha * lm + beta * words`. The LM
//! term is charged when a word is closed by the delimiter token; the trailing
//! word and `</s>` are charged once decoding reaches the last frame.

use std::collections::HashMap;
use std::rc::Rc;

use super::{log_add, PosteriorMatrix};
use crate::error::{Error, Result};
use crate::lm::NGramModel;

#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    /// Collapsed label sequence.
    pub labels: Vec<usize>,
    pub words: Vec<String>,
    pub acoustic_lnp: f64,
    pub lm_lnp: f64,
    pub combined: f64,
}

/// Splits a collapsed label sequence into words on `delimiter`.
pub fn words_from_labels(
    labels: &[usize],
    delimiter: usize,
    label: impl Fn(usize) -> String,
) -> Vec<String> {
    labels
        .split(|&l| l == delimiter)
        .filter(|w| !w.is_empty())
        .map(|w| w.iter().map(|&l| label(l)).collect())
        .collect()
}

/// LM bookkeeping for the closed words of a prefix. The open word is not
/// stored: it is the run of labels after the last delimiter, and only
/// matters once the delimiter closes it.
#[derive(Debug)]
struct WordState {
    /// ln P of the words closed so far.
    lm: f64,
    closed: usize,
    history: Vec<String>,
}

#[derive(Debug, Clone)]
struct Beam {
    blank: f64,
    non_blank: f64,
    words: Rc<WordState>,
}

impl Beam {
    fn total(&self) -> f64 {
        log_add(self.blank, self.non_blank)
    }
}

/// State after appending `delimiter` to `prefix`.
fn close_word(
    state: &Rc<WordState>,
    prefix: &[usize],
    delimiter: usize,
    p: &PosteriorMatrix,
    lm: &NGramModel,
) -> Rc<WordState> {
    let start = prefix.iter().rposition(|&l| l == delimiter).map_or(0, |i| i + 1);
    if start == prefix.len() {
        return Rc::clone(state);
    }
    let word: String = prefix[start..].iter().map(|&l| p.vocab().label(l)).collect();
    let score = lm.score_word(&state.history, &word);
    let mut history = state.history.clone();
    history.push(word);
    let keep = lm.order().saturating_sub(1);
    if history.len() > keep {
        history.drain(..history.len() - keep);
    }
    Rc::new(WordState {
        lm: state.lm + score,
        closed: state.closed + 1,
        history,
    })
}

/// Best hypothesis under the fused objective. `beam_width = usize::MAX`
/// keeps every prefix. Ties resolve to the lexicographically smallest label
/// sequence.
pub fn beam_search_decode(
    p: &PosteriorMatrix,
    lm: &NGramModel,
    alpha: f64,
    beta: f64,
    beam_width: usize,
) -> Result<Hypothesis> {
    let delimiter = p
        .vocab()
        .delimiter_index()
        .ok_or_else(|| Error::InvalidInput("semantic vocab has no word delimiter".into()))?;
    if !(alpha.is_finite() && beta.is_finite()) {
        return Err(Error::InvalidInput(format!("alpha and beta must be finite, got {alpha}, {beta}")));
    }
    if beam_width == 0 {
        return Err(Error::InvalidInput("beam width must be at least 1".into()));
    }
    let blank = p.blank();
    let neg = f64::NEG_INFINITY;
    let fused = |b: &Beam| b.total() + alpha * b.words.lm + beta * b.words.closed as f64;

    let mut beams: Vec<(Vec<usize>, Beam)> = vec![(
        Vec::new(),
        Beam {
            blank: 0.0,
            non_blank: neg,
            words: Rc::new(WordState {
                lm: 0.0,
                closed: 0,
                history: vec![crate::lm::BOS.to_string()],
            }),
        },
    )];

    for t in 0..p.frames() {
        // A prefix that is not already a beam can only be reached from its
        // one parent, so its score is final when generated and a candidate
        // below the cut is dropped before anything is allocated for it.
        // Existing prefixes get at most two contributions per field and
        // log_add is symmetric, so accumulation order does not matter.
        let index: HashMap<&[usize], usize> = beams.iter().enumerate().map(|(i, (k, _))| (k.as_slice(), i)).collect();
        let children: HashMap<(usize, usize), usize> = beams
            .iter()
            .enumerate()
            .filter_map(|(i, (k, _))| {
                let (&c, parent) = k.split_last()?;
                index.get(parent).map(|&j| ((j, c), i))
            })
            .collect();
        let mut stays: Vec<Beam> = beams
            .iter()
            .map(|(prefix, beam)| {
                let last = prefix.last().copied();
                let repeat = last.map_or(neg, |c| beam.non_blank + p.ln(t, c));
                Beam {
                    blank: beam.total() + p.ln(t, blank),
                    non_blank: repeat,
                    words: Rc::clone(&beam.words),
                }
            })
            .collect();
        // (score, parent, label, closed-word state when the label is the delimiter)
        let mut fresh: Vec<(f64, usize, usize, Option<Rc<WordState>>)> = Vec::new();
        for (j, (prefix, beam)) in beams.iter().enumerate() {
            let total = beam.total();
            let last = prefix.last().copied();
            for c in 0..p.labels() {
                if c == blank {
                    continue;
                }
                let lp = p.ln(t, c);
                let acoustic = if Some(c) == last {
                    if beam.blank == neg {
                        continue;
                    }
                    beam.blank + lp
                } else {
                    total + lp
                };
                if let Some(&i) = children.get(&(j, c)) {
                    let e = &mut stays[i];
                    e.non_blank = log_add(e.non_blank, acoustic);
                    continue;
                }
                let closed = (c == delimiter).then(|| close_word(&beam.words, prefix, delimiter, p, lm));
                let words = closed.as_ref().unwrap_or(&beam.words);
                let score = acoustic + alpha * words.lm + beta * words.closed as f64;
                fresh.push((score, j, c, closed));
            }
        }
        // The ranking key ignores the open word and </s>, so the last frame
        // keeps everything for the final rescoring.
        let width = if t + 1 == p.frames() { usize::MAX } else { beam_width };
        let mut scores: Vec<f64> = stays.iter().map(fused).chain(fresh.iter().map(|f| f.0)).collect();
        let cut = if scores.len() > width {
            let (_, kth, _) = scores.select_nth_unstable_by(width - 1, |a, b| b.total_cmp(a));
            *kth
        } else {
            neg
        };
        let keep = |s: f64| s.total_cmp(&cut).is_ge();
        let mut ranked: Vec<(Vec<usize>, Beam, f64)> = Vec::new();
        for ((prefix, _), b) in beams.iter().zip(stays) {
            let s = fused(&b);
            if keep(s) {
                ranked.push((prefix.clone(), b, s));
            }
        }
        for (s, j, c, closed) in fresh {
            if !keep(s) {
                continue;
            }
            let (prefix, beam) = &beams[j];
            let mut ext = prefix.clone();
            ext.push(c);
            let b = Beam {
                blank: neg,
                non_blank: if Some(c) == prefix.last().copied() { beam.blank } else { beam.total() } + p.ln(t, c),
                words: closed.unwrap_or_else(|| Rc::clone(&beam.words)),
            };
            ranked.push((ext, b, s));
        }
        ranked.sort_by(|a, b| b.2.total_cmp(&a.2).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(width);
        beams = ranked.into_iter().map(|(k, b, _)| (k, b)).collect();
    }

    let vocab = p.vocab();
    let mut best: Option<Hypothesis> = None;
    for (labels, beam) in beams {
        let words = words_from_labels(&labels, delimiter, |l| vocab.label(l).to_string());
        let lm_lnp = lm.score_sequence(&words);
        let acoustic_lnp = beam.total();
        let combined = acoustic_lnp + alpha * lm_lnp + beta * words.len() as f64;
        let better = match &best {
            None => true,
            Some(b) => combined > b.combined || (combined == b.combined && labels < b.labels),
        };
        if better {
            best = Some(Hypothesis {
                labels,
                words,
                acoustic_lnp,
                lm_lnp,
                combined,
            });
        }
    }
    Ok(best.expect("beam is never empty"))
}

#[cfg(test)]
pub(crate) mod oracle {
    use super::*;
    use crate::ctc::{collapse_path, testutil::all_paths};

    /// Scores every collapsed sequence reachable in `T` frames by summing
    /// its path probabilities, then applies the fused objective.
    pub fn exhaustive(p: &PosteriorMatrix, lm: &NGramModel, alpha: f64, beta: f64) -> Hypothesis {
        let delimiter = p.vocab().delimiter_index().unwrap();
        let mut acoustic: HashMap<Vec<usize>, f64> = HashMap::new();
        for path in all_paths(p.frames(), p.labels()) {
            let s: f64 = path.iter().enumerate().map(|(t, &l)| p.ln(t, l)).sum();
            let e = acoustic.entry(collapse_path(&path, p.blank())).or_insert(f64::NEG_INFINITY);
            *e = log_add(*e, s);
        }
        let mut all: Vec<Hypothesis> = acoustic
            .into_iter()
            .map(|(labels, a)| {
                let words = words_from_labels(&labels, delimiter, |l| p.vocab().label(l).to_string());
                let l = lm.score_sequence(&words);
                let combined = a + alpha * l + beta * words.len() as f64;
                Hypothesis { labels, words, acoustic_lnp: a, lm_lnp: l, combined }
            })
            .collect();
        all.sort_by(|a, b| b.combined.total_cmp(&a.combined).then_with(|| a.labels.cmp(&b.labels)));
        all.swap_remove(0)
    }
}
