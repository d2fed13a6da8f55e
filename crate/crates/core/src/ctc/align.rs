//! Viterbi forced alignment and articulatory precision.

use std::collections::BTreeMap;

use super::PosteriorMatrix;
use crate::error::{Error, Result};

/// Per-frame label assignment produced by [`force_align`].
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentPath {
    pub labels: Vec<usize>,
    /// Sum of floored ln posteriors along the path.
    pub score: f64,
}

fn nearly_equal(a: f64, b: f64) -> bool {
    a == b || (a.is_finite() && b.is_finite() && (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0))
}

/// The most probable frame labelling that collapses to `target`.
///
/// Equally scored paths are resolved towards the lexicographically smallest
/// label sequence: a backward pass computes each state's best completion,
/// then a forward pass walks the optimal states picking the smallest label.
pub fn force_align(p: &PosteriorMatrix, target: &[usize]) -> Result<AlignmentPath> {
    if target.is_empty() {
        return Err(Error::InvalidInput("empty alignment target".into()));
    }
    let blank = p.blank();
    if let Some(&bad) = target.iter().find(|&&l| l == blank || l >= p.labels()) {
        return Err(Error::InvalidInput(format!("target label {bad} is blank or out of range")));
    }
    let t_len = p.frames();
    let s_len = 2 * target.len() + 1;
    let label = |s: usize| if s % 2 == 0 { blank } else { target[s / 2] };
    let can_skip = |s: usize| s % 2 == 1 && s >= 3 && target[s / 2] != target[s / 2 - 1];

    // best[t][s]: best score of frames t.. given state s at frame t.
    let neg = f64::NEG_INFINITY;
    let mut best = vec![vec![neg; s_len]; t_len];
    best[t_len - 1][s_len - 1] = p.ln(t_len - 1, label(s_len - 1));
    best[t_len - 1][s_len - 2] = p.ln(t_len - 1, label(s_len - 2));
    for t in (0..t_len - 1).rev() {
        for s in 0..s_len {
            let mut next = best[t + 1][s];
            if s + 1 < s_len {
                next = next.max(best[t + 1][s + 1]);
            }
            if s + 2 < s_len && can_skip(s + 2) {
                next = next.max(best[t + 1][s + 2]);
            }
            if next > neg {
                best[t][s] = next + p.ln(t, label(s));
            }
        }
    }

    let start = match (best[0][0], best[0][1]) {
        (a, b) if a == neg && b == neg => {
            return Err(Error::undefined(format!(
                "alignment infeasible: {t_len} frame(s) for {} target label(s)",
                target.len()
            )))
        }
        (a, b) if a > b && !nearly_equal(a, b) => 0,
        (a, b) if b > a && !nearly_equal(a, b) => 1,
        _ => {
            if label(0) <= label(1) {
                0
            } else {
                1
            }
        }
    };
    let mut states = vec![start];
    for t in 1..t_len {
        let s = *states.last().unwrap();
        let mut cands = vec![s];
        if s + 1 < s_len {
            cands.push(s + 1);
        }
        if s + 2 < s_len && can_skip(s + 2) {
            cands.push(s + 2);
        }
        let top = cands.iter().map(|&c| best[t][c]).fold(neg, f64::max);
        let next = cands
            .into_iter()
            .filter(|&c| best[t][c] > neg && nearly_equal(best[t][c], top))
            .min_by_key(|&c| label(c))
            .expect("a feasible successor exists");
        states.push(next);
    }
    let labels: Vec<usize> = states.iter().map(|&s| label(s)).collect();
    let score = labels.iter().enumerate().map(|(t, &l)| p.ln(t, l)).sum();
    Ok(AlignmentPath { labels, score })
}

fn check_lengths(p: &PosteriorMatrix, path: &AlignmentPath) -> Result<()> {
    if path.labels.len() != p.frames() {
        return Err(Error::InvalidInput(format!(
            "path has {} frames, posteriors have {}",
            path.labels.len(),
            p.frames()
        )));
    }
    if let Some(&bad) = path.labels.iter().find(|&&l| l >= p.labels()) {
        return Err(Error::InvalidInput(format!("path label {bad} out of range")));
    }
    Ok(())
}

/// Mean linear posterior of the aligned label over frames that are neither
/// blank nor SIL.
pub fn articulatory_precision(p: &PosteriorMatrix, path: &AlignmentPath) -> Result<f64> {
    check_lengths(p, path)?;
    let vocab = p.vocab();
    let active: Vec<f64> = path
        .labels
        .iter()
        .enumerate()
        .filter(|(_, &l)| !vocab.is_inactive(l))
        .map(|(t, &l)| p.prob(t, l))
        .collect();
    if active.is_empty() {
        return Err(Error::undefined("alignment has no active frames"));
    }
    Ok(active.iter().sum::<f64>() / active.len() as f64)
}

/// Mean aligned posterior per active label, keyed by label string.
pub fn per_label_means(p: &PosteriorMatrix, path: &AlignmentPath) -> Result<BTreeMap<String, f64>> {
    check_lengths(p, path)?;
    let vocab = p.vocab();
    let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for (t, &l) in path.labels.iter().enumerate() {
        if !vocab.is_inactive(l) {
            let e = acc.entry(vocab.label(l).to_string()).or_default();
            e.0 += p.prob(t, l);
            e.1 += 1;
        }
    }
    Ok(acc.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect())
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::super::{collapse_path, PosteriorMatrix};
    use super::*;
    use crate::io::VocabSpec;
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn pm(rows: Vec<Vec<f32>>, v: usize) -> PosteriorMatrix {
        PosteriorMatrix::from_rows(&rows, letters(v), 0.02).unwrap()
    }

    /// Best-scoring path collapsing to `target`, smallest sequence on ties.
    fn brute_force(p: &PosteriorMatrix, target: &[usize]) -> Option<(Vec<usize>, f64)> {
        let mut best: Option<(Vec<usize>, f64)> = None;
        for path in all_paths(p.frames(), p.labels()) {
            if collapse_path(&path, 0) != target {
                continue;
            }
            let s = path_score(p, &path);
            if best.as_ref().is_none_or(|b| s > b.1) {
                best = Some((path, s));
            }
        }
        best
    }

    #[test]
    fn single_label_one_hot() {
        let p = pm(one_hot(&[0, 1, 0], 3), 3);
        let a = force_align(&p, &[1]).unwrap();
        assert_eq!(a.labels, vec![0, 1, 0]);
        assert_eq!(a.score, 0.0);
    }

    #[test]
    fn repeated_label_needs_separating_blank() {
        let p = pm(random_rows(&mut rand::rngs::StdRng::seed_from_u64(1), 2, 3), 3);
        assert!(matches!(force_align(&p, &[1, 1]), Err(Error::Undefined(_))));
        let p = pm(random_rows(&mut rand::rngs::StdRng::seed_from_u64(1), 3, 3), 3);
        assert_eq!(force_align(&p, &[1, 1]).unwrap().labels, vec![1, 0, 1]);
    }

    #[test]
    fn matches_enumeration_on_four_frames() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(42);
        for _ in 0..50 {
            let p = pm(random_rows(&mut rng, 4, 3), 3);
            let a = force_align(&p, &[1, 2]).unwrap();
            let (path, score) = brute_force(&p, &[1, 2]).unwrap();
            assert_eq!(a.labels, path);
            assert!((a.score - score).abs() < 1e-9);
        }
    }

    #[test]
    fn ties_prefer_smallest_sequence() {
        // Uniform frames: every valid path scores the same.
        let p = pm(vec![vec![1.0 / 3.0; 3]; 4], 3);
        assert_eq!(force_align(&p, &[2]).unwrap().labels, vec![0, 0, 0, 2]);
        assert_eq!(force_align(&p, &[1, 2]).unwrap().labels, vec![0, 0, 1, 2]);
    }

    #[test]
    fn precision_examples() {
        let p = pm(one_hot(&[0, 1, 2, 0], 3), 3);
        let a = force_align(&p, &[1, 2]).unwrap();
        assert_eq!(articulatory_precision(&p, &a).unwrap(), 1.0);

        let rows = vec![vec![1.0, 0.0, 0.0], vec![0.5, 0.5, 0.0], vec![0.0, 0.0, 1.0]];
        let p = pm(rows, 3);
        let path = AlignmentPath { labels: vec![0, 1, 2], score: 0.0 };
        assert!((articulatory_precision(&p, &path).unwrap() - 0.75).abs() < 1e-12);

        let path = AlignmentPath { labels: vec![0, 0, 0], score: 0.0 };
        assert!(matches!(articulatory_precision(&p, &path), Err(Error::Undefined(_))));
        let short = AlignmentPath { labels: vec![0, 1], score: 0.0 };
        assert!(matches!(articulatory_precision(&p, &short), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn sil_frames_are_inactive() {
        let vocab = VocabSpec::new(vec!["_".into(), "SIL".into(), "a".into()], 0, Some(1)).unwrap();
        let rows = vec![vec![0.0, 0.2, 0.8], vec![0.0, 0.9, 0.1], vec![0.0, 0.5, 0.5]];
        let p = PosteriorMatrix::from_rows(&rows, vocab, 0.02).unwrap();
        let path = AlignmentPath { labels: vec![2, 1, 2], score: 0.0 };
        assert!((articulatory_precision(&p, &path).unwrap() - 0.65).abs() < 1e-7);
        let means = per_label_means(&p, &path).unwrap();
        assert_eq!(means.keys().collect::<Vec<_>>(), vec!["a"]);
    }

    proptest! {
        #[test]
        fn optimal_and_collapses_to_target(
            seed in any::<u64>(),
            t in 1usize..=5,
            v in 2usize..=4,
            target in prop::collection::vec(1usize..4, 1..4),
        ) {
            let target: Vec<usize> = target.into_iter().map(|l| 1 + (l - 1) % (v - 1)).collect();
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            let p = pm(random_rows(&mut rng, t, v), v);
            match (force_align(&p, &target), brute_force(&p, &target)) {
                (Ok(a), Some((_, score))) => {
                    prop_assert_eq!(collapse_path(&a.labels, 0), target);
                    prop_assert!((a.score - score).abs() < 1e-9);
                    let ap = articulatory_precision(&p, &a).unwrap();
                    prop_assert!((0.0..=1.0).contains(&ap));
                }
                (Err(Error::Undefined(_)), None) => {}
                (a, b) => prop_assert!(false, "{a:?} vs {b:?}"),
            }
        }
    }
}
