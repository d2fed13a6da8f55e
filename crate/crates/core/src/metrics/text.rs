//! Token error rates.

use crate::error::{Error, Result};

/// Levenshtein distance with unit costs, two-row DP.
pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Edit distance divided by the reference length. Can exceed 1.
pub fn per<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::InvalidInput("error rate needs a nonempty reference".into()));
    }
    Ok(edit_distance(reference, hypothesis) as f64 / reference.len() as f64)
}

/// Error rate of the phonetic model's output against the phonemised
/// semantic output.
pub fn asric<T: PartialEq>(sem_phones: &[T], phone_phones: &[T]) -> Result<f64> {
    if sem_phones.is_empty() {
        return Err(Error::undefined("semantic model produced no phonemes"));
    }
    per(sem_phones, phone_phones)
}
