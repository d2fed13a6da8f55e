//! Dynamic time warping with a Sakoe-Chiba band.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Warp {
    /// Sum of local costs along the path.
    pub cost: f64,
    /// Matched `(i, j)` pairs from `(0, 0)` to `(n - 1, m - 1)`.
    pub path: Vec<(usize, usize)>,
}

impl Warp {
    pub fn normalized_cost(&self) -> f64 {
        self.cost / self.path.len() as f64
    }
}

/// Band half-width for two sequences: `fraction` of the longer one, at least 1.
pub fn band_radius(n: usize, m: usize, fraction: f64) -> usize {
    ((fraction * n.max(m) as f64).ceil() as usize).max(1)
}

/// Optimal warping path under steps (1,0), (0,1), (1,1). Paths are compared
/// by total cost, then by length; the band is measured around the straight
/// line from corner to corner so unequal lengths stay feasible.
pub fn dtw(n: usize, m: usize, radius: Option<usize>, cost: impl Fn(usize, usize) -> f64) -> Result<Warp> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidInput("DTW needs two nonempty sequences".into()));
    }
    let inside = |i: usize, j: usize| match radius {
        None => true,
        Some(_) if n == 1 || m == 1 => true,
        Some(r) => {
            let diag = i as f64 * (m - 1) as f64 / (n - 1) as f64;
            (diag - j as f64).abs() <= r as f64
        }
    };
    const INF: (f64, usize) = (f64::INFINITY, usize::MAX);
    let better = |a: (f64, usize), b: (f64, usize)| a.0 < b.0 || (a.0 == b.0 && a.1 < b.1);
    let mut acc = vec![INF; n * m];
    for i in 0..n {
        for j in 0..m {
            if !inside(i, j) {
                continue;
            }
            let prev = if i == 0 && j == 0 {
                (0.0, 0)
            } else {
                let mut best = INF;
                if i > 0 && j > 0 {
                    best = acc[(i - 1) * m + j - 1];
                }
                if i > 0 && better(acc[(i - 1) * m + j], best) {
                    best = acc[(i - 1) * m + j];
                }
                if j > 0 && better(acc[i * m + j - 1], best) {
                    best = acc[i * m + j - 1];
                }
                best
            };
            if prev.0.is_finite() {
                acc[i * m + j] = (prev.0 + cost(i, j), prev.1 + 1);
            }
        }
    }
    let end = acc[n * m - 1];
    if !end.0.is_finite() {
        return Err(Error::InvalidInput("DTW band admits no path".into()));
    }
    let mut path = vec![(n - 1, m - 1)];
    let (mut i, mut j) = (n - 1, m - 1);
    while (i, j) != (0, 0) {
        let want = (acc[i * m + j].0 - cost(i, j), acc[i * m + j].1 - 1);
        let mut cands = Vec::with_capacity(3);
        if i > 0 && j > 0 {
            cands.push((i - 1, j - 1));
        }
        if i > 0 {
            cands.push((i - 1, j));
        }
        if j > 0 {
            cands.push((i, j - 1));
        }
        // The predecessor the forward pass used: best (cost, len) in order.
        let mut pick = cands[0];
        for &c in &cands[1..] {
            if better(acc[c.0 * m + c.1], acc[pick.0 * m + pick.1]) {
                pick = c;
            }
        }
        debug_assert!(acc[pick.0 * m + pick.1].1 == want.1);
        (i, j) = pick;
        path.push(pick);
    }
    path.reverse();
    Ok(Warp { cost: end.0, path })
}

/// 1 − cosine similarity; zero vectors count as orthogonal to everything
/// except another zero vector.
pub fn cosine_distance(a: &[f32], b: &[f32]) -> f64 {
    let (mut ab, mut aa, mut bb) = (0.0f64, 0.0f64, 0.0f64);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x as f64, y as f64);
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 && bb == 0.0 {
        return 0.0;
    }
    if aa == 0.0 || bb == 0.0 {
        return 1.0;
    }
    1.0 - (ab / (aa.sqrt() * bb.sqrt())).clamp(-1.0, 1.0)
}

pub fn euclidean_distance(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x as f64 - y as f64).powi(2))
        .sum::<f64>()
        .sqrt()
}
