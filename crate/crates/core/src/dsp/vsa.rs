//! Polygonal vowel space area from a pooled (F1, F2) cloud.
//!
//! Each frame is assigned to its nearest reference corner vowel. Within a
//! corner's share of the cloud, the point at the given percentile of the
//! projections onto the centroid→corner direction is taken as that corner's
//! realisation; a corner with no frames collapses to the centroid. The
//! polygon through those points, ordered by angle around the centroid, is
//! measured with the shoelace formula.

use std::cmp::Ordering;

use crate::config::Corner;
use crate::error::{Error, Result};

fn cmp_points(a: &(f64, f64), b: &(f64, f64)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1))
}

pub fn check_corners(corners: &[Corner]) -> Result<()> {
    if corners.len() < 3 {
        return Err(Error::Config(format!(
            "VSA needs at least 3 corner vowels, got {}",
            corners.len()
        )));
    }
    for (i, a) in corners.iter().enumerate() {
        if !(a.f1.is_finite() && a.f2.is_finite()) {
            return Err(Error::Config(format!("corner {:?} is not finite", a.vowel)));
        }
        for b in &corners[i + 1..] {
            if a.vowel == b.vowel || (a.f1 == b.f1 && a.f2 == b.f2) {
                return Err(Error::Config(format!(
                    "duplicate VSA corner {:?} / {:?}",
                    a.vowel, b.vowel
                )));
            }
        }
    }
    Ok(())
}

/// Polygon area in Hz² (always non-negative).
pub fn shoelace(points: &[(f64, f64)]) -> f64 {
    let n = points.len();
    let twice: f64 = (0..n)
        .map(|i| {
            let (x1, y1) = points[i];
            let (x2, y2) = points[(i + 1) % n];
            x1 * y2 - x2 * y1
        })
        .sum();
    0.5 * twice.abs()
}

/// Area spanned by the cloud's directional extremes towards `corners`.
pub fn vsa(
    frames: &[(f64, f64)],
    corners: &[Corner],
    min_frames: usize,
    percentile: f64,
) -> Result<f64> {
    check_corners(corners)?;
    if frames.len() < min_frames {
        return Err(Error::undefined(format!(
            "{} formant frame(s); VSA needs at least {min_frames}",
            frames.len()
        )));
    }
    // Sorting first makes the result independent of frame order.
    let mut cloud = frames.to_vec();
    cloud.sort_by(cmp_points);
    let n = cloud.len() as f64;
    let centroid = (
        cloud.iter().map(|p| p.0).sum::<f64>() / n,
        cloud.iter().map(|p| p.1).sum::<f64>() / n,
    );

    // Projections alone let a far corner win another corner's direction
    // when F2 spans a wider range than F1, so each corner only sees the
    // frames nearest to it. Distance ties go to the smaller corner.
    let refs: Vec<(f64, f64)> = corners.iter().map(|c| (c.f1, c.f2)).collect();
    let dist = |p: &(f64, f64), r: &(f64, f64)| (p.0 - r.0).hypot(p.1 - r.1);
    let owner = |p: &(f64, f64)| {
        (0..refs.len())
            .min_by(|&a, &b| dist(p, &refs[a]).total_cmp(&dist(p, &refs[b])).then(cmp_points(&refs[a], &refs[b])))
            .expect("at least three corners")
    };
    let owners: Vec<usize> = cloud.iter().map(owner).collect();

    let mut vertices: Vec<(f64, f64)> = refs
        .iter()
        .enumerate()
        .map(|(k, r)| {
            let d = (r.0 - centroid.0, r.1 - centroid.1);
            let norm = d.0.hypot(d.1);
            let mut cell: Vec<&(f64, f64)> = cloud.iter().zip(&owners).filter(|(_, &o)| o == k).map(|(p, _)| p).collect();
            if norm == 0.0 || cell.is_empty() {
                return centroid;
            }
            let proj = |p: &(f64, f64)| ((p.0 - centroid.0) * d.0 + (p.1 - centroid.1) * d.1) / norm;
            cell.sort_by(|a, b| proj(a).total_cmp(&proj(b)).then(cmp_points(a, b)));
            let rank = ((percentile * cell.len() as f64).ceil() as usize).clamp(1, cell.len()) - 1;
            *cell[rank]
        })
        .collect();

    let angle = |p: &(f64, f64)| (p.1 - centroid.1).atan2(p.0 - centroid.0);
    vertices.sort_by(|a, b| angle(a).total_cmp(&angle(b)).then(cmp_points(a, b)));
    Ok(shoelace(&vertices))
}
