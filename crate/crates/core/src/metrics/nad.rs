//! Neural acoustic distance between frame-feature sequences.

use super::dtw::{band_radius, cosine_distance, dtw, euclidean_distance};
use super::{Family, Metric, Scored, ScoringContext};
use crate::config::FrameDistance;
use crate::error::{Error, Result};
use crate::io::manifest::{Polarity, UtteranceRecord};
use crate::io::Tensor2D;

/// Mean over references of the path-length-normalised DTW cost.
pub fn nad(test: &Tensor2D, references: &[Tensor2D], distance: FrameDistance, radius: f64) -> Result<f64> {
    if references.is_empty() {
        return Err(Error::undefined("no parallel control recordings"));
    }
    let frame_cost = match distance {
        FrameDistance::Cosine => cosine_distance,
        FrameDistance::Euclidean => euclidean_distance,
    };
    let mut total = 0.0;
    for r in references {
        if r.cols() != test.cols() {
            return Err(Error::InvalidInput(format!(
                "feature dimension mismatch: {} vs {}",
                test.cols(),
                r.cols()
            )));
        }
        let band = band_radius(test.rows(), r.rows(), radius);
        let w = dtw(test.rows(), r.rows(), Some(band), |i, j| frame_cost(test.row(i), r.row(j)))?;
        total += w.normalized_cost();
    }
    Ok(total / references.len() as f64)
}

pub struct Nad;

impl Metric for Nad {
    fn name(&self) -> &'static str {
        "nad"
    }
    fn family(&self) -> Family {
        Family::Audio
    }
    fn polarity(&self) -> Polarity {
        Polarity::LowerIsBetter
    }
    fn score(&self, ctx: &ScoringContext, rec: &UtteranceRecord) -> Result<Scored> {
        let test = ctx.features(rec)?;
        let mut refs = Vec::new();
        for r in ctx.references(rec) {
            match ctx.features(r) {
                Ok(t) => refs.push(t),
                Err(Error::Undefined(_)) => {}
                Err(e) => return Err(e),
            }
        }
        let n = refs.len();
        let value = nad(&test, &refs, ctx.config.dtw.nad_distance, ctx.config.dtw.radius)?;
        Ok(Scored::new(value).with("references", n))
    }
}
