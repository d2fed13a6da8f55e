use super::{AudioBuffer, SAMPLE_RATE};
use crate::ctc::AlignmentPath;
use crate::error::{Error, Result};
use crate::io::VocabSpec;

/// Output of [`trim_silence`].
#[derive(Debug, Clone, PartialEq)]
pub struct Trimmed {
    pub audio: AudioBuffer,
    /// Inclusive first and last active frame, when the path had any.
    pub frames: Option<(usize, usize)>,
}

impl Trimmed {
    /// True when the path had no active frame and the audio was returned as is.
    pub fn untrimmable(&self) -> bool {
        self.frames.is_none()
    }
}

/// First and last frame whose label is neither blank nor SIL.
pub fn active_frame_range(path: &AlignmentPath, vocab: &VocabSpec) -> Option<(usize, usize)> {
    let first = path.labels.iter().position(|&l| !vocab.is_inactive(l))?;
    let last = path.labels.iter().rposition(|&l| !vocab.is_inactive(l))?;
    Some((first, last))
}

/// Sample range `[start, end)` covered by frames `first..=last`.
pub fn frame_sample_range(first: usize, last: usize, frame_hop: f64, len: usize) -> (usize, usize) {
    let per_frame = frame_hop * SAMPLE_RATE as f64;
    let start = ((first as f64 * per_frame).round() as usize).min(len);
    let end = (((last + 1) as f64 * per_frame).round() as usize).min(len);
    (start, end.max(start))
}

/// Keeps the samples between the first and last active frame of a forced
/// alignment. Leading and trailing silence is located by the aligner, not
/// by signal energy.
pub fn trim_silence(
    audio: &AudioBuffer,
    path: &AlignmentPath,
    vocab: &VocabSpec,
    frame_hop: f64,
) -> Result<Trimmed> {
    if !(frame_hop > 0.0) {
        return Err(Error::InvalidInput(format!("frame hop must be positive, got {frame_hop}")));
    }
    let Some((first, last)) = active_frame_range(path, vocab) else {
        return Ok(Trimmed {
            audio: audio.clone(),
            frames: None,
        });
    };
    let (start, end) = frame_sample_range(first, last, frame_hop, audio.len());
    let audio = if start < end {
        AudioBuffer::new(audio.samples()[start..end].to_vec())?
    } else {
        audio.clone()
    };
    Ok(Trimmed {
        audio,
        frames: Some((first, last)),
    })
}
