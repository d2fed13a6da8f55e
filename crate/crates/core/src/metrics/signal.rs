//! Reference-free acoustic metrics over trimmed audio.

use super::{Family, Level, Metric, Scored, ScoringContext};
use crate::dsp::{cpp, estimate_formants, f0_semitone_std, speech_rate, track_pitch, vsa};
use crate::error::{Error, Result};
use crate::io::manifest::{Polarity, UtteranceRecord};

pub struct SpeechRate;

impl Metric for SpeechRate {
    fn name(&self) -> &'static str {
        "speech_rate"
    }
    fn family(&self) -> Family {
        Family::Signal
    }
    fn polarity(&self) -> Polarity {
        Polarity::HigherIsBetter
    }
    fn score(&self, ctx: &ScoringContext, rec: &UtteranceRecord) -> Result<Scored> {
        let t = ctx.trimmed_audio(rec)?;
        Ok(Scored::new(speech_rate(&t.audio, &ctx.config.pitch)?).with("trimmed", !t.untrimmable()))
    }
}

pub struct Cpp;

impl Metric for Cpp {
    fn name(&self) -> &'static str {
        "cpp"
    }
    fn family(&self) -> Family {
        Family::Signal
    }
    fn polarity(&self) -> Polarity {
        Polarity::HigherIsBetter
    }
    fn score(&self, ctx: &ScoringContext, rec: &UtteranceRecord) -> Result<Scored> {
        let t = ctx.trimmed_audio(rec)?;
        let p = &ctx.config.pitch;
        Ok(Scored::new(cpp(&t.audio, &ctx.config.cpp, p.floor_hz, p.ceil_hz)?)
            .with("trimmed", !t.untrimmable()))
    }
}

pub struct F0Std;

impl Metric for F0Std {
    fn name(&self) -> &'static str {
        "f0_std"
    }
    fn family(&self) -> Family {
        Family::Signal
    }
    fn polarity(&self) -> Polarity {
        Polarity::HigherIsBetter
    }
    fn score(&self, ctx: &ScoringContext, rec: &UtteranceRecord) -> Result<Scored> {
        let t = ctx.trimmed_audio(rec)?;
        let contour = track_pitch(&t.audio, &ctx.config.pitch)?;
        Ok(Scored::new(f0_semitone_std(&contour)?).with("voiced_frames", contour.voiced_count()))
    }
}

pub struct Vsa;

impl Metric for Vsa {
    fn name(&self) -> &'static str {
        "vsa"
    }
    fn family(&self) -> Family {
        Family::Signal
    }
    fn polarity(&self) -> Polarity {
        Polarity::HigherIsBetter
    }
    fn level(&self) -> Level {
        Level::Speaker
    }
    fn score(&self, ctx: &ScoringContext, rec: &UtteranceRecord) -> Result<Scored> {
        self.score_speaker(ctx, &[rec])
    }
    fn score_speaker(&self, ctx: &ScoringContext, recs: &[&UtteranceRecord]) -> Result<Scored> {
        let cfg = &ctx.config.vsa;
        let corners = cfg.corners.get(&ctx.corpus.language).ok_or_else(|| {
            Error::Config(format!("no VSA corner vowels configured for language {:?}", ctx.corpus.language))
        })?;
        let mut frames = Vec::new();
        for rec in recs {
            let audio = match ctx.trimmed_audio(rec) {
                Ok(t) => t.audio,
                Err(Error::Undefined(_)) => continue,
                Err(e) => return Err(e),
            };
            let contour = match track_pitch(&audio, &ctx.config.pitch) {
                Ok(c) => c,
                Err(Error::Undefined(_)) => continue,
                Err(e) => return Err(e),
            };
            frames.extend(estimate_formants(&audio, &contour).iter().map(|f| (f.f1, f.f2)));
        }
        let n = frames.len();
        Ok(Scored::new(vsa(&frames, corners, cfg.min_frames, cfg.percentile)?).with("frames", n))
    }
}
