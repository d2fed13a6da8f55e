//! Posterior-based metrics: greedy confidence, ASRIC, DArtP, PERs, ArtP.

use super::text::{asric, per};
use super::{Family, Metric, Scored, ScoringContext};
use crate::ctc::{
    articulatory_precision, beam_search_decode, force_align, greedy_decode, per_label_means,
    words_from_labels, PosteriorMatrix,
};
use crate::error::{Error, Result};
use crate::io::lexicon::{phonemize_words, pronounce_all};
use crate::io::manifest::{Polarity, UtteranceRecord};

/// Greedy word output of the semantic model.
fn greedy_words(p: &PosteriorMatrix) -> Result<Vec<String>> {
    let vocab = p.vocab();
    let delim = vocab
        .delimiter_index()
        .ok_or_else(|| Error::InvalidInput("semantic vocab has no word delimiter".into()))?;
    let labels = greedy_decode(p).labels;
    Ok(words_from_labels(&labels, delim, |l| vocab.label(l).to_string()))
}

/// Pronunciations without SIL. Words the lexicon cannot pronounce are skipped.
fn phonemes_of(ctx: &ScoringContext, words: &[String]) -> (Vec<String>, Vec<String>) {
    let mut phones = Vec::new();
    let mut missing = Vec::new();
    for w in words {
        match ctx.corpus.lexicon.pronounce(w) {
            Some(p) => phones.extend(p.iter().cloned()),
            None => missing.push(w.clone()),
        }
    }
    (phones, missing)
}

fn without_sil(ctx: &ScoringContext, phones: &[String]) -> Vec<String> {
    let vocab = &ctx.corpus.vocab_phone;
    let sil = vocab.sil_index.map(|i| vocab.label(i));
    phones.iter().filter(|p| Some(p.as_str()) != sil).cloned().collect()
}

fn greedy_phones(ctx: &ScoringContext, p: &PosteriorMatrix) -> Vec<String> {
    let labels: Vec<String> = greedy_decode(p)
        .labels
        .iter()
        .map(|&l| p.vocab().label(l).to_string())
        .collect();
    without_sil(ctx, &labels)
}

/// Aligns `phones` to the phonetic posteriors and returns articulatory
/// precision with per-phone diagnostics.
fn align_and_score(ctx: &ScoringContext, post: &PosteriorMatrix, phones: &[String]) -> Result<Scored> {
    let path = force_align(post, &ctx.phone_ids(phones)?)?;
    let ap = articulatory_precision(post, &path)?;
    let means = per_label_means(post, &path)?;
    let detail: Vec<String> = means.iter().map(|(k, v)| format!("{k}:{v:.4}")).collect();
    Ok(Scored::new(ap)
        .with("phonemes", phones.join(" "))
        .with("per_phone_posterior", detail.join(" ")))
}

pub struct Confidence;

impl Metric for Confidence {
    fn name(&self) -> &'static str {
        "confidence"
    }
    fn family(&self) -> Family {
        Family::Model
    }
    fn polarity(&self) -> Polarity {
        Polarity::HigherIsBetter
    }
    fn score(&self, ctx: &ScoringContext, rec: &UtteranceRecord) -> Result<Scored> {
        Ok(Scored::new(greedy_decode(&ctx.sem_posteriors(rec)?).confidence))
    }
}

pub struct Asric;

impl Metric for Asric {
    fn name(&self) -> &'static str {
        "asric"
    }
    fn family(&self) -> Family {
        Family::Model
    }
    fn polarity(&self) -> Polarity {
        Polarity::LowerIsBetter
    }
    fn score(&self, ctx: &ScoringContext, rec: &UtteranceRecord) -> Result<Scored> {
        let words = greedy_words(&ctx.sem_posteriors(rec)?)?;
        let (sem, missing) = phonemes_of(ctx, &words);
        let phone = greedy_phones(ctx, &ctx.phone_posteriors(rec)?);
        Ok(Scored::new(asric(&sem, &phone)?)
            .with("semantic_words", words.join(" "))
            .with("oov", missing.join(" ")))
    }
}

pub struct Dartp;

impl Metric for Dartp {
    fn name(&self) -> &'static str {
        "dartp"
    }
    fn family(&self) -> Family {
        Family::Model
    }
    fn polarity(&self) -> Polarity {
        Polarity::HigherIsBetter
    }
    fn score(&self, ctx: &ScoringContext, rec: &UtteranceRecord) -> Result<Scored> {
        let lm = ctx.lm()?;
        let beam = &ctx.config.beam;
        let sem = ctx.sem_posteriors(rec)?;
        let hyp = beam_search_decode(&sem, lm, beam.alpha, beam.beta, beam.width)?;
        if hyp.words.is_empty() {
            return Err(Error::undefined("beam search produced no words"));
        }
        let (phones, missing) = phonemize_words(&hyp.words, &ctx.corpus.lexicon, &ctx.corpus.vocab_phone);
        if phones.is_empty() {
            return Err(Error::undefined(format!(
                "no hypothesis word is in the lexicon: {}",
                hyp.words.join(" ")
            )));
        }
        let post = ctx.phone_posteriors(rec)?;
        Ok(align_and_score(ctx, &post, &phones)?
            .with("hypothesis", hyp.words.join(" "))
            .with("oov", missing.join(" ")))
    }
}

pub struct PerSem;

impl Metric for PerSem {
    fn name(&self) -> &'static str {
        "per_sem"
    }
    fn family(&self) -> Family {
        Family::Text
    }
    fn polarity(&self) -> Polarity {
        Polarity::LowerIsBetter
    }
    fn score(&self, ctx: &ScoringContext, rec: &UtteranceRecord) -> Result<Scored> {
        let reference = without_sil(ctx, &rec.phonemes);
        if reference.is_empty() {
            return Err(Error::undefined("no reference phonemes"));
        }
        let words = greedy_words(&ctx.sem_posteriors(rec)?)?;
        let (hyp, missing) = phonemes_of(ctx, &words);
        Ok(Scored::new(per(&reference, &hyp)?)
            .with("semantic_words", words.join(" "))
            .with("oov", missing.join(" ")))
    }
}

pub struct PerPhone;

impl Metric for PerPhone {
    fn name(&self) -> &'static str {
        "per_phone"
    }
    fn family(&self) -> Family {
        Family::Text
    }
    fn polarity(&self) -> Polarity {
        Polarity::LowerIsBetter
    }
    fn score(&self, ctx: &ScoringContext, rec: &UtteranceRecord) -> Result<Scored> {
        let reference = without_sil(ctx, &rec.phonemes);
        if reference.is_empty() {
            return Err(Error::undefined("no reference phonemes"));
        }
        let hyp = greedy_phones(ctx, &ctx.phone_posteriors(rec)?);
        Ok(Scored::new(per(&reference, &hyp)?).with("hypothesis", hyp.join(" ")))
    }
}

pub struct Artp;

/// Alignment target for the reference transcript: the same word-level
/// phonemisation DArtP applies to its hypothesis, or the record's stored
/// phonemes when a word is missing from the lexicon.
pub(crate) fn reference_target(ctx: &ScoringContext, rec: &UtteranceRecord) -> Vec<String> {
    let words = rec.words();
    if pronounce_all(&words, &ctx.corpus.lexicon).is_some() {
        phonemize_words(&words, &ctx.corpus.lexicon, &ctx.corpus.vocab_phone).0
    } else {
        rec.phonemes.clone()
    }
}

impl Metric for Artp {
    fn name(&self) -> &'static str {
        "artp"
    }
    fn family(&self) -> Family {
        Family::Text
    }
    fn polarity(&self) -> Polarity {
        Polarity::HigherIsBetter
    }
    fn score(&self, ctx: &ScoringContext, rec: &UtteranceRecord) -> Result<Scored> {
        let target = reference_target(ctx, rec);
        if target.is_empty() {
            return Err(Error::undefined("no reference phonemes"));
        }
        align_and_score(ctx, &ctx.phone_posteriors(rec)?, &target)
    }
}
