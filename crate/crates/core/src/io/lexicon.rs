use std::borrow::Cow;
use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::vocab::{check_schema, VocabSpec};
use crate::error::{Error, Result};

/// Pronunciation dictionary: word → phoneme tokens.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Lexicon {
    /// Phoneme inventory the pronunciations draw from.
    pub phonemes: Vec<String>,
    pub words: BTreeMap<String, Vec<String>>,
    /// Letter-to-sound fallback for words missing from `words`: each
    /// character maps to zero or more phonemes.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub graphemes: BTreeMap<String, Vec<String>>,
}

#[derive(Serialize, Deserialize)]
struct LexiconFile {
    schema_version: u32,
    #[serde(flatten)]
    lexicon: Lexicon,
}

impl Lexicon {
    /// Dictionary pronunciation, else a letter-by-letter spelling when
    /// every character has a grapheme rule and the result is nonempty.
    pub fn pronounce(&self, word: &str) -> Option<Cow<'_, [String]>> {
        if let Some(p) = self.words.get(word) {
            return Some(Cow::Borrowed(p));
        }
        if self.graphemes.is_empty() {
            return None;
        }
        let mut out = Vec::new();
        let mut buf = [0u8; 4];
        for c in word.chars() {
            out.extend(self.graphemes.get(&*c.encode_utf8(&mut buf))?.iter().cloned());
        }
        (!out.is_empty()).then_some(Cow::Owned(out))
    }

    /// Inventory and pronunciation problems against the phonetic vocabulary.
    pub fn problems(&self, vocab: &VocabSpec) -> Vec<String> {
        let mut out = Vec::new();
        for p in &self.phonemes {
            if vocab.id(p).is_none() {
                out.push(format!("inventory phoneme {p:?} is not in the phonetic vocab"));
            }
        }
        for (g, pron) in &self.graphemes {
            for p in pron {
                if vocab.id(p).is_none() {
                    out.push(format!(
                        "grapheme {g:?} maps to phoneme {p:?} which is not in the phonetic vocab"
                    ));
                }
            }
        }
        for (w, pron) in &self.words {
            if pron.is_empty() {
                out.push(format!("word {w:?} has an empty pronunciation"));
            }
            for p in pron {
                if vocab.id(p).is_none() {
                    out.push(format!(
                        "word {w:?} uses phoneme {p:?} which is not in the phonetic vocab"
                    ));
                }
            }
        }
        out
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: LexiconFile = serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.into(),
            message: e.to_string(),
        })?;
        check_schema(file.schema_version, path)?;
        Ok(file.lexicon)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = LexiconFile {
            schema_version: super::SCHEMA_VERSION,
            lexicon: self.clone(),
        };
        let text = serde_json::to_string_pretty(&file).expect("lexicon serialises");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Phoneme target for a word sequence: pronunciations concatenated, with
/// the SIL token between words when the phonetic vocabulary has one.
/// Words missing from the lexicon are skipped and returned separately.
pub fn phonemize_words(
    words: &[String],
    lexicon: &Lexicon,
    vocab: &VocabSpec,
) -> (Vec<String>, Vec<String>) {
    let sil = vocab.sil_index.map(|i| vocab.label(i).to_owned());
    let mut out = Vec::new();
    let mut missing = Vec::new();
    for w in words {
        match lexicon.pronounce(w) {
            Some(pron) => {
                if let (Some(sil), false) = (&sil, out.is_empty()) {
                    out.push(sil.clone());
                }
                out.extend(pron.iter().cloned());
            }
            None => missing.push(w.clone()),
        }
    }
    (out, missing)
}

/// Plain concatenated pronunciations, no SIL; `None` if any word is missing.
pub fn pronounce_all(words: &[String], lexicon: &Lexicon) -> Option<Vec<String>> {
    let mut out = Vec::new();
    for w in words {
        out.extend(lexicon.pronounce(w)?.iter().cloned());
    }
    Some(out)
}
