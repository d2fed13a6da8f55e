use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Output label inventory of a CTC model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocabSpec {
    pub labels: Vec<String>,
    pub blank_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sil_index: Option<usize>,
    /// Token separating words in a character-level vocabulary.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub word_delimiter: Option<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabFile {
    schema_version: u32,
    #[serde(flatten)]
    vocab: VocabSpec,
}

impl VocabSpec {
    pub fn new(labels: Vec<String>, blank_index: usize, sil_index: Option<usize>) -> Result<Self> {
        let mut v = Self {
            labels,
            blank_index,
            sil_index,
            word_delimiter: None,
            index: HashMap::new(),
        };
        v.rebuild()?;
        Ok(v)
    }

    pub fn with_word_delimiter(mut self, token: impl Into<String>) -> Result<Self> {
        self.word_delimiter = Some(token.into());
        self.rebuild()?;
        Ok(self)
    }

    fn rebuild(&mut self) -> Result<()> {
        self.index.clear();
        for (i, l) in self.labels.iter().enumerate() {
            if self.index.insert(l.clone(), i).is_some() {
                return Err(Error::Format(format!("duplicate vocab label {l:?}")));
            }
        }
        if self.blank_index >= self.labels.len() {
            return Err(Error::Format(format!(
                "blank_index {} out of range for {} labels",
                self.blank_index,
                self.labels.len()
            )));
        }
        if let Some(s) = self.sil_index {
            if s >= self.labels.len() {
                return Err(Error::Format(format!("sil_index {s} out of range")));
            }
            if s == self.blank_index {
                return Err(Error::Format("sil_index equals blank_index".into()));
            }
        }
        if let Some(d) = &self.word_delimiter {
            if !self.index.contains_key(d) {
                return Err(Error::Format(format!(
                    "word delimiter {d:?} is not a vocab label"
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn id(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn label(&self, id: usize) -> &str {
        &self.labels[id]
    }

    pub fn delimiter_index(&self) -> Option<usize> {
        self.word_delimiter.as_deref().and_then(|d| self.id(d))
    }

    /// True for blank and SIL, the labels excluded from active speech.
    pub fn is_inactive(&self, id: usize) -> bool {
        id == self.blank_index || Some(id) == self.sil_index
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: VocabFile = serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.into(),
            message: e.to_string(),
        })?;
        check_schema(file.schema_version, path)?;
        let mut v = file.vocab;
        v.rebuild()
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        Ok(v)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = VocabFile {
            schema_version: super::SCHEMA_VERSION,
            vocab: self.clone(),
        };
        let text = serde_json::to_string_pretty(&file).expect("vocab serialises");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

pub(crate) fn check_schema(version: u32, path: &Path) -> Result<()> {
    if version != super::SCHEMA_VERSION {
        return Err(Error::Format(format!(
            "{}: unsupported schema_version {version}",
            path.display()
        )));
    }
    Ok(())
}
