//! Interchange formats: tensors, manifests, vocabularies, lexicon and audio.

pub mod lexicon;
pub mod manifest;
pub mod tensor;
pub mod text;
pub mod vocab;
pub mod wav;

pub use lexicon::Lexicon;
pub use manifest::{
    load_manifest, match_parallel, Condition, Corpus, Finding, Group, ProtocolSpec, Severity,
    Stimulus, UtteranceRecord,
};
pub use tensor::{read_tensor, write_tensor, Tensor2D};
pub use vocab::VocabSpec;

/// Version stamped into every JSON document this crate reads or writes.
pub const SCHEMA_VERSION: u32 = 1;
