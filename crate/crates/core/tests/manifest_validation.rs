//! Corrupts one field of a valid corpus at a time and checks that
//! validation reports it against the right record or document.

mod common;

use std::path::Path;

use pathmetrics::commands::{cmd_validate, exit_code, EXIT_VALIDATION};
use pathmetrics::io::manifest::{inspect_manifest, Category, Finding, Severity};
use pathmetrics::Error;
use serde_json::{json, Value};

use common::{default_corpus, mutated, Docs};

/// Error-severity findings, whether reported in-band or as a hard
/// validation failure.
fn errors(manifest: &Path) -> Vec<Finding> {
    let findings = match inspect_manifest(manifest) {
        Ok((_, f)) => f,
        Err(Error::Validation(f)) => f,
        Err(e) => panic!("unexpected error {e}"),
    };
    findings.into_iter().filter(|f| f.severity == Severity::Error).collect()
}

fn remove_id(list: &mut Value, id: &str) {
    list.as_array_mut().unwrap().retain(|v| v != id);
}

struct Mutation {
    name: &'static str,
    edit: fn(&mut Docs),
    category: Category,
    subject: &'static str,
    mentions: &'static str,
}

const MUTATIONS: &[Mutation] = &[
    Mutation {
        name: "duplicate utterance id",
        edit: |d| {
            let copy = d.utterance("P01_W01").clone();
            d.utterance("P01_W00")["utterance_id"] = copy["utterance_id"].clone();
        },
        category: Category::Duplicate,
        subject: "P01_W01",
        mentions: "duplicate",
    },
    Mutation {
        name: "content key out of sync with transcript",
        edit: |d| d.utterance("P02_W00")["content_key"] = json!("something else"),
        category: Category::Content,
        subject: "P02_W00",
        mentions: "something else",
    },
    Mutation {
        name: "record phoneme outside the phonetic vocab",
        edit: |d| d.utterance("P03_W00")["phonemes"][0] = json!("zz"),
        category: Category::Lexicon,
        subject: "P03_W00",
        mentions: "\"zz\"",
    },
    Mutation {
        name: "lexicon word with unknown phoneme",
        edit: |d| {
            let words = d.lexicon["words"].as_object_mut().unwrap();
            let first = words.keys().next().unwrap().clone();
            words[&first][0] = json!("zz");
        },
        category: Category::Lexicon,
        subject: "lexicon",
        mentions: "\"zz\"",
    },
    Mutation {
        name: "lexicon word with empty pronunciation",
        edit: |d| {
            let words = d.lexicon["words"].as_object_mut().unwrap();
            let first = words.keys().next().unwrap().clone();
            words[&first] = json!([]);
        },
        category: Category::Lexicon,
        subject: "lexicon",
        mentions: "empty pronunciation",
    },
    Mutation {
        name: "grapheme rule with unknown phoneme",
        edit: |d| d.lexicon["graphemes"]["x"] = json!(["zz"]),
        category: Category::Lexicon,
        subject: "lexicon",
        mentions: "\"zz\"",
    },
    Mutation {
        name: "transcript word with no pronunciation",
        edit: |d| {
            let u = d.utterance("P04_W00");
            u["transcript"] = json!("pat 7");
            u["content_key"] = json!("");
            u["phonemes"] = json!([]);
        },
        category: Category::Lexicon,
        subject: "P04_W00",
        mentions: "\"7\"",
    },
    Mutation {
        name: "protocol lists an unknown utterance",
        edit: |d| {
            d.protocol("synth-EX-Word")["utterance_ids"].as_array_mut().unwrap().push(json!("ghost"));
        },
        category: Category::Protocol,
        subject: "synth-EX-Word",
        mentions: "ghost",
    },
    Mutation {
        name: "protocol lists an utterance twice",
        edit: |d| {
            d.protocol("synth-EX-Word")["utterance_ids"].as_array_mut().unwrap().push(json!("P01_W00"));
        },
        category: Category::Duplicate,
        subject: "synth-EX-Word",
        mentions: "P01_W00",
    },
    Mutation {
        name: "sentence utterance in a word protocol",
        edit: |d| {
            for p in ["synth-MC-Word", "synth-EX-Word"] {
                d.protocol(p)["utterance_ids"].as_array_mut().unwrap().push(json!("P01_S00"));
            }
        },
        category: Category::Protocol,
        subject: "synth-MC-Word",
        mentions: "P01_S00",
    },
    Mutation {
        name: "pathological speaker without target",
        edit: |d| {
            d.protocol("synth-MC-Word")["speaker_targets"].as_object_mut().unwrap().remove("P05");
        },
        category: Category::Target,
        subject: "synth-MC-Word",
        mentions: "P05",
    },
    Mutation {
        name: "MC utterance missing from EX",
        edit: |d| remove_id(&mut d.protocol("synth-EX-Sentence")["utterance_ids"], "P06_S01"),
        category: Category::Subset,
        subject: "synth-MC-Sentence",
        mentions: "P06_S01",
    },
    Mutation {
        name: "duplicate protocol name",
        edit: |d| {
            let copy = d.protocol("synth-MC-Word").clone();
            d.protocols["protocols"].as_array_mut().unwrap().push(copy);
        },
        category: Category::Duplicate,
        subject: "synth-MC-Word",
        mentions: "duplicate protocol",
    },
    Mutation {
        name: "non-positive frame hop",
        edit: |d| d.manifest["frame_hop"] = json!(0.0),
        category: Category::Schema,
        subject: "manifest",
        mentions: "frame_hop",
    },
    Mutation {
        name: "unsupported manifest schema version",
        edit: |d| d.manifest["schema_version"] = json!(99),
        category: Category::Schema,
        subject: "manifest",
        mentions: "99",
    },
    Mutation {
        name: "unsupported protocols schema version",
        edit: |d| d.protocols["schema_version"] = json!(99),
        category: Category::Schema,
        subject: "protocols",
        mentions: "99",
    },
    Mutation {
        name: "duplicate vocab label",
        edit: |d| d.vocab_phone["labels"][3] = json!("p"),
        category: Category::Schema,
        subject: "vocab_phone",
        mentions: "\"p\"",
    },
    Mutation {
        name: "blank index out of range",
        edit: |d| d.vocab_sem["blank_index"] = json!(500),
        category: Category::Schema,
        subject: "vocab_sem",
        mentions: "500",
    },
    Mutation {
        name: "silence index equals blank index",
        edit: |d| d.vocab_phone["sil_index"] = json!(0),
        category: Category::Schema,
        subject: "vocab_phone",
        mentions: "sil_index",
    },
];

#[test]
fn synthetic_corpus_is_valid() {
    let manifest = default_corpus();
    assert_eq!(errors(&manifest), vec![]);
    assert!(cmd_validate(&manifest).unwrap().is_empty());
}

#[test]
fn every_mutation_is_detected() {
    let manifest = default_corpus();
    for m in MUTATIONS {
        let (_dir, path) = mutated(&manifest, m.edit);
        let found = errors(&path);
        let hit = found
            .iter()
            .find(|f| f.category == m.category && f.subject == m.subject && f.message.contains(m.mentions));
        assert!(hit.is_some(), "{}: no {:?} finding on {} mentioning {}; got {found:#?}", m.name, m.category, m.subject, m.mentions);
        match cmd_validate(&path) {
            Err(e) => assert_eq!(exit_code(&e), EXIT_VALIDATION, "{}", m.name),
            Ok(_) => panic!("{}: validate passed", m.name),
        }
    }
}

#[test]
fn missing_data_file_is_a_warning() {
    let (_dir, path) = mutated(&default_corpus(), |d| {
        d.utterance("P01_W00")["audio_path"] = json!("/nonexistent/P01_W00.wav");
    });
    let findings = cmd_validate(&path).unwrap();
    assert!(findings
        .iter()
        .any(|f| f.category == Category::MissingFile && f.subject == "P01_W00" && f.severity == Severity::Warning));
}

#[test]
fn malformed_json_maps_to_validation_exit() {
    let (dir, path) = mutated(&default_corpus(), |_| {});
    std::fs::write(dir.path().join("protocols.json"), "{ not json").unwrap();
    let err = cmd_validate(&path).unwrap_err();
    assert!(matches!(err, Error::Json { .. }), "{err}");
    assert_eq!(exit_code(&err), EXIT_VALIDATION);
}
