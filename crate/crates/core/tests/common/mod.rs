#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, OnceLock};

use pathmetrics::synth::{generate, SynthOptions};
use serde_json::Value;
use tempfile::TempDir;

/// Generates a synthetic corpus once per test binary and returns its
/// manifest path. `name` keys the cache and the directory.
pub fn synth_corpus(name: &str, opts: &SynthOptions) -> PathBuf {
    static CACHE: OnceLock<Mutex<BTreeMap<String, PathBuf>>> = OnceLock::new();
    let mut cache = CACHE.get_or_init(Default::default).lock().unwrap();
    cache
        .entry(name.to_string())
        .or_insert_with(|| {
            let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(format!("synth-{name}"));
            let _ = std::fs::remove_dir_all(&dir);
            generate(&dir, opts).unwrap()
        })
        .clone()
}

/// The full default corpus.
pub fn default_corpus() -> PathBuf {
    synth_corpus("default", &SynthOptions::default())
}

/// Small corpus for tests that only need the pipeline to run.
pub fn small_corpus() -> PathBuf {
    synth_corpus(
        "small",
        &SynthOptions {
            pathological: 6,
            controls: 2,
            mc_prompts: 2,
            words_per_sentence: 2,
            ..SynthOptions::default()
        },
    )
}

/// Editable JSON documents of a corpus.
pub struct Docs {
    pub manifest: Value,
    pub protocols: Value,
    pub vocab_sem: Value,
    pub vocab_phone: Value,
    pub lexicon: Value,
}

impl Docs {
    pub fn utterance(&mut self, id: &str) -> &mut Value {
        self.manifest["utterances"]
            .as_array_mut()
            .unwrap()
            .iter_mut()
            .find(|u| u["utterance_id"] == id)
            .unwrap_or_else(|| panic!("no utterance {id}"))
    }

    pub fn protocol(&mut self, name: &str) -> &mut Value {
        self.protocols["protocols"]
            .as_array_mut()
            .unwrap()
            .iter_mut()
            .find(|p| p["name"] == name)
            .unwrap_or_else(|| panic!("no protocol {name}"))
    }
}

fn read(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn write(path: &Path, v: &Value) {
    std::fs::write(path, serde_json::to_string_pretty(v).unwrap()).unwrap();
}

/// Copies the JSON documents of `manifest` into a fresh directory after
/// `edit`. Data files (audio, tensors, LM) stay where they are and are
/// referenced by absolute path.
pub fn mutated(manifest: &Path, edit: impl FnOnce(&mut Docs)) -> (TempDir, PathBuf) {
    let base = manifest.parent().unwrap();
    let m = read(manifest);
    let doc = |key: &str| read(&base.join(m[key].as_str().unwrap()));
    let mut docs = Docs {
        protocols: doc("protocols"),
        vocab_sem: doc("vocab_sem"),
        vocab_phone: doc("vocab_phone"),
        lexicon: doc("lexicon"),
        manifest: m.clone(),
    };
    let absolute = |v: &mut Value| {
        if let Some(s) = v.as_str() {
            *v = Value::String(base.join(s).to_string_lossy().into_owned());
        }
    };
    absolute(&mut docs.manifest["lm"]);
    for u in docs.manifest["utterances"].as_array_mut().unwrap() {
        for key in ["audio_path", "sem_logits_path", "phone_logits_path", "features_path"] {
            absolute(&mut u[key]);
        }
    }
    edit(&mut docs);

    let dir = TempDir::new().unwrap();
    let out = dir.path();
    write(&out.join("protocols.json"), &docs.protocols);
    write(&out.join("vocab_sem.json"), &docs.vocab_sem);
    write(&out.join("vocab_phone.json"), &docs.vocab_phone);
    write(&out.join("lexicon.json"), &docs.lexicon);
    for (key, file) in [
        ("protocols", "protocols.json"),
        ("vocab_sem", "vocab_sem.json"),
        ("vocab_phone", "vocab_phone.json"),
        ("lexicon", "lexicon.json"),
    ] {
        docs.manifest[key] = Value::String(file.into());
    }
    let path = out.join("manifest.json");
    write(&path, &docs.manifest);
    (dir, path)
}

/// Every file under `dir` with its bytes, keyed by relative path.
pub fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}
