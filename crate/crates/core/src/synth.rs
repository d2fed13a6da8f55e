//! Synthetic benchmark corpus with known, monotone degradation.
//!
//! Pathological speaker `k` (1-based) has severity `k / n` and clinical
//! target `n + 1 - k`. Severity drives every artifact: phone and letter
//! posteriors lose peak mass and swap segments, frame features drift away
//! from per-phoneme prototypes, vowels centralise and additive noise grows.
//! Each utterance jitters its speaker's severity, so protocols with more
//! utterances per speaker average that noise down.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::io::manifest::{
    save_manifest, save_protocols, Condition, Group, ManifestFile, Polarity, ProtocolSpec, Stimulus,
    UtteranceRecord,
};
use crate::io::text::content_key;
use crate::io::wav::write_wav;
use crate::io::{write_tensor, Lexicon, Tensor2D, VocabSpec};

const FS: f64 = 16_000.0;
const HOP: usize = 320;
const FEATURE_DIM: usize = 12;
const PHONEMES: [&str; 14] = ["p", "t", "k", "b", "d", "g", "a", "e", "i", "o", "u", "m", "n", "s"];
const WORDS: [&str; 16] = [
    "pat", "tip", "kit", "bad", "dog", "gum", "map", "nod", "sun", "top", "bus", "mud", "pig", "sit",
    "ten", "but",
];

#[derive(Debug, Clone)]
pub struct SynthOptions {
    pub seed: u64,
    pub pathological: usize,
    pub controls: usize,
    /// Prompts per stimulus type in the MC protocols.
    pub mc_prompts: usize,
    /// EX prompts are `ex_factor` times as many, MC's included.
    pub ex_factor: usize,
    pub words_per_sentence: usize,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            seed: 7,
            pathological: 10,
            controls: 3,
            mc_prompts: 6,
            ex_factor: 3,
            words_per_sentence: 3,
        }
    }
}

struct Speaker {
    id: String,
    group: Group,
    severity: f64,
    f0: f64,
    age: f64,
}

/// One phoneme (or pause) with its length in frames.
#[derive(Clone, Copy)]
enum Segment {
    Edge(usize),
    Pause(usize),
    Phone { phoneme: usize, frames: usize },
}

fn phone_formants(p: &str) -> Option<(f64, f64)> {
    Some(match p {
        "i" => (342.0, 2322.0),
        "e" => (588.0, 1952.0),
        "a" => (768.0, 1333.0),
        "o" => (520.0, 920.0),
        "u" => (378.0, 997.0),
        _ => return None,
    })
}

fn gauss(rng: &mut StdRng) -> f64 {
    StandardNormal.sample(rng)
}

/// Two-pole resonator applied in place.
fn resonate(x: &mut [f64], freq: f64, bw: f64) {
    let r = (-PI * bw / FS).exp();
    let theta = 2.0 * PI * freq / FS;
    let (a1, a2) = (2.0 * r * theta.cos(), -r * r);
    let gain = 1.0 - r;
    let (mut y1, mut y2) = (0.0, 0.0);
    for v in x.iter_mut() {
        let y = gain * *v + a1 * y1 + a2 * y2;
        y2 = y1;
        y1 = y;
        *v = y;
    }
}

fn pulses(n: usize, f0: f64, phase: &mut f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            *phase += f0 / FS;
            if *phase >= 1.0 {
                *phase -= 1.0;
                1.0
            } else {
                0.0
            }
        })
        .collect()
}

fn normalise_peak(x: &mut [f64], peak: f64) {
    let m = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if m > 0.0 {
        x.iter_mut().for_each(|v| *v *= peak / m);
    }
}

/// Source-filter rendering of a segment sequence; `sounded[i]` is the
/// phoneme actually produced for segment `i`.
fn render_audio(segs: &[Segment], sounded: &[usize], spk: &Speaker, severity: f64, rng: &mut StdRng) -> Vec<f32> {
    let mut out = Vec::new();
    let mut phase = 0.0;
    let shrink = 1.0 - 0.6 * severity;
    for (seg, &ph) in segs.iter().zip(sounded) {
        let (frames, phone) = match *seg {
            Segment::Edge(f) | Segment::Pause(f) => (f, None),
            Segment::Phone { frames, .. } => (frames, Some(PHONEMES[ph])),
        };
        let n = frames * HOP;
        let mut x = match phone {
            None => vec![0.0; n],
            Some(p) => {
                let f0 = spk.f0 * (1.0 + 0.03 * gauss(rng));
                match (p, phone_formants(p)) {
                    (_, Some((f1, f2))) => {
                        let f1 = 500.0 + shrink * (f1 - 500.0);
                        let f2 = 1500.0 + shrink * (f2 - 1500.0);
                        let mut v = pulses(n, f0, &mut phase);
                        resonate(&mut v, f1, 80.0);
                        resonate(&mut v, f2, 100.0);
                        normalise_peak(&mut v, 0.8);
                        v
                    }
                    ("s", _) => (0..n).map(|_| 0.15 * gauss(rng)).collect(),
                    ("p" | "t" | "k", _) => (0..n)
                        .map(|i| if i > n * 2 / 3 { 0.3 * gauss(rng) } else { 0.0 })
                        .collect(),
                    _ => {
                        let mut v = pulses(n, f0, &mut phase);
                        resonate(&mut v, 250.0, 100.0);
                        normalise_peak(&mut v, 0.4);
                        v
                    }
                }
            }
        };
        out.append(&mut x);
    }
    let power = out.iter().map(|v| v * v).sum::<f64>() / out.len() as f64;
    let snr_db = 35.0 - 30.0 * severity;
    let sd = (power / 10f64.powf(snr_db / 10.0)).sqrt();
    out.iter().map(|v| (v + sd * gauss(rng)) as f32).collect()
}

/// Peaky CTC rows: each segment's label peaks on its first two frames and
/// blanks fill the rest; edges are all blank.
fn posterior_rows(
    segs: &[Segment],
    labels: &[usize],
    blank: usize,
    v: usize,
    severity: f64,
    rng: &mut StdRng,
) -> Vec<Vec<f32>> {
    let mut rows = Vec::new();
    for (seg, &label) in segs.iter().zip(labels) {
        let frames = match *seg {
            Segment::Edge(f) | Segment::Pause(f) | Segment::Phone { frames: f, .. } => f,
        };
        let peaked = if matches!(seg, Segment::Edge(_)) { 0 } else { 2.min(frames) };
        for t in 0..frames {
            let target = if t < peaked { label } else { blank };
            let spread = (0.02 + 0.55 * severity * (0.5 + rng.random::<f64>())).min(0.75);
            let rival = rng.random_range(0..v);
            // Blank frames lose half as much mass; otherwise insertions
            // dominate and PER grows convexly with severity.
            let lost = if target == blank { spread / 2.0 } else { spread };
            let mut row = vec![0.002f64; v];
            row[target] += 1.0 - lost;
            row[rival] += lost * 0.7;
            for r in row.iter_mut() {
                *r += lost * 0.3 / v as f64;
            }
            let sum: f64 = row.iter().sum();
            rows.push(row.iter().map(|p| (p / sum) as f32).collect());
        }
    }
    rows
}

fn feature_rows(segs: &[Segment], sounded: &[usize], protos: &[Vec<f64>], severity: f64, rng: &mut StdRng) -> Vec<Vec<f32>> {
    let silence = protos.len() - 1;
    let sd = 0.15 + 1.2 * severity;
    let mut rows = Vec::new();
    for (seg, &ph) in segs.iter().zip(sounded) {
        let (frames, proto) = match *seg {
            Segment::Edge(f) | Segment::Pause(f) => (f, &protos[silence]),
            Segment::Phone { frames, .. } => (frames, &protos[ph]),
        };
        for _ in 0..frames {
            rows.push(proto.iter().map(|m| (m + sd * gauss(rng)) as f32).collect());
        }
    }
    rows
}

struct Prompt {
    stimulus: Stimulus,
    text: String,
}

fn prompts(opts: &SynthOptions, rng: &mut StdRng) -> Vec<Prompt> {
    let n = opts.mc_prompts * opts.ex_factor;
    let mut out = Vec::new();
    for i in 0..n {
        out.push(Prompt {
            stimulus: Stimulus::Word,
            text: WORDS[i % WORDS.len()].to_string(),
        });
    }
    for _ in 0..n {
        let words: Vec<&str> = (0..opts.words_per_sentence).map(|_| WORDS[rng.random_range(0..WORDS.len())]).collect();
        out.push(Prompt {
            stimulus: Stimulus::Sentence,
            text: words.join(" "),
        });
    }
    out
}

/// Bigram ARPA model estimated from the sentence prompts, with a fixed
/// discount and uniform unigrams.
fn arpa(prompts: &[Prompt]) -> String {
    let mut bigrams: BTreeMap<(String, String), usize> = BTreeMap::new();
    let mut history: BTreeMap<String, usize> = BTreeMap::new();
    for p in prompts.iter().filter(|p| p.stimulus == Stimulus::Sentence) {
        let mut toks = vec!["<s>".to_string()];
        toks.extend(p.text.split(' ').map(str::to_string));
        toks.push("</s>".into());
        for w in toks.windows(2) {
            *bigrams.entry((w[0].clone(), w[1].clone())).or_default() += 1;
            *history.entry(w[0].clone()).or_default() += 1;
        }
    }
    let uni = -((WORDS.len() + 2) as f64).log10();
    let backoff = 0.3f64.log10();
    let mut s = format!("\\data\\\nngram 1={}\nngram 2={}\n\n\\1-grams:\n", WORDS.len() + 3, bigrams.len());
    s += &format!("{uni:.6}\t</s>\n-99\t<s>\t{backoff:.6}\n{uni:.6}\t<unk>\n");
    for w in WORDS {
        s += &format!("{uni:.6}\t{w}\t{backoff:.6}\n");
    }
    s += "\n\\2-grams:\n";
    for ((a, b), c) in &bigrams {
        s += &format!("{:.6}\t{a} {b}\n", (0.7 * *c as f64 / history[a] as f64).log10());
    }
    s + "\n\\end\\\n"
}

fn mkdir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Writes a complete corpus under `out` and returns the manifest path.
pub fn generate(out: &Path, opts: &SynthOptions) -> Result<PathBuf> {
    if opts.pathological < 3 || opts.controls == 0 || opts.mc_prompts == 0 || opts.ex_factor == 0 {
        return Err(Error::Config(
            "synth needs at least 3 pathological speakers, one control and one prompt".into(),
        ));
    }
    for dir in ["audio", "sem", "phone", "feat"] {
        mkdir(&out.join(dir))?;
    }
    let mut rng = StdRng::seed_from_u64(opts.seed);

    let phone_labels: Vec<String> =
        ["<blank>", "SIL"].into_iter().chain(PHONEMES).map(str::to_string).collect();
    let vocab_phone = VocabSpec::new(phone_labels, 0, Some(1))?;
    let sem_labels: Vec<String> = ["<pad>".to_string(), "|".to_string()]
        .into_iter()
        .chain(('a'..='z').map(|c| c.to_string()))
        .collect();
    let vocab_sem = VocabSpec::new(sem_labels, 0, None)?.with_word_delimiter("|")?;
    let lexicon = Lexicon {
        phonemes: PHONEMES.iter().map(|p| p.to_string()).collect(),
        words: WORDS.iter().map(|w| (w.to_string(), w.chars().map(|c| c.to_string()).collect())).collect(),
        graphemes: ('a'..='z')
            .map(|c| {
                let g = c.to_string();
                let pron: Vec<&str> = match c {
                    'c' | 'q' => vec!["k"],
                    'f' => vec!["p"],
                    'j' => vec!["d"],
                    'l' | 'r' => vec!["n"],
                    'v' => vec!["b"],
                    'w' => vec!["u"],
                    'x' => vec!["k", "s"],
                    'y' => vec!["i"],
                    'z' => vec!["s"],
                    'h' => vec![],
                    _ => vec![PHONEMES.iter().find(|p| **p == g).expect("letter is a phoneme")],
                };
                (g, pron.into_iter().map(str::to_string).collect())
            })
            .collect(),
    };
    vocab_phone.save(out.join("vocab_phone.json"))?;
    vocab_sem.save(out.join("vocab_sem.json"))?;
    lexicon.save(out.join("lexicon.json"))?;

    let prompts = prompts(opts, &mut rng);
    std::fs::write(out.join("lm.arpa"), arpa(&prompts)).map_err(|e| Error::io(out.join("lm.arpa"), e))?;

    // Last prototype is silence.
    let protos: Vec<Vec<f64>> =
        (0..=PHONEMES.len()).map(|_| (0..FEATURE_DIM).map(|_| gauss(&mut rng)).collect()).collect();

    let n = opts.pathological;
    let mut speakers: Vec<Speaker> = (1..=n)
        .map(|k| Speaker {
            id: format!("P{k:02}"),
            group: Group::Pathological,
            severity: k as f64 / n as f64,
            f0: 100.0 + 8.0 * k as f64,
            age: 40.0 + ((k * 7) % 10) as f64 * 4.0,
        })
        .collect();
    speakers.extend((1..=opts.controls).map(|c| Speaker {
        id: format!("C{c:02}"),
        group: Group::Control,
        severity: 0.0,
        f0: 110.0 + 25.0 * c as f64,
        age: 50.0 + c as f64,
    }));

    let mut utterances = Vec::new();
    for (si, spk) in speakers.iter().enumerate() {
        for (pi, prompt) in prompts.iter().enumerate() {
            let mut rng = StdRng::seed_from_u64(opts.seed ^ ((si as u64 + 1) << 32) ^ (pi as u64 + 1) * 0x9E37_79B9);
            let severity = if spk.group == Group::Control {
                0.0
            } else {
                (spk.severity + 0.12 * gauss(&mut rng)).clamp(0.0, 1.0)
            };
            let words: Vec<&str> = prompt.text.split(' ').collect();
            let mut segs = vec![Segment::Edge(8)];
            for (wi, w) in words.iter().enumerate() {
                if wi > 0 {
                    segs.push(Segment::Pause(3));
                }
                for c in w.chars() {
                    let phoneme = PHONEMES.iter().position(|p| *p == c.to_string()).expect("letters are phonemes");
                    let base = 4.0 + 2.0 * severity + rng.random_range(-1.0..1.0);
                    segs.push(Segment::Phone {
                        phoneme,
                        frames: base.round().max(2.0) as usize,
                    });
                }
            }
            segs.push(Segment::Edge(8));

            // Severity swaps whole segments for another phoneme.
            let swap = 0.45 * severity;
            let sounded: Vec<usize> = segs
                .iter()
                .map(|s| match *s {
                    Segment::Phone { phoneme, .. } if rng.random::<f64>() < swap => {
                        (phoneme + rng.random_range(1..PHONEMES.len())) % PHONEMES.len()
                    }
                    Segment::Phone { phoneme, .. } => phoneme,
                    _ => usize::MAX,
                })
                .collect();
            let phone_ids: Vec<usize> = segs
                .iter()
                .zip(&sounded)
                .map(|(s, &ph)| match s {
                    Segment::Edge(_) => 0,
                    Segment::Pause(_) => 1,
                    Segment::Phone { .. } => ph + 2,
                })
                .collect();
            let sem_ids: Vec<usize> = segs
                .iter()
                .zip(&sounded)
                .map(|(s, &ph)| match s {
                    Segment::Edge(_) => 0,
                    Segment::Pause(_) => 1,
                    Segment::Phone { .. } => {
                        let c = PHONEMES[ph].chars().next().expect("one letter");
                        2 + (c as u8 - b'a') as usize
                    }
                })
                .collect();

            let uid = format!(
                "{}_{}{:02}",
                spk.id,
                if prompt.stimulus == Stimulus::Word { 'W' } else { 'S' },
                pi % (opts.mc_prompts * opts.ex_factor)
            );
            let phone = Tensor2D::from_rows(&posterior_rows(&segs, &phone_ids, 0, vocab_phone.len(), severity, &mut rng))?;
            let sem = Tensor2D::from_rows(&posterior_rows(&segs, &sem_ids, 0, vocab_sem.len(), severity, &mut rng))?;
            let feat = Tensor2D::from_rows(&feature_rows(&segs, &sounded, &protos, severity, &mut rng))?;
            let audio = render_audio(&segs, &sounded, spk, severity, &mut rng);
            let rel = |dir: &str, ext: &str| PathBuf::from(dir).join(format!("{uid}.{ext}"));
            write_tensor(&phone, out.join(rel("phone", "pbt")))?;
            write_tensor(&sem, out.join(rel("sem", "pbt")))?;
            write_tensor(&feat, out.join(rel("feat", "pbt")))?;
            write_wav(out.join(rel("audio", "wav")), &audio, FS as u32)?;

            utterances.push(UtteranceRecord {
                utterance_id: uid.clone(),
                speaker_id: spk.id.clone(),
                group: spk.group,
                stimulus: prompt.stimulus,
                content_key: content_key(&prompt.text),
                transcript: prompt.text.clone(),
                phonemes: words.iter().flat_map(|w| w.chars().map(|c| c.to_string())).collect(),
                audio_path: rel("audio", "wav"),
                sem_logits_path: Some(rel("sem", "pbt")),
                phone_logits_path: Some(rel("phone", "pbt")),
                features_path: Some(rel("feat", "pbt")),
                age: Some(spk.age),
            });
        }
    }

    let targets: BTreeMap<String, f64> = speakers
        .iter()
        .filter(|s| s.group == Group::Pathological)
        .enumerate()
        .map(|(i, s)| (s.id.clone(), (n - i) as f64))
        .collect();
    let mut protocols = Vec::new();
    for stimulus in [Stimulus::Word, Stimulus::Sentence] {
        for (condition, count) in [(Condition::MC, opts.mc_prompts), (Condition::EX, opts.mc_prompts * opts.ex_factor)] {
            let mut ids: Vec<String> = utterances
                .iter()
                .filter(|u| u.stimulus == stimulus)
                .filter(|u| u.utterance_id[u.utterance_id.len() - 2..].parse::<usize>().map_or(false, |i| i < count))
                .map(|u| u.utterance_id.clone())
                .collect();
            ids.sort();
            protocols.push(ProtocolSpec {
                name: format!("synth-{condition}-{stimulus}"),
                dataset: "synth".into(),
                condition,
                stimulus,
                utterance_ids: ids,
                speaker_targets: targets.clone(),
                target_polarity: Polarity::HigherIsBetter,
            });
        }
    }
    save_protocols(out.join("protocols.json"), &protocols)?;

    let manifest = ManifestFile {
        schema_version: crate::io::SCHEMA_VERSION,
        dataset: "synth".into(),
        language: "en".into(),
        vocab_sem: "vocab_sem.json".into(),
        vocab_phone: "vocab_phone.json".into(),
        lexicon: "lexicon.json".into(),
        protocols: "protocols.json".into(),
        lm: Some("lm.arpa".into()),
        frame_hop: HOP as f64 / FS,
        utterances,
    };
    let path = out.join("manifest.json");
    save_manifest(&path, &manifest)?;
    Ok(path)
}
