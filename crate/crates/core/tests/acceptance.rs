//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits nonzero if any fails. Oracles here are independent of the
//! library code they check.

mod common;

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use pathmetrics::commands::{cmd_report, cmd_score, cmd_validate, RunOptions};
use pathmetrics::config::{Corner, CppConfig, PitchConfig};
use pathmetrics::ctc::{beam_search_decode, force_align, PosteriorMatrix};
use pathmetrics::dsp::{cpp, track_pitch, vsa, wada_snr, AudioBuffer, WadaTable};
use pathmetrics::harness::report::Report;
use pathmetrics::harness::{pearson, wilcoxon_signed_rank};
use pathmetrics::io::manifest::{inspect_manifest, Category, Condition, Severity, Stimulus};
use pathmetrics::io::VocabSpec;
use pathmetrics::lm::parse_arpa;
use pathmetrics::metrics::text::per;
use pathmetrics::metrics::MetricRegistry;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde_json::json;
use tempfile::TempDir;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn random_rows(rng: &mut StdRng, t: usize, v: usize) -> Vec<Vec<f32>> {
    (0..t)
        .map(|_| {
            let raw: Vec<f64> = (0..v).map(|_| rng.random::<f64>() + 0.01).collect();
            let s: f64 = raw.iter().sum();
            raw.iter().map(|x| (x / s) as f32).collect()
        })
        .collect()
}

fn every_path(t: usize, v: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..v.pow(t as u32)).map(move |mut k| {
        let mut p = vec![0; t];
        for slot in p.iter_mut().rev() {
            *slot = k % v;
            k /= v;
        }
        p
    })
}

fn collapse(path: &[usize], blank: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut prev = None;
    for &l in path {
        if Some(l) != prev && l != blank {
            out.push(l);
        }
        prev = Some(l);
    }
    out
}

const ARPA: &str = "\\data\\
ngram 1=6
ngram 2=4

\\1-grams:
-1.0 <unk> 0.0
-99 <s> -0.5
-0.7 </s> 0.0
-0.5 a -0.3
-0.6 b -0.2
-0.9 ab -0.1

\\2-grams:
-0.3 <s> a
-0.4 a b
-0.2 b </s>
-0.5 ab </s>

\\end\\
";

fn ctc_oracles() -> Check {
    let start = Instant::now();
    let lm = parse_arpa(ARPA).map_err(|e| e.to_string())?;
    let mut rng = StdRng::seed_from_u64(2024);
    let (mut aligned, mut infeasible) = (0, 0);
    for i in 0..200 {
        let t = rng.random_range(1..=5);
        let v = rng.random_range(3..=4);
        let labels: Vec<String> = ["_", "|", "a", "b"][..v].iter().map(|s| s.to_string()).collect();
        let vocab = VocabSpec::new(labels.clone(), 0, None)
            .and_then(|s| s.with_word_delimiter("|"))
            .map_err(|e| e.to_string())?;
        let p = PosteriorMatrix::from_rows(&random_rows(&mut rng, t, v), vocab, 0.02).map_err(|e| e.to_string())?;
        let ln = |path: &[usize]| path.iter().enumerate().map(|(f, &l)| p.ln(f, l)).sum::<f64>();

        // Forced alignment: best path among all that collapse to the target.
        let len = rng.random_range(1..=3);
        let target: Vec<usize> = (0..len).map(|_| rng.random_range(1..v)).collect();
        let best = every_path(t, v)
            .filter(|path| collapse(path, 0) == target)
            .map(|path| ln(&path))
            .fold(None, |m: Option<f64>, s| Some(m.map_or(s, |m| m.max(s))));
        match (force_align(&p, &target), best) {
            (Ok(path), Some(want)) => {
                ensure((path.score - want).abs() <= 1e-9, || format!("instance {i}: align {} vs {want}", path.score))?;
                ensure(collapse(&path.labels, 0) == target, || format!("instance {i}: path does not collapse"))?;
                ensure((ln(&path.labels) - path.score).abs() <= 1e-9, || format!("instance {i}: score mismatch"))?;
                aligned += 1;
            }
            (Err(_), None) => infeasible += 1,
            (got, want) => return Err(format!("instance {i}: align {:?} vs oracle {want:?}", got.map(|p| p.score))),
        }

        // Unbounded beam against exhaustive scoring of every collapsed sequence.
        let (alpha, beta) = (rng.random_range(0.0..2.0), rng.random_range(-1.0..2.0));
        let mut acoustic: HashMap<Vec<usize>, f64> = HashMap::new();
        for path in every_path(t, v) {
            let e = acoustic.entry(collapse(&path, 0)).or_insert(f64::NEG_INFINITY);
            *e = log_add(*e, ln(&path));
        }
        let want = acoustic
            .iter()
            .map(|(seq, a)| {
                let words: Vec<String> = seq
                    .split(|&l| l == 1)
                    .filter(|w| !w.is_empty())
                    .map(|w| w.iter().map(|&l| labels[l].as_str()).collect())
                    .collect();
                a + alpha * lm.score_sequence(&words) + beta * words.len() as f64
            })
            .fold(f64::NEG_INFINITY, f64::max);
        let got = beam_search_decode(&p, &lm, alpha, beta, usize::MAX).map_err(|e| e.to_string())?;
        ensure((got.combined - want).abs() <= 1e-9, || format!("instance {i}: beam {} vs {want}", got.combined))?;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 10.0, || format!("took {secs:.1} s"))?;
    Ok(format!("200 instances ({aligned} alignable, {infeasible} infeasible) in {secs:.2} s"))
}

fn per_oracle() -> Check {
    fn reference(a: &[u8], b: &[u8]) -> usize {
        let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
        for (i, row) in d.iter_mut().enumerate() {
            row[0] = i;
        }
        for j in 0..=b.len() {
            d[0][j] = j;
        }
        for i in 1..=a.len() {
            for j in 1..=b.len() {
                let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
                d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
            }
        }
        d[a.len()][b.len()]
    }
    let mut rng = StdRng::seed_from_u64(99);
    for i in 0..1000 {
        let alphabet = rng.random_range(2..=6u8);
        let r: Vec<u8> = (0..rng.random_range(1..=15)).map(|_| rng.random_range(0..alphabet)).collect();
        let h: Vec<u8> = (0..rng.random_range(0..=15)).map(|_| rng.random_range(0..alphabet)).collect();
        let want = reference(&r, &h) as f64 / r.len() as f64;
        let got = per(&r, &h).map_err(|e| e.to_string())?;
        ensure(got == want, || format!("pair {i}: {got} vs {want}"))?;
    }
    Ok("1000 pairs exact".into())
}

fn statistics_oracles() -> Check {
    let mut rng = StdRng::seed_from_u64(5);
    for i in 0..200 {
        let n = rng.random_range(3..=30);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-50.0..50.0)).collect();
        let (a, b) = (rng.random_range(0.1..10.0), rng.random_range(-20.0..20.0));
        let up: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let down: Vec<f64> = x.iter().map(|v| -a * v + b).collect();
        let r_up = pearson(&x, &up).map_err(|e| e.to_string())?;
        let r_down = pearson(&x, &down).map_err(|e| e.to_string())?;
        ensure((r_up - 1.0).abs() <= 1e-12 && (r_down + 1.0).abs() <= 1e-12, || {
            format!("affine case {i}: {r_up}, {r_down}")
        })?;
    }
    // Closed form for a small case: r = cov / (sd sd) = 0.5.
    let r = pearson(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).map_err(|e| e.to_string())?;
    ensure((r - 0.5).abs() <= 1e-12, || format!("closed form {r}"))?;

    let mut checked = 0;
    for i in 0..300 {
        let n = rng.random_range(5..=12);
        // Small integers force ties and zeros.
        let d: Vec<f64> = (0..n).map(|_| rng.random_range(-4i32..=4) as f64 * 0.5).collect();
        let nz: Vec<f64> = d.iter().copied().filter(|v| *v != 0.0).collect();
        let got = wilcoxon_signed_rank(&d, &vec![0.0; n]);
        if nz.len() < 5 {
            ensure(got.is_err(), || format!("case {i}: expected undefined"))?;
            continue;
        }
        let abs: Vec<f64> = nz.iter().map(|v| v.abs()).collect();
        let ranks: Vec<f64> = abs
            .iter()
            .map(|a| {
                let below = abs.iter().filter(|b| *b < a).count() as f64;
                let equal = abs.iter().filter(|b| *b == a).count() as f64;
                below + (equal + 1.0) / 2.0
            })
            .collect();
        let w_plus: f64 = nz.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
        let w = w_plus.min(ranks.iter().sum::<f64>() - w_plus);
        let m = nz.len();
        let hits = (0u32..1 << m)
            .filter(|mask| (0..m).filter(|j| mask >> j & 1 == 1).map(|j| ranks[j]).sum::<f64>() <= w + 1e-9)
            .count();
        let want = (2.0 * hits as f64 / (1u64 << m) as f64).min(1.0);
        let got = got.map_err(|e| format!("case {i}: {e}"))?;
        ensure(got.p == want, || format!("case {i}: p {} vs {want}", got.p))?;
        checked += 1;
    }
    Ok(format!("200 affine cases to 1e-12; {checked} exact p-values equal to enumeration"))
}

fn dsp_fixtures() -> Check {
    const FS: f64 = 16_000.0;
    let audio = |x: Vec<f32>| AudioBuffer::new(x).map_err(|e| e.to_string());

    let mut worst_pitch: f64 = 0.0;
    for f in [100.0, 150.0, 200.0, 250.0, 300.0] {
        let x: Vec<f32> = (0..16_000)
            .map(|i| (0.5 * (2.0 * std::f64::consts::PI * f * i as f64 / FS).sin()) as f32)
            .collect();
        let c = track_pitch(&audio(x)?, &PitchConfig::default()).map_err(|e| e.to_string())?;
        let mut err: Vec<f64> = c.f0.iter().map(|g| (g - f).abs()).collect();
        err.sort_by(f64::total_cmp);
        let median = err[err.len() / 2];
        ensure(median <= 3.0, || format!("{f} Hz tone: median error {median:.2} Hz"))?;
        worst_pitch = worst_pitch.max(median);
    }

    let pulses: Vec<f32> = (0..16_000).map(|i| if i % 80 == 0 { 0.8 } else { 0.0 }).collect();
    let mut rng = StdRng::seed_from_u64(11);
    let noise: Vec<f32> = (0..16_000).map(|_| 0.1 * rng.sample::<f64, _>(StandardNormal) as f32).collect();
    let cfg = CppConfig::default();
    let cpp_pulse = cpp(&audio(pulses)?, &cfg, 60.0, 400.0).map_err(|e| e.to_string())?;
    let cpp_noise = cpp(&audio(noise)?, &cfg, 60.0, 400.0).map_err(|e| e.to_string())?;
    ensure(cpp_pulse - cpp_noise >= 10.0, || format!("CPP pulse {cpp_pulse:.2} noise {cpp_noise:.2}"))?;

    // Signed Gamma speech at unit variance plus Gaussian noise 10 dB down.
    let gamma = Gamma::new(0.4, 1.0).unwrap();
    let mut worst_wada: f64 = 0.0;
    for seed in 0..3 {
        let mut rng = StdRng::seed_from_u64(100 + seed);
        let n = 10 * 16_000;
        let speech: Vec<f64> = (0..n)
            .map(|_| {
                let g: f64 = gamma.sample(&mut rng);
                if rng.random::<bool>() { g } else { -g }
            })
            .collect();
        let ps = speech.iter().map(|s| s * s).sum::<f64>() / n as f64;
        let sd = (ps / 10.0).sqrt();
        let mix: Vec<f64> = speech.iter().map(|s| s + sd * rng.sample::<f64, _>(StandardNormal)).collect();
        let peak = mix.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let x: Vec<f32> = mix.iter().map(|v| (0.9 * v / peak) as f32).collect();
        let est = wada_snr(&audio(x)?, WadaTable::bundled()).map_err(|e| e.to_string())?;
        ensure((est - 10.0).abs() <= 3.0, || format!("WADA seed {seed}: {est:.2} dB"))?;
        worst_wada = worst_wada.max((est - 10.0).abs());
    }

    let corner = |v: &str, f1: f64, f2: f64| Corner { vowel: v.into(), f1, f2 };
    let shapes = [
        vec![corner("i", 300.0, 2300.0), corner("a", 700.0, 1200.0), corner("u", 300.0, 800.0)],
        vec![
            corner("i", 280.0, 2250.0),
            corner("ae", 660.0, 1700.0),
            corner("a", 720.0, 1100.0),
            corner("u", 320.0, 870.0),
        ],
    ];
    for corners in &shapes {
        let mut cloud = Vec::new();
        for _ in 0..20 {
            cloud.extend(corners.iter().map(|c| (c.f1, c.f2)));
        }
        // Shoelace over the corners in the listed (convex) order.
        let k = corners.len();
        let twice: f64 = (0..k)
            .map(|i| {
                let (a, b) = (&corners[i], &corners[(i + 1) % k]);
                a.f1 * b.f2 - b.f1 * a.f2
            })
            .sum();
        let want = twice.abs() / 2.0;
        let got = vsa(&cloud, corners, 50, 0.95).map_err(|e| e.to_string())?;
        ensure((got - want).abs() <= 1e-6 * want, || format!("VSA {k} corners: {got} vs {want}"))?;
    }
    Ok(format!(
        "pitch median error <= {worst_pitch:.2} Hz, CPP margin {:.1} dB, WADA error <= {worst_wada:.2} dB, VSA exact",
        cpp_pulse - cpp_noise
    ))
}

struct Pipeline {
    manifest: PathBuf,
    out: TempDir,
    report: Report,
    elapsed: Duration,
}

/// Generates the default synthetic corpus and runs every metric on it once.
fn pipeline() -> Result<&'static Pipeline, String> {
    static RUN: OnceLock<Result<Pipeline, String>> = OnceLock::new();
    RUN.get_or_init(|| {
        let start = Instant::now();
        let manifest = common::default_corpus();
        let out = TempDir::new().map_err(|e| e.to_string())?;
        let registry = MetricRegistry::with_defaults();
        let opts = RunOptions::new(&manifest, out.path());
        cmd_score(&opts, &registry).map_err(|e| e.to_string())?;
        let report = cmd_report(&opts, &registry).map_err(|e| e.to_string())?;
        Ok(Pipeline {
            manifest,
            out,
            report,
            elapsed: start.elapsed(),
        })
    })
    .as_ref()
    .map_err(Clone::clone)
}

fn r_of(report: &Report, condition: Condition, stimulus: Stimulus, metric: &str) -> Result<f64, String> {
    report
        .reports
        .iter()
        .find(|r| r.condition == condition && r.stimulus == stimulus && r.metric == metric)
        .and_then(|r| r.r)
        .ok_or_else(|| format!("no defined r for {metric} {condition} {stimulus}"))
}

const CELLS: [(Condition, Stimulus); 4] = [
    (Condition::MC, Stimulus::Word),
    (Condition::EX, Stimulus::Word),
    (Condition::MC, Stimulus::Sentence),
    (Condition::EX, Stimulus::Sentence),
];

fn synthetic_benchmark() -> Check {
    let run = pipeline()?;
    let mut lowest = (f64::INFINITY, String::new());
    for (c, s) in CELLS {
        for metric in ["dartp", "artp", "per_phone", "nad"] {
            let r = r_of(&run.report, c, s, metric)?;
            ensure(r >= 0.9, || format!("{metric} {c} {s}: r = {r:.4}"))?;
            if r < lowest.0 {
                lowest = (r, format!("{metric} {c} {s}"));
            }
        }
        let (d, a) = (r_of(&run.report, c, s, "dartp")?, r_of(&run.report, c, s, "asric")?);
        ensure(d >= a, || format!("{c} {s}: dartp {d:.4} < asric {a:.4}"))?;
    }
    let mean = |m: &str| -> Result<f64, String> {
        let rs: Result<Vec<f64>, String> = CELLS.iter().map(|&(c, s)| r_of(&run.report, c, s, m)).collect();
        Ok(rs?.iter().sum::<f64>() / CELLS.len() as f64)
    };
    let (d, a) = (mean("dartp")?, mean("asric")?);
    let secs = run.elapsed.as_secs_f64();
    ensure(secs < 120.0, || format!("took {secs:.1} s"))?;
    Ok(format!(
        "lowest r {:.4} ({}); mean dartp {d:.4} vs asric {a:.4}; {secs:.1} s",
        lowest.0, lowest.1
    ))
}

fn protocol_semantics() -> Check {
    let run = pipeline()?;
    let mut detail = Vec::new();
    for s in [Stimulus::Word, Stimulus::Sentence] {
        let mc = r_of(&run.report, Condition::MC, s, "dartp")?.abs();
        let ex = r_of(&run.report, Condition::EX, s, "dartp")?.abs();
        ensure(ex >= mc, || format!("dartp {s}: |r| EX {ex:.4} < MC {mc:.4}"))?;
        detail.push(format!("{s} EX {ex:.4} >= MC {mc:.4}"));
    }
    cmd_validate(&run.manifest).map_err(|e| format!("synthetic corpus invalid: {e}"))?;
    let (_dir, broken) = common::mutated(&run.manifest, |d| {
        d.protocol("synth-EX-Word")["utterance_ids"]
            .as_array_mut()
            .unwrap()
            .retain(|id| id != &json!("P01_W00"));
    });
    let (_, findings) = inspect_manifest(&broken).map_err(|e| e.to_string())?;
    ensure(
        findings.iter().any(|f| f.severity == Severity::Error && f.category == Category::Subset),
        || "MC not within EX went undetected".into(),
    )?;
    Ok(format!("{}; subset check passes and catches a violation", detail.join(", ")))
}

fn determinism() -> Check {
    let run = pipeline()?;
    let registry = MetricRegistry::with_defaults();
    let reference = common::snapshot(run.out.path());
    for (i, workers) in [8, 8].into_iter().enumerate() {
        let out = TempDir::new().map_err(|e| e.to_string())?;
        let mut opts = RunOptions::new(&run.manifest, out.path());
        opts.workers = workers;
        cmd_score(&opts, &registry).map_err(|e| e.to_string())?;
        cmd_report(&opts, &registry).map_err(|e| e.to_string())?;
        let got = common::snapshot(out.path());
        ensure(got.keys().eq(reference.keys()), || format!("rerun {i}: different file set"))?;
        for (k, v) in &reference {
            ensure(&got[k] == v, || format!("rerun {i} with {workers} workers: {} differs", k.display()))?;
        }
    }
    Ok(format!("{} files identical across workers=1 and two workers=8 runs", reference.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 7] = [
        ("ctc oracle equivalence", ctc_oracles),
        ("edit-distance oracle", per_oracle),
        ("statistics oracles", statistics_oracles),
        ("dsp fixtures", dsp_fixtures),
        ("synthetic benchmark", synthetic_benchmark),
        ("protocol semantics", protocol_semantics),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail} [{secs:.1} s]"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why} [{secs:.1} s]");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
