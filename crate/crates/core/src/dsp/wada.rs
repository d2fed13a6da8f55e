//! WADA SNR: SNR from the waveform amplitude distribution.
//!
//! Clean speech is modelled as a signed Gamma(0.4) amplitude process and
//! noise as Gaussian. The statistic `G = ln(mean|x|) - mean(ln|x|)` rises
//! monotonically with SNR under that mixture; a Monte-Carlo lookup table
//! maps it back to dB.

use std::path::Path;
use std::sync::OnceLock;

use rand::SeedableRng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;

use super::AudioBuffer;
use crate::error::{Error, Result};

pub const GAMMA_SHAPE: f64 = 0.4;
pub const SNR_MIN_DB: f64 = -20.0;
pub const SNR_MAX_DB: f64 = 100.0;
pub const SNR_STEP_DB: f64 = 0.5;
const MIN_DURATION: f64 = 0.5;
const CHUNK: usize = 100_000;

const BUNDLED_TABLE: &str = include_str!("../../data/wada_table.csv");

/// Monotone G → SNR lookup table.
#[derive(Debug, Clone, PartialEq)]
pub struct WadaTable {
    snr_db: Vec<f64>,
    g: Vec<f64>,
}

impl WadaTable {
    pub fn new(snr_db: Vec<f64>, g: Vec<f64>) -> Result<Self> {
        if snr_db.len() != g.len() || snr_db.len() < 2 {
            return Err(Error::Format("WADA table needs at least two matching rows".into()));
        }
        if snr_db.windows(2).any(|w| w[1] <= w[0]) || g.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Format("WADA table must be increasing in SNR and G".into()));
        }
        Ok(Self { snr_db, g })
    }

    /// The table shipped with the crate.
    pub fn bundled() -> &'static WadaTable {
        static TABLE: OnceLock<WadaTable> = OnceLock::new();
        TABLE.get_or_init(|| Self::parse_csv(BUNDLED_TABLE).expect("bundled WADA table is valid"))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let (mut snr, mut g) = (Vec::new(), Vec::new());
        for row in rdr.deserialize::<(f64, f64)>() {
            let (s, v) = row?;
            snr.push(s);
            g.push(v);
        }
        Self::new(snr, g)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("snr_db,g\n");
        for (s, g) in self.snr_db.iter().zip(&self.g) {
            out.push_str(&format!("{s:.1},{g:.9}\n"));
        }
        out
    }

    pub fn snr_db(&self) -> &[f64] {
        &self.snr_db
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    /// Linear interpolation, clamped to the grid ends.
    pub fn lookup(&self, g: f64) -> f64 {
        let last = self.g.len() - 1;
        if g <= self.g[0] {
            return self.snr_db[0];
        }
        if g >= self.g[last] {
            return self.snr_db[last];
        }
        let i = self.g.partition_point(|&v| v <= g);
        let (g0, g1) = (self.g[i - 1], self.g[i]);
        let (s0, s1) = (self.snr_db[i - 1], self.snr_db[i]);
        if g1 == g0 {
            s0
        } else {
            s0 + (s1 - s0) * (g - g0) / (g1 - g0)
        }
    }

    /// Builds the table by simulation. The same speech and noise draws are
    /// reused at every grid point, which keeps the curve smooth; any residual
    /// non-monotonicity is removed with a running maximum.
    pub fn simulate(samples_per_point: usize, seed: u64) -> Self {
        let grid: Vec<f64> = (0..)
            .map(|i| SNR_MIN_DB + SNR_STEP_DB * i as f64)
            .take_while(|&s| s <= SNR_MAX_DB + 1e-9)
            .collect();
        let noise_std: Vec<f64> = grid.iter().map(|s| 10f64.powf(-s / 20.0)).collect();
        let n_chunks = samples_per_point.div_ceil(CHUNK);
        // Per chunk: (sum |y|, sum ln|y|, count) for every grid point.
        let partial: Vec<Vec<(f64, f64, usize)>> = (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                let len = CHUNK.min(samples_per_point - c * CHUNK);
                let mut rng = rand::rngs::StdRng::seed_from_u64(seed ^ (c as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
                let (speech, noise) = draw(len, &mut rng);
                noise_std
                    .iter()
                    .map(|&sd| {
                        let (mut s_abs, mut s_log, mut n) = (0.0, 0.0, 0usize);
                        for (s, v) in speech.iter().zip(&noise) {
                            let a = (s + sd * v).abs();
                            if a > 0.0 {
                                s_abs += a;
                                s_log += a.ln();
                                n += 1;
                            }
                        }
                        (s_abs, s_log, n)
                    })
                    .collect()
            })
            .collect();
        let mut g: Vec<f64> = (0..grid.len())
            .map(|k| {
                let (mut a, mut l, mut n) = (0.0, 0.0, 0usize);
                for chunk in &partial {
                    a += chunk[k].0;
                    l += chunk[k].1;
                    n += chunk[k].2;
                }
                (a / n as f64).ln() - l / n as f64
            })
            .collect();
        for i in 1..g.len() {
            g[i] = g[i].max(g[i - 1]);
        }
        Self { snr_db: grid, g }
    }
}

/// Unit-variance signed Gamma speech and standard normal noise.
fn draw(n: usize, rng: &mut impl rand::Rng) -> (Vec<f64>, Vec<f64>) {
    let gamma = Gamma::new(GAMMA_SHAPE, 1.0).expect("valid gamma");
    let scale = (GAMMA_SHAPE * (GAMMA_SHAPE + 1.0)).sqrt();
    let mut speech = Vec::with_capacity(n);
    let mut noise = Vec::with_capacity(n);
    for _ in 0..n {
        let mag: f64 = gamma.sample(rng);
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        speech.push(sign * mag / scale);
        noise.push(StandardNormal.sample(rng));
    }
    (speech, noise)
}

/// The amplitude-distribution statistic over nonzero samples.
pub fn g_statistic(x: &[f32]) -> Option<f64> {
    let (mut s_abs, mut s_log, mut n) = (0.0f64, 0.0f64, 0usize);
    for &v in x {
        let a = (v as f64).abs();
        if a > 0.0 {
            s_abs += a;
            s_log += a.ln();
            n += 1;
        }
    }
    (n > 0).then(|| (s_abs / n as f64).ln() - s_log / n as f64)
}

pub fn wada_snr(audio: &AudioBuffer, table: &WadaTable) -> Result<f64> {
    if audio.duration() < MIN_DURATION {
        return Err(Error::undefined(format!(
            "audio too short for WADA SNR ({:.3} s)",
            audio.duration()
        )));
    }
    let g = g_statistic(audio.samples()).ok_or_else(|| Error::undefined("all-zero signal"))?;
    Ok(table.lookup(g))
}

/// Unit-peak-normalised draw from the model: signed Gamma speech plus
/// Gaussian noise at `snr_db` (no noise when `None`).
pub fn synthetic_mixture(secs: f64, snr_db: Option<f64>, seed: u64) -> Vec<f32> {
    let n = (secs * 16_000.0) as usize;
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let (speech, noise) = draw(n, &mut rng);
    let sd = snr_db.map_or(0.0, |s| 10f64.powf(-s / 20.0));
    let y: Vec<f64> = speech.iter().zip(&noise).map(|(s, v)| s + sd * v).collect();
    let peak = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    y.iter().map(|v| (0.9 * v / peak) as f32).collect()
}
