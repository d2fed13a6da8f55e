//! Regenerates `data/wada_table.csv`.
//!
//! cargo run --release -p pathmetrics-core --example gen_wada_table > crates/core/data/wada_table.csv

use pathmetrics::dsp::WadaTable;

fn main() {
    let samples: usize = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("sample count"))
        .unwrap_or(10_000_000);
    let table = WadaTable::simulate(samples, 0x5AD4);
    print!("# signed Gamma(0.4) speech + Gaussian noise, {samples} samples per point\n{}", table.to_csv());
}
