//! A small decision grid over sampler variants, written as CSV to stdout.
//!
//! `cargo run --release --example case_study -- [threads]`

use lachesis::harness::{case_study, write_csv, SweepOptions, SweepSpec};
use lachesis::sampler::{SamplerFamily, SamplerParams};

fn main() -> lachesis::Result<()> {
    let threads = std::env::args().nth(1).map(|s| s.parse().expect("thread count"));
    let spec = SweepSpec {
        family: SamplerFamily::Poisson,
        grid: vec![SamplerParams::Poisson { mu: 1000.0 }],
        variants: (1..=6).collect(),
        per_cell_trials: 1,
    };
    let opts = SweepOptions { epsilon: 0.01, eta: 0.5, delta: 0.1, seed: 7, mode: None, timing: true, threads };
    let rows = case_study(&spec, &opts)?;
    write_csv(&rows, &mut std::io::stdout().lock())
}
