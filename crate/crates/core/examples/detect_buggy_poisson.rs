//! Early-reject tester on the pristine Poisson sampler and its flawed variants.
//!
//! `cargo run --release --example detect_buggy_poisson -- [mu] [seed]`

use std::time::Instant;

use lachesis::sampler::{make_buggy, SamplerOracle, SamplerParams};
use lachesis::testers::{ertoltest, TestParams};
use lachesis::KnownDistribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> lachesis::Result<()> {
    let mut args = std::env::args().skip(1);
    let mu: f64 = args.next().map_or(1000.0, |s| s.parse().expect("mu"));
    let seed: u64 = args.next().map_or(7, |s| s.parse().expect("seed"));
    let target = KnownDistribution::poisson(mu)?;
    let params = TestParams::new(0.01, 0.5, 0.1)?;
    println!("target {}  eps 0.01  eta 0.5  delta 0.1", target.label());
    for variant in 1..=6 {
        let mut sampler = make_buggy(SamplerParams::Poisson { mu }, variant)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let start = Instant::now();
        let report = ertoltest(&mut sampler, &target, &params, &mut rng)?;
        println!(
            "v{variant}: {:?}  d_hat {:>8}  icond calls {:>9}  uniforms {:>10}  {:.1}s",
            report.decision,
            report.d_hat.map_or("-".into(), |d| format!("{d:.4}")),
            report.icond_calls,
            sampler.ledger().inner_uniform_draws,
            start.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
