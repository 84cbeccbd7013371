//! Stopping-time counts for one point of a uniform law.
//!
//! Each chain's count is Poisson with mean `ln(1/P(x))`, so `exp(-mean)` recovers `P(x)`.

use lachesis::sampler::ExactOracle;
use lachesis::tpa::{initial_radius, tpa_counts, TpaConfig};
use lachesis::ExplicitTable;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> lachesis::Result<()> {
    let table = ExplicitTable::from_pairs((1..=8).map(|x| (x, 0.125)))?;
    let mut oracle = ExactOracle::new(table);
    let cfg = TpaConfig { r: 10_000, thresh: 1e3, delta: 1e-6, theta: 1.0, initial_radius: initial_radius(4, 1, 8) };
    let counts = tpa_counts(&mut oracle, 4, &cfg, &mut ChaCha8Rng::seed_from_u64(1))?.expect("generous caps");
    let n = counts.len() as f64;
    let mean = counts.iter().sum::<u64>() as f64 / n;
    let var = counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0);
    println!("chains {n}  mean {mean:.4}  variance {var:.4}  ln 8 = {:.4}", 8f64.ln());
    println!("estimate of P(4) = {:.4} (true 0.125)", (-mean).exp());
    let mut hist = [0usize; 10];
    for &c in &counts {
        hist[(c as usize).min(9)] += 1;
    }
    for (k, h) in hist.iter().enumerate() {
        println!("{k:>2} {}", "#".repeat(h / 50));
    }
    Ok(())
}
