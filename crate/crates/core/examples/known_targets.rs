//! Exact pmf, interval mass, tilt and total variation for the known target families.

use lachesis::known::tv_distance_exact;
use lachesis::sampler::law::exact_law;
use lachesis::sampler::{make_buggy, AnySampler, SamplerParams};
use lachesis::KnownDistribution;

fn main() -> lachesis::Result<()> {
    let targets = [
        KnownDistribution::uniform_range(1, 8)?,
        KnownDistribution::geometric(0.5)?,
        KnownDistribution::binomial(100, 0.3)?,
        KnownDistribution::poisson(1000.0)?,
    ];
    for q in &targets {
        let (lo, hi) = q.effective_support();
        let x = lo + (hi - lo) / 3;
        println!(
            "{:<16} window [{lo}, {hi}]  Q({x}) = {:.3e}  Q([{lo}, {x}]) = {:.4}  tilt({x}) = {:.4}  log-concave {}",
            q.label(),
            q.pmf(x),
            q.interval_mass(lo, x)?,
            q.tilt(x)?,
            q.is_log_concave()
        );
    }
    let q = KnownDistribution::poisson(1000.0)?;
    for v in 1..=6 {
        let AnySampler::Poisson(s) = make_buggy(SamplerParams::Poisson { mu: 1000.0 }, v)? else { unreachable!() };
        println!("poisson(1000) variant {v}: exact output-law TV {:.4}", tv_distance_exact(&exact_law(&s), &q.to_table())?);
    }
    Ok(())
}
