//! Two-phase estimate of a point's mass under a black-box Poisson sampler.

use lachesis::estimator::{est, EstParams};
use lachesis::sampler::{PoissonSampler, SamplerOracle};
use lachesis::tpa::initial_radius;
use lachesis::KnownDistribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> lachesis::Result<()> {
    let mu = 500.0;
    let q = KnownDistribution::poisson(mu)?;
    let (lo, hi) = q.effective_support();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for x in [480, 500, 540, 580] {
        let mut sampler = PoissonSampler::new(mu)?;
        let params = EstParams {
            zeta: 0.1,
            delta: 0.05,
            budget: 1.1 - q.ln_pmf(x),
            theta: 1.1 * q.tilt(x)?.max(1.0),
            initial_radius: initial_radius(x, lo, hi),
        };
        let out = est(&mut sampler, x, &params, &mut rng)?;
        let shown = out.value.map_or("bottom".to_string(), |v| format!("{v:.6}"));
        println!(
            "x={x}: estimate {shown}  true {:.6}  chains {}  icond calls {}",
            q.pmf(x),
            out.r2_used,
            sampler.ledger().icond_calls
        );
    }
    Ok(())
}
