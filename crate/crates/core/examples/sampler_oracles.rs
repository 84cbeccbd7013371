//! Plain and interval-conditioned draws from the built-in samplers, with query accounting.

use lachesis::sampler::{icond_rejection_fallback, sampler_from_key, SamplerOracle};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> lachesis::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for (key, a, b) in [("geometric:0.1", 20, 25), ("binomial:31306:0.16", 5100, 5110), ("poisson:29285", 29800, 29900)] {
        let mut s = sampler_from_key(key)?;
        let plain: Vec<i64> = (0..5).map(|_| s.draw(&mut rng)).collect::<lachesis::Result<_>>()?;
        let cond: Vec<i64> = (0..5).map(|_| s.icond(&mut rng, a, b)).collect::<lachesis::Result<_>>()?;
        let before = *s.ledger();
        let slow = icond_rejection_fallback(&mut s, a, b, 1_000_000, &mut rng)?;
        let cost = s.ledger().since(&before);
        println!("{key}");
        println!("  draws            {plain:?}");
        println!("  icond [{a}, {b}] {cond:?}");
        println!("  rejection fallback gave {slow:?} after {} plain draws", cost.draws);
        println!("  ledger {:?}", s.ledger());
    }
    Ok(())
}
