//! Conditioning the noise-smoothed law `P*Tri` on a real interval and checking it against
//! the analytic restricted CDF.

use lachesis::cont::icond_cont;
use lachesis::known::ConvolvedModel;
use lachesis::sampler::ExactOracle;
use lachesis::stats::{ks_critical_99, ks_statistic};
use lachesis::ExplicitTable;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> lachesis::Result<()> {
    let table = ExplicitTable::from_pairs([(0, 0.5), (1, 0.1), (2, 0.05), (3, 0.35)])?;
    let model = ConvolvedModel::new(table.clone());
    let mut oracle = ExactOracle::new(table);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (u, v) = (0.3, 2.7);
    let mut ys = Vec::new();
    let mut attempts = 0;
    let mut bottoms = 0;
    while ys.len() < 20_000 {
        let r = icond_cont(&mut oracle, u, v, 1e-6, 2.0, &mut rng)?;
        attempts += r.attempts;
        match r.value {
            Some(y) => ys.push(y),
            None => bottoms += 1,
        }
    }
    ys.sort_by(f64::total_cmp);
    let mass = model.mass(u, v);
    let ks = ks_statistic(&ys, |y| model.mass(u, y) / mass)?;
    println!("[{u}, {v}]: smoothed mass {mass:.4}, {:.2} attempts per sample, {bottoms} bottoms", attempts as f64 / ys.len() as f64);
    println!("KS {ks:.5} vs 99% critical {:.5}", ks_critical_99(ys.len()));
    Ok(())
}
