use rand::RngCore;

use super::transform::{icond_inverse_transform, InverseTransform};
use super::{QueryLedger, SamplerOracle, Support, ICOND_CAP};
use crate::error::{domain, Result};

/// Inverse-CDF geometric sampler on `{1, 2, ...}`: `ceil(ln(1 - U) / ln(1 - p))`.
#[derive(Clone, Debug)]
pub struct GeometricSampler {
    p: f64,
    ln_q: f64,
    ledger: QueryLedger,
}

impl GeometricSampler {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return domain("geometric needs p in (0, 1]");
        }
        Ok(GeometricSampler { p, ln_q: (-p).ln_1p(), ledger: QueryLedger::default() })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `1 - (1 - p)^k`, the CDF at `k`.
    fn cdf(&self, k: i64) -> f64 {
        if k <= 0 {
            0.0
        } else if self.p >= 1.0 {
            1.0
        } else {
            -(k as f64 * self.ln_q).exp_m1()
        }
    }
}

impl InverseTransform for GeometricSampler {
    fn proposal_range(&self) -> (f64, f64) {
        (0.0, 1.0)
    }

    fn transform(&self, u: f64) -> i64 {
        if self.p >= 1.0 {
            return 1;
        }
        // U = 0 has probability 2^-53 and would map to 0
        ((-u).ln_1p() / self.ln_q).ceil().max(1.0) as i64
    }

    fn hat_preimage(&self, a: i64, b: i64) -> Vec<(f64, f64)> {
        let a = a.max(1);
        if a > b {
            return Vec::new();
        }
        let lo = self.cdf(a - 1);
        let hi = self.cdf(b);
        if hi > lo {
            vec![(lo, hi)]
        } else {
            Vec::new()
        }
    }

    fn accept(&self, _k: i64, _u: f64, _rng: &mut dyn RngCore, _ledger: &mut QueryLedger) -> bool {
        true
    }

    fn output_support(&self) -> Support {
        Support { lo: 1, hi: if self.p >= 1.0 { Some(1) } else { None } }
    }

    fn hat_cdf(&self, k: i64) -> f64 {
        self.cdf(k)
    }
}

impl SamplerOracle for GeometricSampler {
    fn draw(&mut self, rng: &mut dyn RngCore) -> Result<i64> {
        self.ledger.draws += 1;
        let u = self.ledger.uniform(rng);
        Ok(self.transform(u))
    }

    fn icond(&mut self, rng: &mut dyn RngCore, a: i64, b: i64) -> Result<i64> {
        self.ledger.icond_calls += 1;
        let mut ledger = self.ledger;
        let out = icond_inverse_transform(&*self, a, b, rng, &mut ledger, ICOND_CAP);
        self.ledger = ledger;
        out
    }

    fn ledger(&self) -> &QueryLedger {
        &self.ledger
    }

    fn ledger_mut(&mut self) -> &mut QueryLedger {
        &mut self.ledger
    }

    fn support(&self) -> Support {
        self.output_support()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::known::{ExplicitTable, KnownDistribution};
    use crate::sampler::tests::counts;
    use crate::sampler::ExactOracle;
    use crate::stats::{chi_square_passes, chi_square_stat, two_sample_chi_square};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn preimage_examples() {
        let g = GeometricSampler::new(0.5).unwrap();
        assert_eq!(g.hat_preimage(1, 1), vec![(0.0, 0.5)]);
        assert_eq!(g.hat_preimage(1, i64::MAX), vec![(0.0, 1.0)]);
        assert_eq!(g.hat_preimage(2, 3), vec![(0.5, 0.875)]);
        assert!((g.hat_cdf(2) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn round_trip_on_singletons() {
        for p in [0.5, 0.1, 0.013] {
            let g = GeometricSampler::new(p).unwrap();
            for k in 1..200 {
                let Some(&(lo, hi)) = g.hat_preimage(k, k).first() else { continue };
                if hi - lo < 1e-6 {
                    // interior points no longer resolvable in double precision
                    continue;
                }
                for t in [1e-9, 0.25, 0.5, 0.75, 1.0 - 1e-9] {
                    assert_eq!(g.transform(lo + t * (hi - lo)), k, "p={p} k={k}");
                }
                assert_eq!(g.hat_cdf(k), hi);
            }
        }
    }

    #[test]
    fn draws_match_pmf() {
        let mut g = GeometricSampler::new(0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let xs: Vec<i64> = (0..100_000).map(|_| g.draw(&mut rng).unwrap()).collect();
        let hi = 40;
        let q = KnownDistribution::geometric(0.5).unwrap();
        let mut expected: Vec<f64> = (1..=hi).map(|x| q.pmf(x)).collect();
        expected[(hi - 1) as usize] += q.sf(hi);
        let c = counts(&xs.iter().map(|&x| x.min(hi)).collect::<Vec<_>>(), 1, hi);
        assert!(chi_square_passes(chi_square_stat(&c, &expected).unwrap(), 0.99));
    }

    #[test]
    fn conditional_examples() {
        let mut g = GeometricSampler::new(0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let xs: Vec<i64> = (0..30_000).map(|_| g.icond(&mut rng, 1, 2).unwrap()).collect();
        assert!(chi_square_passes(chi_square_stat(&counts(&xs, 1, 2), &[2.0 / 3.0, 1.0 / 3.0]).unwrap(), 0.99));
        for _ in 0..100 {
            assert_eq!(g.icond(&mut rng, 3, 3).unwrap(), 3);
        }
    }

    #[test]
    fn matches_exact_oracle_on_window() {
        let q = KnownDistribution::geometric(0.3).unwrap();
        let table = ExplicitTable::from_dense(1, {
            let raw: Vec<f64> = (1..=120).map(|x| q.pmf(x)).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|p| p / s).collect()
        })
        .unwrap();
        let mut exact = ExactOracle::new(table);
        let mut g = GeometricSampler::new(0.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for (a, b) in [(1, 3), (4, 12), (10, 40)] {
            let xs: Vec<i64> = (0..100_000).map(|_| g.icond(&mut rng, a, b).unwrap()).collect();
            let ys: Vec<i64> = (0..100_000).map(|_| exact.icond(&mut rng, a, b).unwrap()).collect();
            let r = two_sample_chi_square(&counts(&xs, a, b), &counts(&ys, a, b)).unwrap();
            assert!(chi_square_passes(r, 0.99), "[{a},{b}] {r:?}");
        }
    }
}
