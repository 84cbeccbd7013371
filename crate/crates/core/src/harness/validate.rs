use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::known::KnownDistribution;
use crate::sampler::{icond_rejection_fallback, SamplerKey, SamplerOracle};
use crate::stats::{chi_square_critical, chi_square_stat, two_sample_chi_square};

const LEVEL: f64 = 0.99;
/// Draws per side for each conditioned-draw probe, as a fraction of `samples`.
const PROBE_SHARE: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub statistic: f64,
    pub df: usize,
    pub critical: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: String, (statistic, df): (f64, usize)) -> Self {
        let critical = chi_square_critical(df, LEVEL);
        // fewer than two occupied bins leaves nothing to compare
        let passed = df == 0 || statistic <= critical;
        Check { name, statistic, df, critical, passed }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub sampler: String,
    pub target: String,
    pub samples: usize,
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn counts(xs: &[i64], lo: i64, hi: i64) -> Vec<u64> {
    let mut c = vec![0u64; (hi - lo + 1) as usize];
    for &x in xs {
        c[(x.clamp(lo, hi) - lo) as usize] += 1;
    }
    c
}

/// Smallest `x` in the window with `cdf(x) >= u`.
fn quantile(q: &KnownDistribution, u: f64) -> i64 {
    let (mut lo, mut hi) = q.effective_support();
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if q.cdf(mid) >= u {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}

/// Probe intervals between target quantiles: lower body, centre, upper tail.
pub fn probe_intervals(q: &KnownDistribution) -> [(i64, i64); 3] {
    [(0.1, 0.3), (0.45, 0.55), (0.7, 0.95)].map(|(a, b)| (quantile(q, a), quantile(q, b)))
}

/// Goodness of fit of plain draws against the target, then conditioned draws against the
/// rejection fallback on three probe intervals, all by chi-square at the 99% level.
pub fn validate(sampler_key: &str, target: &str, samples: usize, seed: u64) -> Result<ValidationReport> {
    if samples < 10_000 {
        return domain("validation needs at least 10^4 samples");
    }
    let key = SamplerKey::parse(sampler_key)?;
    let q = KnownDistribution::parse_spec(target)?;
    let mut sampler = key.build()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();

    // the effective window carries all but 1e-12 of the mass; tails are lumped into the end bins
    let (lo, hi) = q.effective_support();
    let xs: Vec<i64> = (0..samples).map(|_| sampler.draw(&mut rng)).collect::<Result<_>>()?;
    let mut expected: Vec<f64> = (lo..=hi).map(|x| q.pmf(x)).collect();
    expected[0] += q.cdf(lo - 1);
    let last = expected.len() - 1;
    expected[last] += q.sf(hi);
    let gof = if expected.len() < 2 { (0.0, 0) } else { chi_square_stat(&counts(&xs, lo, hi), &expected)? };
    checks.push(Check::new("draw goodness of fit".into(), gof));

    let n = samples / PROBE_SHARE;
    for (a, b) in probe_intervals(&q) {
        let ys: Vec<i64> = (0..n).map(|_| sampler.icond(&mut rng, a, b)).collect::<Result<_>>()?;
        let mut zs = Vec::with_capacity(n);
        for _ in 0..n {
            match icond_rejection_fallback(&mut sampler, a, b, 1_000_000, &mut rng)? {
                Some(z) => zs.push(z),
                None => return domain(format!("rejection fallback found no draw in [{a}, {b}]")),
            }
        }
        let r = two_sample_chi_square(&counts(&ys, a, b), &counts(&zs, a, b))?;
        checks.push(Check::new(format!("icond vs rejection on [{a}, {b}]"), r));
    }
    Ok(ValidationReport { sampler: sampler_key.into(), target: target.into(), samples, seed, checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pristine_binomial_passes() {
        let r = validate("binomial:1000:0.3", "binomial:1000:0.3", 40_000, 1).unwrap();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.checks.len(), 4);
    }

    #[test]
    fn flawed_binomial_fails_the_draw_check() {
        let r = validate("binomial:31306:0.16:v2", "binomial:31306:0.16", 40_000, 2).unwrap();
        assert!(!r.checks[0].passed, "{r:?}");
    }

    #[test]
    fn geometric_singleton_probe_passes_trivially() {
        let q = KnownDistribution::geometric(0.5).unwrap();
        assert_eq!(probe_intervals(&q)[0], (1, 1));
        let r = validate("geometric:0.5", "geometric:0.5", 20_000, 3).unwrap();
        assert!(r.checks[1].passed && r.checks[1].df == 0);
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn too_few_samples() {
        assert!(validate("geometric:0.5", "geometric:0.5", 100, 3).is_err());
    }
}
