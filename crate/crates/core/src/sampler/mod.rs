//! Samplers under test, their interval-conditioning oracles and query accounting.
//!
//! Every sampler here is an inverse-transform program: a proposal uniform is
//! pushed through a monotone (or piecewise monotone) map and optionally
//! corrected by a rejection step. Conditioning the output on `[a, b]` is done
//! by conditioning the proposal uniform on the preimage of `[a, b]` and rerunning
//! the rejection step, which costs the same as an unconditioned draw.

mod binomial;
mod bugs;
mod geometric;
pub mod law;
mod poisson;
mod transform;

use rand::{Rng, RngCore};
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::known::{ExplicitTable, KnownDistribution};

pub use binomial::{BinomialSampler, BtrsConstants};
pub use bugs::{bug_spec, make_buggy, BugSpec, SamplerFamily, SamplerParams};
pub use geometric::GeometricSampler;
pub use poisson::{PoissonSampler, PtrsConstants};
pub use transform::{icond_inverse_transform, preimage_bisection, HatMap, InverseTransform};

/// Iteration cap of an unconditioned draw.
pub const DRAW_CAP: u64 = 10_000_000;
/// Iteration cap of a conditioned rejection loop.
pub const ICOND_CAP: u64 = 1_000_000;

/// Oracle usage counters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct QueryLedger {
    pub draws: u64,
    pub icond_calls: u64,
    pub inner_uniform_draws: u64,
}

impl QueryLedger {
    pub fn reset(&mut self) {
        *self = QueryLedger::default();
    }

    /// Counts accumulated since the snapshot `earlier`.
    pub fn since(&self, earlier: &QueryLedger) -> QueryLedger {
        QueryLedger {
            draws: self.draws - earlier.draws,
            icond_calls: self.icond_calls - earlier.icond_calls,
            inner_uniform_draws: self.inner_uniform_draws - earlier.inner_uniform_draws,
        }
    }

    pub(crate) fn uniform(&mut self, rng: &mut dyn RngCore) -> f64 {
        self.inner_uniform_draws += 1;
        rng.random::<f64>()
    }
}

/// Integer support of a sampler; `hi = None` means unbounded.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Support {
    pub lo: i64,
    pub hi: Option<i64>,
}

impl Support {
    pub fn clamp(&self, a: i64, b: i64) -> Option<(i64, i64)> {
        let a = a.max(self.lo);
        let b = self.hi.map_or(b, |h| b.min(h));
        (a <= b).then_some((a, b))
    }
}

/// Black-box access to an unknown distribution: plain draws and interval-conditioned draws.
pub trait SamplerOracle {
    fn draw(&mut self, rng: &mut dyn RngCore) -> Result<i64>;
    /// A draw conditioned on landing in `[a, b]`.
    fn icond(&mut self, rng: &mut dyn RngCore, a: i64, b: i64) -> Result<i64>;
    fn ledger(&self) -> &QueryLedger;
    fn ledger_mut(&mut self) -> &mut QueryLedger;
    fn support(&self) -> Support;
}

/// Ground-truth oracle that samples a table exactly.
#[derive(Clone, Debug)]
pub struct ExactOracle {
    dist: KnownDistribution,
    ledger: QueryLedger,
}

impl ExactOracle {
    pub fn new(table: ExplicitTable) -> Self {
        ExactOracle { dist: KnownDistribution::table(table), ledger: QueryLedger::default() }
    }

    /// Exact sampling from a known distribution (over its effective window).
    pub fn from_known(dist: KnownDistribution) -> Self {
        ExactOracle { dist, ledger: QueryLedger::default() }
    }

    pub fn distribution(&self) -> &KnownDistribution {
        &self.dist
    }
}

impl SamplerOracle for ExactOracle {
    fn draw(&mut self, rng: &mut dyn RngCore) -> Result<i64> {
        self.ledger.draws += 1;
        self.ledger.inner_uniform_draws += 1;
        Ok(self.dist.sample(rng))
    }

    fn icond(&mut self, rng: &mut dyn RngCore, a: i64, b: i64) -> Result<i64> {
        self.ledger.icond_calls += 1;
        if a > b {
            return domain(format!("icond on [{a}, {b}] with a > b"));
        }
        self.ledger.inner_uniform_draws += 1;
        self.dist.sample_between(a, b, rng)
    }

    fn ledger(&self) -> &QueryLedger {
        &self.ledger
    }

    fn ledger_mut(&mut self) -> &mut QueryLedger {
        &mut self.ledger
    }

    fn support(&self) -> Support {
        let (lo, hi) = self.dist.effective_support();
        Support { lo, hi: Some(hi) }
    }
}

/// Conditional draw by plain rejection: draw until the value lands in `[a, b]`.
///
/// Returns `None` after `cap` unsuccessful draws.
pub fn icond_rejection_fallback(
    sampler: &mut dyn SamplerOracle,
    a: i64,
    b: i64,
    cap: u64,
    rng: &mut dyn RngCore,
) -> Result<Option<i64>> {
    if cap == 0 {
        return domain("rejection fallback needs cap > 0");
    }
    for _ in 0..cap {
        let x = sampler.draw(rng)?;
        if (a..=b).contains(&x) {
            return Ok(Some(x));
        }
    }
    Ok(None)
}

/// Any of the built-in samplers, dispatched statically.
#[derive(Clone, Debug)]
pub enum AnySampler {
    Geometric(GeometricSampler),
    Binomial(BinomialSampler),
    Poisson(PoissonSampler),
    Exact(ExactOracle),
}

impl SamplerOracle for AnySampler {
    fn draw(&mut self, rng: &mut dyn RngCore) -> Result<i64> {
        match self {
            AnySampler::Geometric(s) => s.draw(rng),
            AnySampler::Binomial(s) => s.draw(rng),
            AnySampler::Poisson(s) => s.draw(rng),
            AnySampler::Exact(s) => s.draw(rng),
        }
    }

    fn icond(&mut self, rng: &mut dyn RngCore, a: i64, b: i64) -> Result<i64> {
        match self {
            AnySampler::Geometric(s) => s.icond(rng, a, b),
            AnySampler::Binomial(s) => s.icond(rng, a, b),
            AnySampler::Poisson(s) => s.icond(rng, a, b),
            AnySampler::Exact(s) => s.icond(rng, a, b),
        }
    }

    fn ledger(&self) -> &QueryLedger {
        match self {
            AnySampler::Geometric(s) => s.ledger(),
            AnySampler::Binomial(s) => s.ledger(),
            AnySampler::Poisson(s) => s.ledger(),
            AnySampler::Exact(s) => s.ledger(),
        }
    }

    fn ledger_mut(&mut self) -> &mut QueryLedger {
        match self {
            AnySampler::Geometric(s) => s.ledger_mut(),
            AnySampler::Binomial(s) => s.ledger_mut(),
            AnySampler::Poisson(s) => s.ledger_mut(),
            AnySampler::Exact(s) => s.ledger_mut(),
        }
    }

    fn support(&self) -> Support {
        match self {
            AnySampler::Geometric(s) => s.support(),
            AnySampler::Binomial(s) => s.support(),
            AnySampler::Poisson(s) => s.support(),
            AnySampler::Exact(s) => s.support(),
        }
    }
}

/// A parsed sampler registry key such as `binomial:31306:0.16:v4`.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplerKey {
    pub params: KeyParams,
    pub variant: u8,
}

#[derive(Clone, Debug, PartialEq)]
pub enum KeyParams {
    Builtin(SamplerParams),
    /// Exact sampling from a target spec (`uniform:lo:hi`, `table:path`).
    Exact(String),
}

impl SamplerKey {
    pub fn parse(key: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("bad sampler key `{key}`"));
        let mut fields: Vec<&str> = key.split(':').collect();
        let mut variant = 1u8;
        if fields.len() > 1 {
            if let Some(v) = fields[fields.len() - 1].strip_prefix('v') {
                variant = v.parse().map_err(|_| bad())?;
                fields.pop();
            }
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
        let params = match fields.as_slice() {
            ["geometric", p] => KeyParams::Builtin(SamplerParams::Geometric { p: num(p)? }),
            ["binomial", n, p] => {
                KeyParams::Builtin(SamplerParams::Binomial { n: n.parse().map_err(|_| bad())?, p: num(p)? })
            }
            ["poisson", mu] => KeyParams::Builtin(SamplerParams::Poisson { mu: num(mu)? }),
            ["uniform", _, _] | ["table", ..] => {
                if variant != 1 {
                    return domain("exact samplers have no buggy variants");
                }
                KeyParams::Exact(fields.join(":"))
            }
            _ => return Err(bad()),
        };
        Ok(SamplerKey { params, variant })
    }

    pub fn build(&self) -> Result<AnySampler> {
        match &self.params {
            KeyParams::Builtin(p) => make_buggy(*p, self.variant),
            KeyParams::Exact(spec) => {
                Ok(AnySampler::Exact(ExactOracle::from_known(KnownDistribution::parse_spec(spec)?)))
            }
        }
    }

    pub fn family_name(&self) -> &'static str {
        match &self.params {
            KeyParams::Builtin(SamplerParams::Geometric { .. }) => "geometric",
            KeyParams::Builtin(SamplerParams::Binomial { .. }) => "binomial",
            KeyParams::Builtin(SamplerParams::Poisson { .. }) => "poisson",
            KeyParams::Exact(_) => "exact",
        }
    }

    /// Parameter string without the family or variant, e.g. `31306:0.16`.
    pub fn params_label(&self) -> String {
        match &self.params {
            KeyParams::Builtin(SamplerParams::Geometric { p }) => format!("{p}"),
            KeyParams::Builtin(SamplerParams::Binomial { n, p }) => format!("{n}:{p}"),
            KeyParams::Builtin(SamplerParams::Poisson { mu }) => format!("{mu}"),
            KeyParams::Exact(spec) => spec.clone(),
        }
    }
}

/// Builds a sampler from a registry key.
pub fn sampler_from_key(key: &str) -> Result<AnySampler> {
    SamplerKey::parse(key)?.build()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::stats::{chi_square_passes, chi_square_stat, two_sample_chi_square};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn counts(xs: &[i64], lo: i64, hi: i64) -> Vec<u64> {
        let mut c = vec![0u64; (hi - lo + 1) as usize];
        for &x in xs {
            c[(x - lo) as usize] += 1;
        }
        c
    }

    #[test]
    fn registry_keys() {
        let k = SamplerKey::parse("binomial:31306:0.16:v4").unwrap();
        assert_eq!(k.variant, 4);
        assert_eq!(k.params, KeyParams::Builtin(SamplerParams::Binomial { n: 31306, p: 0.16 }));
        assert_eq!(SamplerKey::parse("poisson:29285").unwrap().variant, 1);
        assert!(SamplerKey::parse("poisson").is_err());
        assert!(SamplerKey::parse("gamma:2").is_err());
        assert!(sampler_from_key("poisson:100:v9").is_err());
        assert!(sampler_from_key("uniform:1:8").is_ok());
    }

    #[test]
    fn ledger_counts_each_call_once() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut s = sampler_from_key("binomial:100:0.3").unwrap();
        for _ in 0..10 {
            s.draw(&mut rng).unwrap();
        }
        for _ in 0..7 {
            s.icond(&mut rng, 25, 35).unwrap();
        }
        assert_eq!(s.ledger().draws, 10);
        assert_eq!(s.ledger().icond_calls, 7);
        assert!(s.ledger().inner_uniform_draws >= 2 * 17);
        s.ledger_mut().reset();
        assert_eq!(*s.ledger(), QueryLedger::default());
    }

    #[test]
    fn exact_oracle_conditional_law() {
        let table = ExplicitTable::from_pairs((1..=10).map(|x| (x, x as f64 / 55.0))).unwrap();
        let mut o = ExactOracle::new(table.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let xs: Vec<i64> = (0..100_000).map(|_| o.icond(&mut rng, 3, 7).unwrap()).collect();
        let mass: f64 = (3..=7).map(|x| table.prob(x)).sum();
        let expected: Vec<f64> = (3..=7).map(|x| table.prob(x) / mass).collect();
        assert!(chi_square_passes(chi_square_stat(&counts(&xs, 3, 7), &expected).unwrap(), 0.99));
        assert!(matches!(o.icond(&mut rng, 20, 30), Err(Error::DegenerateInterval { .. })));
    }

    #[test]
    fn fallback_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut g = sampler_from_key("geometric:0.5").unwrap();
        let mut twin = ChaCha8Rng::seed_from_u64(3);
        let first = g.clone().draw(&mut twin).unwrap();
        assert_eq!(icond_rejection_fallback(&mut g, 1, i64::MAX, 5, &mut rng).unwrap(), Some(first));
        // mass of [60, 60] is 2^-60
        assert_eq!(icond_rejection_fallback(&mut g, 60, 60, 1000, &mut rng).unwrap(), None);
        let mut a = Vec::new();
        let mut b = Vec::new();
        for _ in 0..10_000 {
            a.push(icond_rejection_fallback(&mut g, 1, 2, 1000, &mut rng).unwrap().unwrap());
            b.push(g.icond(&mut rng, 1, 2).unwrap());
        }
        let r = two_sample_chi_square(&counts(&a, 1, 2), &counts(&b, 1, 2)).unwrap();
        assert!(chi_square_passes(r, 0.99));
    }
}
