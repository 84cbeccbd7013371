use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::known::KnownDistribution;
use crate::sampler::{QueryLedger, SamplerOracle, Support};

/// Oracle access to the even mixture `(P + Q) / 2` of an unknown sampler and the known target.
///
/// Conditioned draws flip a fair coin between `P` and `Q` restricted to the
/// interval. This is the exact mixture conditional only when `P([a, b]) = Q([a, b])`;
/// in general the true conditional weights the `P` side by
/// `P([a, b]) / (P([a, b]) + Q([a, b]))`, which no available oracle reveals.
/// The bias is zero when `P = Q` and only affects runs where `P` is far from `Q`.
pub struct MixtureOracle<'a> {
    pub p_side: &'a mut dyn SamplerOracle,
    pub q_side: &'a KnownDistribution,
    ledger: QueryLedger,
}

impl<'a> MixtureOracle<'a> {
    pub fn new(p_side: &'a mut dyn SamplerOracle, q_side: &'a KnownDistribution) -> Self {
        MixtureOracle { p_side, q_side, ledger: QueryLedger::default() }
    }
}

/// Fair-coin conditioned draw from the mixture; falls back to the other side when one side has no mass.
pub fn mixture_icond(m: &mut MixtureOracle<'_>, a: i64, b: i64, rng: &mut dyn RngCore) -> Result<i64> {
    if a > b {
        return Err(Error::Domain(format!("icond on [{a}, {b}] with a > b")));
    }
    m.ledger.icond_calls += 1;
    m.ledger.inner_uniform_draws += 1;
    let q_first = rng.random::<bool>();
    let q_draw = |rng: &mut dyn RngCore| m.q_side.sample_between(a, b, rng);
    if q_first {
        match q_draw(rng) {
            Err(Error::DegenerateInterval { .. }) => m.p_side.icond(rng, a, b),
            other => other,
        }
    } else {
        match m.p_side.icond(rng, a, b) {
            Err(Error::DegenerateInterval { .. } | Error::Runaway { .. }) => q_draw(rng),
            other => other,
        }
    }
}

impl SamplerOracle for MixtureOracle<'_> {
    fn draw(&mut self, rng: &mut dyn RngCore) -> Result<i64> {
        self.ledger.draws += 1;
        self.ledger.inner_uniform_draws += 1;
        if rng.random::<bool>() {
            Ok(self.q_side.sample(rng))
        } else {
            self.p_side.draw(rng)
        }
    }

    fn icond(&mut self, rng: &mut dyn RngCore, a: i64, b: i64) -> Result<i64> {
        mixture_icond(self, a, b, rng)
    }

    fn ledger(&self) -> &QueryLedger {
        &self.ledger
    }

    fn ledger_mut(&mut self) -> &mut QueryLedger {
        &mut self.ledger
    }

    fn support(&self) -> Support {
        let p = self.p_side.support();
        let (qlo, qhi) = self.q_side.support();
        Support { lo: p.lo.min(qlo), hi: p.hi.zip(qhi).map(|(a, b)| a.max(b)) }
    }
}
