//! Stopping-time estimation of a point's mass: shrink a nest of intervals
//! around the point by conditional draws and count the steps to reach it.
//!
//! For the noise-smoothed law the mass of `[x - 1/2, x + 1/2]` equals `P(x)`,
//! and the per-chain step count minus one is Poisson with mean `ln(1/P(x))`.

use rand::RngCore;

use crate::cont::icond_cont;
use crate::error::{domain, Result};
use crate::sampler::SamplerOracle;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TpaConfig {
    /// Number of independent chains.
    pub r: u64,
    /// Cap on any chain's step count.
    pub thresh: f64,
    /// Failure budget shared by all conditioning calls.
    pub delta: f64,
    /// Smoothness bound forwarded to the conditioning calls.
    pub theta: f64,
    /// Starting half-width of every chain.
    pub initial_radius: f64,
}

impl TpaConfig {
    fn validate(&self) -> Result<()> {
        if self.r < 1 || !(self.thresh > 0.0) || !(self.initial_radius > 0.5) {
            return domain("tpa needs r >= 1, thresh > 0 and initial radius > 1/2");
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return domain("tpa delta must lie in (0, 1)");
        }
        Ok(())
    }
}

/// Starting radius covering the window `[lo, hi]` from `x`, doubled.
pub fn initial_radius(x: i64, lo: i64, hi: i64) -> f64 {
    2.0 * ((x - lo).abs().max((hi - x).abs()) as f64) + 1.0
}

/// One chain; returns its step count minus one, or `None` for Bottom.
pub fn tpa_chain(
    oracle: &mut dyn SamplerOracle,
    x: i64,
    cfg: &TpaConfig,
    rng: &mut dyn RngCore,
) -> Result<Option<u64>> {
    cfg.validate()?;
    let support = oracle.support();
    let lo = support.lo.min(x) as f64 - 0.5;
    let hi = support.hi.map_or(f64::INFINITY, |h| h.max(x) as f64 + 0.5);
    let xf = x as f64;
    let call_delta = cfg.delta / (cfg.r as f64 * cfg.thresh);
    let mut beta = cfg.initial_radius;
    let mut steps: u64 = 0;
    while beta > 0.5 {
        if steps as f64 >= cfg.thresh {
            return Ok(None);
        }
        let u = lo.max(xf - beta);
        let v = hi.min(xf + beta);
        let Some(y) = icond_cont(oracle, u, v, call_delta, cfg.theta, rng)?.value else {
            return Ok(None);
        };
        steps += 1;
        let next = (y - xf).abs();
        debug_assert!(next <= beta, "nest grew from {beta} to {next}");
        beta = next;
    }
    Ok(Some(steps - 1))
}

/// Per-chain counts of all `cfg.r` chains, or `None` if any chain hits Bottom.
pub fn tpa_counts(
    oracle: &mut dyn SamplerOracle,
    x: i64,
    cfg: &TpaConfig,
    rng: &mut dyn RngCore,
) -> Result<Option<Vec<u64>>> {
    cfg.validate()?;
    let mut counts = Vec::with_capacity(cfg.r as usize);
    for _ in 0..cfg.r {
        match tpa_chain(oracle, x, cfg, rng)? {
            Some(k) => counts.push(k),
            None => return Ok(None),
        }
    }
    Ok(Some(counts))
}

/// Mean per-chain count over `cfg.r` chains, an estimate of `ln(1/P(x))`; `None` is Bottom.
pub fn tpa(oracle: &mut dyn SamplerOracle, x: i64, cfg: &TpaConfig, rng: &mut dyn RngCore) -> Result<Option<f64>> {
    Ok(tpa_counts(oracle, x, cfg, rng)?.map(|c| c.iter().sum::<u64>() as f64 / cfg.r as f64))
}
