//! Interval conditioning on the noise-smoothed law P*Tri, built from discrete
//! interval-conditioned draws plus triangular noise and rejection.

use rand::RngCore;

use crate::error::{domain, Error, Result};
use crate::known::{round_half_up, TriangularNoise};
use crate::sampler::SamplerOracle;

/// Outcome of one continuous conditioning request; `value = None` is Bottom.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContCondResult {
    pub value: Option<f64>,
    pub attempts: u64,
}

/// Attempt budget `ceil((2 theta + 1) ln(1/delta))`, with theta clamped to at least 1.
pub fn attempt_budget(delta: f64, theta: f64) -> u64 {
    let theta = theta.max(1.0);
    // float-to-int casts saturate, so an astronomically large theta means "no cap"
    ((2.0 * theta + 1.0) * (1.0 / delta).ln()).ceil() as u64
}

/// A draw from P*Tri restricted to `[u, v]`, or Bottom after the attempt budget.
///
/// Each attempt draws `x` from P conditioned on `[round(u), round(v)]`, adds
/// triangular noise and keeps the result if it lies in `[u, v]`. Oracle-level
/// failures (zero-mass interval, exhausted rejection loop) are reported as Bottom.
pub fn icond_cont(
    oracle: &mut dyn SamplerOracle,
    u: f64,
    v: f64,
    delta: f64,
    theta: f64,
    rng: &mut dyn RngCore,
) -> Result<ContCondResult> {
    if !(v >= u + 1.0 - 1e-9) || !u.is_finite() || !v.is_finite() {
        return domain(format!("continuous conditioning needs v >= u + 1, got [{u}, {v}]"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return domain("delta must lie in (0, 1)");
    }
    let budget = attempt_budget(delta, theta);
    let (a, b) = (round_half_up(u), round_half_up(v));
    let mut attempts = 0;
    while attempts < budget {
        attempts += 1;
        let x = match oracle.icond(rng, a, b) {
            Ok(x) => x,
            Err(Error::DegenerateInterval { .. } | Error::Runaway { .. }) => {
                return Ok(ContCondResult { value: None, attempts });
            }
            Err(e) => return Err(e),
        };
        let y = x as f64 + TriangularNoise::sample(rng);
        if y >= u && y <= v {
            return Ok(ContCondResult { value: Some(y), attempts });
        }
    }
    Ok(ContCondResult { value: None, attempts })
}
