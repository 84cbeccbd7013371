//! Two-phase point-mass estimation: a short stopping-time pass sizes a longer one.

use rand::RngCore;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::sampler::SamplerOracle;
use crate::tpa::{tpa, TpaConfig};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EstParams {
    /// Relative accuracy target.
    pub zeta: f64,
    /// Failure probability.
    pub delta: f64,
    /// Budget `B` in nats: the estimate is trusted only if `P(x) >= e^-B`.
    pub budget: f64,
    /// Smoothness bound forwarded to the conditioning calls.
    pub theta: f64,
    /// Starting half-width of every chain.
    pub initial_radius: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EstimateOutcome {
    /// `e^-lambda` of the second phase; `None` is Bottom.
    pub value: Option<f64>,
    pub phase1_lambda: Option<f64>,
    pub r2_used: u64,
    pub icond_calls: u64,
}

/// Chains in the first phase: `ceil(2 ln(8/delta))`.
pub fn first_phase_chains(delta: f64) -> u64 {
    (2.0 * (8.0 / delta).ln()).ceil() as u64
}

/// Step cap `B + L + sqrt(L^2 + 2 B L)` with `L = ln(2r/delta)`.
pub fn step_cap(budget: f64, r: u64, delta: f64) -> f64 {
    let l = (2.0 * r as f64 / delta).ln();
    budget + l + (l * l + 2.0 * budget * l).sqrt()
}

/// Chains in the second phase: `ceil(2(lambda + sqrt(lambda) + 2 + ln(1+zeta)) / ln^2(1+zeta) * ln(16/delta))`.
pub fn second_phase_chains(lambda: f64, zeta: f64, delta: f64) -> u64 {
    let lz = zeta.ln_1p();
    (2.0 * (lambda + lambda.sqrt() + 2.0 + lz) / (lz * lz) * (16.0 / delta).ln()).ceil() as u64
}

/// Estimates `P(x)` within a factor `1 ± zeta` with probability at least `1 - delta`
/// whenever `P(x) >= 1/theta`... and `P(x) >= e^-B`; otherwise it may return Bottom.
pub fn est(oracle: &mut dyn SamplerOracle, x: i64, params: &EstParams, rng: &mut dyn RngCore) -> Result<EstimateOutcome> {
    let EstParams { zeta, delta, budget, theta, initial_radius } = *params;
    if !(zeta > 0.0 && zeta < 1.0) || !(delta > 0.0 && delta < 1.0) {
        return domain("est needs zeta and delta in (0, 1)");
    }
    if !(budget > 0.0) || !(theta >= 1.0) {
        return domain("est needs B > 0 and theta >= 1");
    }
    let start = oracle.ledger().icond_calls;
    let calls = |o: &dyn SamplerOracle| o.ledger().icond_calls - start;
    let r1 = first_phase_chains(delta);
    let cfg1 = TpaConfig { r: r1, thresh: step_cap(budget, r1, delta), delta: delta / 4.0, theta, initial_radius };
    let Some(lambda1) = tpa(oracle, x, &cfg1, rng)? else {
        return Ok(EstimateOutcome { value: None, phase1_lambda: None, r2_used: 0, icond_calls: calls(oracle) });
    };
    let r2 = second_phase_chains(lambda1, zeta, delta);
    let cfg2 = TpaConfig { r: r2, thresh: step_cap(budget, r2, delta), ..cfg1 };
    let lambda2 = tpa(oracle, x, &cfg2, rng)?;
    Ok(EstimateOutcome {
        value: lambda2.map(|l| (-l).exp()),
        phase1_lambda: Some(lambda1),
        r2_used: r2,
        icond_calls: calls(oracle),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::known::ExplicitTable;
    use crate::sampler::ExactOracle;
    use crate::tpa::initial_radius;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn formulas_match_hand_evaluation() {
        // delta = 0.1: 2 ln 80 = 8.7640...
        assert_eq!(first_phase_chains(0.1), 9);
        // B = ln 8.16, r = 9: L = ln 180
        let b = 8.16f64.ln();
        let l = 180f64.ln();
        assert!((step_cap(b, 9, 0.1) - (b + l + (l * l + 2.0 * b * l).sqrt())).abs() < 1e-12);
        assert!((step_cap(2.0, 9, 0.1) - 14.102_271_452_12).abs() < 1e-9);
        // lambda = 2, zeta = 0.2: 2 (2 + 1.41421 + 2 + 0.18232) / 0.033241 * ln 160 = 1708.93...
        let want = (2.0 * (2.0 + 2f64.sqrt() + 2.0 + 1.2f64.ln()) / 1.2f64.ln().powi(2) * 160f64.ln()).ceil();
        assert_eq!(second_phase_chains(2.0, 0.2, 0.1) as f64, want);
        assert_eq!(second_phase_chains(2.0, 0.2, 0.1), 1709);
    }

    #[test]
    fn halving_zeta_quadruples_chains() {
        for lambda in [0.5, 3.0, 10.0] {
            for zeta in [0.4, 0.2, 0.1, 0.05, 0.01] {
                let r = second_phase_chains(lambda, zeta, 0.1) as f64;
                let r_half = second_phase_chains(lambda, zeta / 2.0, 0.1) as f64;
                // ln^2(1+z) / ln^2(1+z/2) = 4 (1 - O(z))
                assert!(r_half + 1.0 >= 4.0 * (1.0 - zeta) * r, "lambda {lambda} zeta {zeta}: {r} -> {r_half}");
            }
        }
    }

    #[test]
    fn point_mass_estimates_one() {
        let mut o = ExactOracle::new(ExplicitTable::from_pairs([(3, 1.0)]).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = EstParams { zeta: 0.2, delta: 0.1, budget: 1.0, theta: 1.0, initial_radius: 5.0 };
        let out = est(&mut o, 3, &p, &mut rng).unwrap();
        assert_eq!(out.value, Some(1.0));
        assert!(out.icond_calls >= first_phase_chains(0.1));
    }

    #[test]
    fn uniform_eight_coverage() {
        let table = ExplicitTable::from_pairs((1..=8).map(|x| (x, 0.125))).unwrap();
        let p = EstParams {
            zeta: 0.2,
            delta: 0.1,
            budget: (8.0f64 * 1.02).ln(),
            theta: 2.0,
            initial_radius: initial_radius(4, 1, 8),
        };
        let mut inside = 0;
        for seed in 0..50 {
            let mut o = ExactOracle::new(table.clone());
            let out = est(&mut o, 4, &p, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            if out.value.is_some_and(|v| (0.1..=0.15).contains(&v)) {
                inside += 1;
            }
        }
        assert!(inside >= 45, "{inside}/50");
    }

    #[test]
    fn outside_support_is_bottom() {
        let table = ExplicitTable::from_pairs((1..=8).map(|x| (x, 0.125))).unwrap();
        let mut o = ExactOracle::new(table);
        let p = EstParams { zeta: 0.2, delta: 0.1, budget: 0.5, theta: 1.0, initial_radius: 30.0 };
        let out = est(&mut o, 20, &p, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert_eq!(out.value, None);
    }

    #[test]
    fn invalid_parameters() {
        let mut o = ExactOracle::new(ExplicitTable::from_pairs([(3, 1.0)]).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = EstParams { zeta: 0.2, delta: 0.1, budget: 0.0, theta: 1.0, initial_radius: 5.0 };
        assert!(est(&mut o, 3, &p, &mut rng).is_err());
    }
}
