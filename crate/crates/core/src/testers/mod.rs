//! Identity testers for a black-box sampler against a known target.
//!
//! [`toltest`] runs the estimator on the mixture `(P + Q) / 2` with one global
//! budget and needs a finite target support. [`ertoltest`] runs it on `P`
//! directly with per-sample budgets taken from `Q`, and rejects as soon as any
//! sample is impossible under `Q` or any estimate fails.

mod mixture;

pub use mixture::{mixture_icond, MixtureOracle};

use rand::RngCore;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::estimator::{est, EstParams};
use crate::known::KnownDistribution;
use crate::sampler::{QueryLedger, SamplerOracle};
use crate::tpa::initial_radius;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Toltest,
    Ertoltest,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Decision {
    Accept,
    Reject,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RejectReason {
    DistanceStatistic,
    TooManyBottoms,
    ZeroTargetMass,
    EarlyBottom,
}

/// Closeness `epsilon`, farness `eta` and failure probability `delta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TestParams {
    pub epsilon: f64,
    pub eta: f64,
    pub delta: f64,
}

/// Quantities derived from [`TestParams`] for one tester.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Derived {
    pub mode: Mode,
    pub zeta: f64,
    /// Samples the statistic needs.
    pub t: u64,
    /// Samples drawn; equals `t` for the early-reject tester.
    pub t_prime: u64,
    pub k: Option<f64>,
    /// `d_hat` above this rejects.
    pub threshold: f64,
}

impl TestParams {
    pub fn new(epsilon: f64, eta: f64, delta: f64) -> Result<Self> {
        let p = TestParams { epsilon, eta, delta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| v > 0.0 && v < 1.0;
        if !unit(self.epsilon) || !unit(self.eta) || !unit(self.delta) {
            return domain("epsilon, eta and delta must lie in (0, 1)");
        }
        if !(self.eta > self.epsilon) {
            return domain(format!("need eta > epsilon, got eta = {} and epsilon = {}", self.eta, self.epsilon));
        }
        Ok(())
    }

    pub fn derive(&self, mode: Mode) -> Derived {
        let l4 = (4.0 / self.delta).ln();
        match mode {
            Mode::Toltest => {
                let gap = (self.eta - self.epsilon) / 2.0;
                let t = (8.0 / (gap * gap) * l4).ceil() as u64;
                let tf = t as f64;
                let k = 1.0 + l4 / tf + (l4 * l4 / tf + 2.0 * l4 / tf).sqrt();
                Derived {
                    mode,
                    zeta: gap / (gap + 2.0),
                    t,
                    t_prime: (3.0 * k * tf).ceil() as u64,
                    k: Some(k),
                    threshold: (self.eta + self.epsilon) / 4.0,
                }
            }
            Mode::Ertoltest => {
                let gap = self.eta - self.epsilon;
                let t = (8.0 / (gap * gap) * l4).ceil() as u64;
                Derived { mode, zeta: gap / (gap + 2.0), t, t_prime: t, k: None, threshold: (self.eta + self.epsilon) / 2.0 }
            }
        }
    }
}

/// Outcome of one tester run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestReport {
    pub decision: Decision,
    /// Absent when the run rejected before computing the statistic.
    pub d_hat: Option<f64>,
    pub samples_drawn: u64,
    pub samples_kept: u64,
    /// Interval-conditioning queries, to the mixture for `toltest` and to `P` for `ertoltest`.
    pub icond_calls: u64,
    pub draws: u64,
    pub inner_uniform_draws: u64,
    pub reject_reason: Option<RejectReason>,
    pub seed: Option<u64>,
    pub params: ReportParams,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReportParams {
    pub epsilon: f64,
    pub eta: f64,
    pub delta: f64,
    #[serde(flatten)]
    pub derived: Derived,
}

impl TestReport {
    fn new(params: &TestParams, derived: Derived, ledger: QueryLedger) -> Self {
        TestReport {
            decision: Decision::Reject,
            d_hat: None,
            samples_drawn: 0,
            samples_kept: 0,
            icond_calls: ledger.icond_calls,
            draws: ledger.draws,
            inner_uniform_draws: ledger.inner_uniform_draws,
            reject_reason: None,
            seed: None,
            params: ReportParams { epsilon: params.epsilon, eta: params.eta, delta: params.delta, derived },
        }
    }

    fn rejected(mut self, reason: RejectReason) -> Self {
        self.decision = Decision::Reject;
        self.reject_reason = Some(reason);
        self
    }

    fn decided(mut self, d_hat: f64) -> Self {
        self.d_hat = Some(d_hat);
        if d_hat > self.params.derived.threshold {
            self.rejected(RejectReason::DistanceStatistic)
        } else {
            self.decision = Decision::Accept;
            self
        }
    }
}

/// Mean of `max(0, 1 - Q(x) / p_hat)` over the kept `(x, p_hat)` pairs.
pub fn distance_stat(kept: &[(i64, f64)], q: &KnownDistribution) -> Result<f64> {
    if kept.is_empty() {
        return domain("distance statistic of an empty sample");
    }
    if kept.iter().any(|&(_, p)| !(p > 0.0)) {
        return domain("distance statistic needs positive estimates");
    }
    let total: f64 = kept.iter().map(|&(x, p)| (1.0 - q.pmf(x) / p).max(0.0)).sum();
    Ok(total / kept.len() as f64)
}

fn radius_for(q: &KnownDistribution, x: i64) -> f64 {
    let (lo, hi) = q.effective_support();
    initial_radius(x, lo.min(x), hi.max(x))
}

/// Tolerant tester: distinguishes `d_TV(P, Q) <= epsilon` from `d_TV(P, Q) >= eta`.
///
/// Estimates the mixture `(P + Q) / 2` at `t'` mixture samples with the budget
/// `theta = 1 / Q_min`, `B = ln theta + ln(1 + epsilon/2)`. Needs a finite target support.
pub fn toltest(
    p: &mut dyn SamplerOracle,
    q: &KnownDistribution,
    params: &TestParams,
    rng: &mut dyn RngCore,
) -> Result<TestReport> {
    params.validate()?;
    let Some(ln_q_min) = q.ln_min_mass() else {
        return Err(Error::UnsupportedMode(format!(
            "toltest needs a finite target support; {} is unbounded, use ertoltest",
            q.label()
        )));
    };
    let d = params.derive(Mode::Toltest);
    let est_params = |x| EstParams {
        zeta: d.zeta,
        delta: params.delta / (4.0 * d.t_prime as f64),
        budget: -ln_q_min + (params.epsilon / 2.0).ln_1p(),
        // 1 / Q_min overflows to infinity for very small masses, which lifts the attempt cap
        theta: (-ln_q_min).exp().max(1.0),
        initial_radius: radius_for(q, x),
    };
    let mut mix = MixtureOracle::new(p, q);
    let mut kept = Vec::with_capacity(d.t_prime as usize);
    for _ in 0..d.t_prime {
        let x = mix.draw(rng)?;
        if let Some(v) = est(&mut mix, x, &est_params(x), rng)?.value {
            kept.push((x, v));
        }
    }
    let mut report = TestReport::new(params, d, *mix.ledger());
    report.samples_drawn = d.t_prime;
    report.samples_kept = kept.len() as u64;
    report.inner_uniform_draws += mix.p_side.ledger().inner_uniform_draws;
    if (kept.len() as u64) < d.t {
        return Ok(report.rejected(RejectReason::TooManyBottoms));
    }
    Ok(report.decided(distance_stat(&kept, q)?))
}

/// Early-reject tester: distinguishes `max_x |P(x)/Q(x) - 1| <= 2 epsilon` from `d_TV(P, Q) >= eta`.
///
/// Each sample `x` gets the budget `B = ln((1 + 2 epsilon) / Q(x))` and smoothness
/// bound `theta = (1 + epsilon)/(1 - epsilon) tilt_Q(x)`; a sample outside `Q`'s
/// support or a failed estimate rejects at once.
pub fn ertoltest(
    p: &mut dyn SamplerOracle,
    q: &KnownDistribution,
    params: &TestParams,
    rng: &mut dyn RngCore,
) -> Result<TestReport> {
    params.validate()?;
    let d = params.derive(Mode::Ertoltest);
    let eps = params.epsilon;
    let start = *p.ledger();
    let mut xs = Vec::with_capacity(d.t as usize);
    for _ in 0..d.t {
        xs.push(p.draw(rng)?);
    }
    let mut kept = Vec::with_capacity(xs.len());
    let mut early = None;
    for &x in &xs {
        let ln_qx = q.ln_pmf(x);
        if ln_qx == f64::NEG_INFINITY {
            early = Some(RejectReason::ZeroTargetMass);
            break;
        }
        let ep = EstParams {
            zeta: d.zeta,
            delta: params.delta / (4.0 * d.t as f64),
            budget: (2.0 * eps).ln_1p() - ln_qx,
            // tilt can dip below 1 near a mode; the attempt budget treats theta < 1 as 1
            theta: ((1.0 + eps) / (1.0 - eps) * q.tilt(x)?).max(1.0),
            initial_radius: radius_for(q, x),
        };
        match est(p, x, &ep, rng)?.value {
            Some(v) => kept.push((x, v)),
            None => {
                early = Some(RejectReason::EarlyBottom);
                break;
            }
        }
    }
    let mut report = TestReport::new(params, d, p.ledger().since(&start));
    report.samples_drawn = d.t;
    report.samples_kept = kept.len() as u64;
    if let Some(reason) = early {
        return Ok(report.rejected(reason));
    }
    Ok(report.decided(distance_stat(&kept, q)?))
}

/// Runs the tester for `mode`.
pub fn run_tester(
    mode: Mode,
    p: &mut dyn SamplerOracle,
    q: &KnownDistribution,
    params: &TestParams,
    rng: &mut dyn RngCore,
) -> Result<TestReport> {
    match mode {
        Mode::Toltest => toltest(p, q, params, rng),
        Mode::Ertoltest => ertoltest(p, q, params, rng),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::known::{tv_distance_exact, ExplicitTable};
    use crate::sampler::{ExactOracle, Support};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn derived_examples() {
        let p = TestParams::new(0.01, 0.5, 0.1).unwrap();
        let tol = p.derive(Mode::Toltest);
        assert!((tol.zeta - 0.245 / 2.245).abs() < 1e-12);
        assert!((tol.zeta - 0.109131).abs() < 1e-6);
        assert_eq!(tol.t, 492);
        // k = 1 + l/t + sqrt(l^2/t + 2l/t), l = ln 40
        let l = 40f64.ln();
        let k = 1.0 + l / 492.0 + (l * l / 492.0 + 2.0 * l / 492.0).sqrt();
        assert!((tol.k.unwrap() - k).abs() < 1e-12);
        assert_eq!(tol.t_prime, (3.0 * k * 492.0).ceil() as u64);
        assert_eq!(tol.t_prime, 1792);
        assert!((tol.threshold - 0.1275).abs() < 1e-12);
        let er = p.derive(Mode::Ertoltest);
        assert!((er.zeta - 0.196787).abs() < 1e-6);
        assert_eq!(er.t, 123);
        assert!((er.threshold - 0.255).abs() < 1e-12);
    }

    #[test]
    fn parameter_preconditions() {
        assert!(TestParams::new(0.3, 0.3, 0.1).is_err());
        assert!(TestParams::new(0.4, 0.3, 0.1).is_err());
        assert!(TestParams::new(0.1, 0.3, 0.0).is_err());
    }

    #[test]
    fn distance_stat_examples() {
        let q = KnownDistribution::uniform_range(1, 4).unwrap();
        assert_eq!(distance_stat(&[(1, 0.25), (3, 0.25)], &q).unwrap(), 0.0);
        assert_eq!(distance_stat(&[(2, 0.5)], &q).unwrap(), 0.5);
        assert!(distance_stat(&[], &q).is_err());
    }

    #[test]
    fn distance_stat_tracks_total_variation() {
        let p = ExplicitTable::from_pairs([(1, 0.4), (2, 0.3), (3, 0.2), (4, 0.1)]).unwrap();
        let q = KnownDistribution::uniform_range(1, 4).unwrap();
        let tv = tv_distance_exact(&p, &q.to_table()).unwrap();
        let pd = KnownDistribution::table(p.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let kept: Vec<(i64, f64)> = (0..2000)
            .map(|_| {
                let x = pd.sample(&mut rng);
                (x, p.prob(x))
            })
            .collect();
        assert!((distance_stat(&kept, &q).unwrap() - tv).abs() < 0.05);
    }

    #[test]
    fn toltest_rejects_unbounded_targets() {
        let q = KnownDistribution::poisson(10.0).unwrap();
        let mut p = ExactOracle::from_known(q.clone());
        let r = toltest(&mut p, &q, &TestParams::new(0.1, 0.5, 0.1).unwrap(), &mut ChaCha8Rng::seed_from_u64(6));
        assert!(matches!(r, Err(Error::UnsupportedMode(_))));
    }

    #[test]
    fn ertoltest_rejects_samples_outside_target() {
        let q = KnownDistribution::uniform_range(1, 32).unwrap();
        let mut p = ExactOracle::from_known(KnownDistribution::uniform_range(1, 64).unwrap());
        let params = TestParams::new(0.01, 0.5, 0.1).unwrap();
        let r = ertoltest(&mut p, &q, &params, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert_eq!(r.decision, Decision::Reject);
        assert_eq!(r.reject_reason, Some(RejectReason::ZeroTargetMass));
        assert_eq!(r.d_hat, None);
        assert_eq!(r.draws, 123);
        assert!(r.samples_kept < r.samples_drawn);
    }

    /// Plain draws work, conditioned draws always exhaust their loop.
    struct Stubborn(ExactOracle);

    impl SamplerOracle for Stubborn {
        fn draw(&mut self, rng: &mut dyn RngCore) -> Result<i64> {
            self.0.draw(rng)
        }
        fn icond(&mut self, _rng: &mut dyn RngCore, _a: i64, _b: i64) -> Result<i64> {
            self.0.ledger_mut().icond_calls += 1;
            Err(Error::Runaway { cap: 1 })
        }
        fn ledger(&self) -> &QueryLedger {
            self.0.ledger()
        }
        fn ledger_mut(&mut self) -> &mut QueryLedger {
            self.0.ledger_mut()
        }
        fn support(&self) -> Support {
            self.0.support()
        }
    }

    #[test]
    fn ertoltest_rejects_on_first_bottom() {
        let q = KnownDistribution::uniform_range(1, 16).unwrap();
        let mut p = Stubborn(ExactOracle::from_known(q.clone()));
        let params = TestParams::new(0.01, 0.5, 0.1).unwrap();
        let r = ertoltest(&mut p, &q, &params, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        assert_eq!(r.reject_reason, Some(RejectReason::EarlyBottom));
        assert_eq!(r.d_hat, None);
        assert_eq!(r.samples_kept, 0);
        assert_eq!(r.icond_calls, 1);
    }

    #[test]
    fn accept_implies_statistic_below_threshold() {
        let q = KnownDistribution::uniform_range(1, 8).unwrap();
        let params = TestParams::new(0.05, 0.7, 0.1).unwrap();
        for seed in 0..3 {
            let mut p = ExactOracle::from_known(q.clone());
            let r = ertoltest(&mut p, &q, &params, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            match r.decision {
                Decision::Accept => assert!(r.d_hat.unwrap() <= r.params.derived.threshold),
                Decision::Reject => assert!(r.d_hat.is_none_or(|d| d > r.params.derived.threshold)),
            }
            assert!(r.samples_kept <= r.samples_drawn);
            assert_eq!(r.icond_calls, p.ledger().icond_calls);
        }
    }

    #[test]
    fn report_serializes_with_documented_fields() {
        let q = KnownDistribution::uniform_range(1, 4).unwrap();
        let mut p = ExactOracle::from_known(q.clone());
        let params = TestParams::new(0.1, 0.9, 0.2).unwrap();
        let mut r = ertoltest(&mut p, &q, &params, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        r.seed = Some(9);
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        for key in ["decision", "d_hat", "samples_drawn", "samples_kept", "icond_calls", "reject_reason", "seed", "params"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["params"]["mode"], "ertoltest");
    }
}
