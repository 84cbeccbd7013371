//! Experiment plumbing behind the `lachesis` binary: tester runs, sweeps,
//! statistical self-checks and their CSV/JSON output.

mod sweep;
mod validate;

pub use sweep::{case_study, parse_grid, perf_sweep, write_csv, Row, SweepOptions, SweepSpec, CSV_HEADER};
pub use validate::{validate, Check, ValidationReport};

use std::io::Write;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::estimator::{est, EstParams, EstimateOutcome};
use crate::known::KnownDistribution;
use crate::sampler::{SamplerKey, SamplerOracle};
use crate::testers::{run_tester, Decision, Mode, TestParams, TestReport};
use crate::tpa::initial_radius;

/// Environment variable consulted when no `--seed` is given.
pub const SEED_ENV: &str = "LACHESIS_SEED";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
    Human,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            "human" => Ok(OutputFormat::Human),
            _ => Err(Error::Parse(format!("unknown format `{s}` (json, csv, human)"))),
        }
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "toltest" => Ok(Mode::Toltest),
            "ertoltest" => Ok(Mode::Ertoltest),
            _ => Err(Error::Parse(format!("unknown mode `{s}` (toltest, ertoltest)"))),
        }
    }
}

/// One `lachesis test` invocation.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub sampler_key: String,
    pub target: String,
    pub epsilon: f64,
    pub eta: f64,
    pub delta: f64,
    pub seed: u64,
    pub trials: u32,
    pub format: OutputFormat,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        TestParams::new(self.epsilon, self.eta, self.delta)?;
        if self.trials < 1 {
            return domain("trials must be at least 1");
        }
        Ok(())
    }
}

/// Seed of substream `index` under `master`: the first word of the ChaCha stream `index`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng.next_u64()
}

/// Seed from the flag, else from `LACHESIS_SEED`, else 0.
pub fn resolve_seed(flag: Option<u64>) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| Error::Parse(format!("{SEED_ENV}=`{v}` is not a u64"))),
        Err(_) => Ok(0),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestSummary {
    pub sampler: String,
    pub target: String,
    pub mode: Mode,
    pub trials: Vec<TestReport>,
    pub accept_fraction: f64,
    pub mean_icond_calls: f64,
    /// Majority decision; ties reject.
    pub decision: Decision,
}

/// Runs the configured tester `trials` times, trial `i` on substream seed `derive_seed(seed, i)`.
pub fn run_test(cfg: &RunConfig) -> Result<TestSummary> {
    cfg.validate()?;
    let key = SamplerKey::parse(&cfg.sampler_key)?;
    let target = KnownDistribution::parse_spec(&cfg.target)?;
    if cfg.mode == Mode::Toltest && !target.has_finite_support() {
        return Err(Error::UnsupportedMode(format!(
            "toltest needs a finite target support; {} is unbounded, use --mode ertoltest",
            target.label()
        )));
    }
    let params = TestParams::new(cfg.epsilon, cfg.eta, cfg.delta)?;
    let mut trials = Vec::with_capacity(cfg.trials as usize);
    for i in 0..cfg.trials as u64 {
        let seed = derive_seed(cfg.seed, i);
        let mut sampler = key.build()?;
        let mut report = run_tester(cfg.mode, &mut sampler, &target, &params, &mut ChaCha8Rng::seed_from_u64(seed))?;
        report.seed = Some(seed);
        trials.push(report);
    }
    let n = trials.len() as f64;
    let accepts = trials.iter().filter(|r| r.decision == Decision::Accept).count() as f64;
    Ok(TestSummary {
        sampler: cfg.sampler_key.clone(),
        target: cfg.target.clone(),
        mode: cfg.mode,
        accept_fraction: accepts / n,
        mean_icond_calls: trials.iter().map(|r| r.icond_calls as f64).sum::<f64>() / n,
        decision: if accepts > n / 2.0 { Decision::Accept } else { Decision::Reject },
        trials,
    })
}

/// Writes a summary in the requested format.
pub fn write_summary(s: &TestSummary, format: OutputFormat, out: &mut dyn Write) -> Result<()> {
    match format {
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut *out, s).map_err(|e| Error::Io(e.to_string()))?;
            writeln!(out)?;
        }
        OutputFormat::Csv => {
            let key = SamplerKey::parse(&s.sampler)?;
            let rows: Vec<Row> = s.trials.iter().map(|r| Row::from_report(&key, s.mode, r, 0.0)).collect();
            write_csv(&rows, out)?;
        }
        OutputFormat::Human => {
            writeln!(out, "{} vs {} ({:?})", s.sampler, s.target, s.mode)?;
            for (i, r) in s.trials.iter().enumerate() {
                let d = r.d_hat.map_or("-".to_string(), |d| format!("{d:.4}"));
                let why = r.reject_reason.map_or(String::new(), |w| format!(" ({w:?})"));
                writeln!(out, "  trial {i}: {:?}{why}  d_hat {d}  icond calls {}", r.decision, r.icond_calls)?;
            }
            writeln!(
                out,
                "{:?}: accept fraction {:.2}, mean icond calls {:.0}",
                s.decision, s.accept_fraction, s.mean_icond_calls
            )?;
        }
    }
    Ok(())
}

/// A single point-mass estimate of the sampler at `x`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateReport {
    pub sampler: String,
    pub x: i64,
    pub target_mass: f64,
    pub params: EstParams,
    pub outcome: EstimateOutcome,
    pub seed: u64,
}

/// Estimates the sampler's mass at `x`, with budget and smoothness bound taken from the target
/// as in the early-reject tester.
pub fn estimate(sampler_key: &str, target: &str, x: i64, zeta: f64, epsilon: f64, delta: f64, seed: u64) -> Result<EstimateReport> {
    let q = KnownDistribution::parse_spec(target)?;
    let mut sampler = SamplerKey::parse(sampler_key)?.build()?;
    let ln_qx = q.ln_pmf(x);
    if ln_qx == f64::NEG_INFINITY {
        return domain(format!("target {} has no mass at {x}", q.label()));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return domain("epsilon must lie in (0, 1)");
    }
    let (lo, hi) = q.effective_support();
    let params = EstParams {
        zeta,
        delta,
        budget: (2.0 * epsilon).ln_1p() - ln_qx,
        theta: ((1.0 + epsilon) / (1.0 - epsilon) * q.tilt(x)?).max(1.0),
        initial_radius: initial_radius(x, lo.min(x), hi.max(x)),
    };
    let outcome = est(&mut sampler, x, &params, &mut ChaCha8Rng::seed_from_u64(seed))?;
    debug_assert_eq!(outcome.icond_calls, sampler.ledger().icond_calls);
    Ok(EstimateReport { sampler: sampler_key.to_string(), x, target_mass: q.pmf(x), params, outcome, seed })
}
