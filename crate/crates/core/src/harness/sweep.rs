use std::io::Write;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::derive_seed;
use crate::error::{domain, Error, Result};
use crate::known::KnownDistribution;
use crate::sampler::{KeyParams, SamplerFamily, SamplerKey, SamplerParams};
use crate::testers::{run_tester, Decision, Mode, TestParams, TestReport};

pub const CSV_HEADER: [&str; 10] =
    ["family", "params", "variant", "mode", "decision", "d_hat", "draws", "icond_calls", "seconds", "seed"];

/// A grid of sampler parameters crossed with variants.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub family: SamplerFamily,
    pub grid: Vec<SamplerParams>,
    pub variants: Vec<u8>,
    pub per_cell_trials: u32,
}

impl SweepSpec {
    /// The six parameter cells per family of the published case-study summary, all variants, one trial.
    pub fn case_study_default(family: SamplerFamily) -> Self {
        let grid = match family {
            SamplerFamily::Binomial => [(31306, 0.16), (83836, 0.42), (49489, 0.25), (39387, 0.2), (77775, 0.39), (89897, 0.45)]
                .into_iter()
                .map(|(n, p)| SamplerParams::Binomial { n, p })
                .collect(),
            SamplerFamily::Poisson => [29285.0, 69693.0, 100000.0, 83836.0, 53530.0, 23224.0]
                .into_iter()
                .map(|mu| SamplerParams::Poisson { mu })
                .collect(),
            SamplerFamily::Geometric => [0.5, 0.2, 0.1, 0.05, 0.02, 0.01].into_iter().map(|p| SamplerParams::Geometric { p }).collect(),
        };
        let variants = if family == SamplerFamily::Geometric { vec![1] } else { (1..=6).collect() };
        SweepSpec { family, grid, variants, per_cell_trials: 1 }
    }

    fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return domain("sweep grid is empty");
        }
        if self.variants.is_empty() || self.per_cell_trials < 1 {
            return domain("sweep needs at least one variant and one trial per cell");
        }
        if let Some(p) = self.grid.iter().find(|p| p.family() != self.family) {
            return domain(format!("grid cell {p:?} is not a {:?} cell", self.family));
        }
        Ok(())
    }
}

/// Parses `1000,29285` (Poisson), `31306:0.16,5040:0.03` (Binomial) or `0.5,0.1` (Geometric).
pub fn parse_grid(family: SamplerFamily, text: &str) -> Result<Vec<SamplerParams>> {
    let bad = |c: &str| Error::Parse(format!("bad grid cell `{c}`"));
    text.split(',')
        .map(str::trim)
        .filter(|c| !c.is_empty())
        .map(|c| {
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(c));
            match family {
                SamplerFamily::Poisson => Ok(SamplerParams::Poisson { mu: num(c)? }),
                SamplerFamily::Geometric => Ok(SamplerParams::Geometric { p: num(c)? }),
                SamplerFamily::Binomial => {
                    let (n, p) = c.split_once(':').ok_or_else(|| bad(c))?;
                    Ok(SamplerParams::Binomial { n: n.parse().map_err(|_| bad(c))?, p: num(p)? })
                }
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepOptions {
    pub epsilon: f64,
    pub eta: f64,
    pub delta: f64,
    pub seed: u64,
    /// Tester to run; `None` picks `toltest` for finite targets and `ertoltest` otherwise.
    pub mode: Option<Mode>,
    /// Record wall-clock seconds; off makes the output byte-reproducible.
    pub timing: bool,
    /// Worker threads; `None` uses the rayon default.
    pub threads: Option<usize>,
}

/// One CSV row: a single tester run on one (cell, variant).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub family: String,
    pub params: String,
    pub variant: u8,
    pub mode: Mode,
    pub decision: Decision,
    pub d_hat: Option<f64>,
    pub draws: u64,
    pub icond_calls: u64,
    pub seconds: f64,
    pub seed: u64,
}

impl Row {
    pub fn from_report(key: &SamplerKey, mode: Mode, r: &TestReport, seconds: f64) -> Self {
        Row {
            family: key.family_name().to_string(),
            params: key.params_label(),
            variant: key.variant,
            mode,
            decision: r.decision,
            d_hat: r.d_hat,
            draws: r.draws,
            icond_calls: r.icond_calls,
            seconds,
            seed: r.seed.unwrap_or(0),
        }
    }
}

fn target_of(p: &SamplerParams) -> Result<KnownDistribution> {
    match *p {
        SamplerParams::Geometric { p } => KnownDistribution::geometric(p),
        SamplerParams::Binomial { n, p } => KnownDistribution::binomial(n, p),
        SamplerParams::Poisson { mu } => KnownDistribution::poisson(mu),
    }
}

fn run_grid(spec: &SweepSpec, opts: &SweepOptions, default_mode: impl Fn(&KnownDistribution) -> Mode + Sync) -> Result<Vec<Row>> {
    spec.validate()?;
    let params = TestParams::new(opts.epsilon, opts.eta, opts.delta)?;
    let mut jobs = Vec::new();
    for cell in &spec.grid {
        for &variant in &spec.variants {
            for _ in 0..spec.per_cell_trials {
                jobs.push((SamplerKey { params: KeyParams::Builtin(*cell), variant }, jobs.len() as u64));
            }
        }
    }
    let run = |(key, index): &(SamplerKey, u64)| -> Result<Row> {
        let KeyParams::Builtin(cell) = &key.params else { unreachable!("sweeps use built-in samplers") };
        let target = target_of(cell)?;
        let mode = opts.mode.unwrap_or_else(|| default_mode(&target));
        let seed = derive_seed(opts.seed, *index);
        let mut sampler = key.build()?;
        let start = Instant::now();
        let mut report = run_tester(mode, &mut sampler, &target, &params, &mut ChaCha8Rng::seed_from_u64(seed))?;
        report.seed = Some(seed);
        let seconds = if opts.timing { start.elapsed().as_secs_f64() } else { 0.0 };
        Ok(Row::from_report(key, mode, &report, seconds))
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = opts.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Domain(e.to_string()))?;
    // indexed collect keeps grid order whatever the scheduling
    pool.install(|| jobs.par_iter().map(run).collect())
}

/// Case-study grid: every (cell, variant, trial) under the early-reject tester unless `opts.mode` says otherwise.
pub fn case_study(spec: &SweepSpec, opts: &SweepOptions) -> Result<Vec<Row>> {
    run_grid(spec, opts, |_| Mode::Ertoltest)
}

/// Query-count sweep: `toltest` on finite-support cells, `ertoltest` on the rest.
pub fn perf_sweep(spec: &SweepSpec, opts: &SweepOptions) -> Result<Vec<Row>> {
    run_grid(spec, opts, |q| if q.has_finite_support() { Mode::Toltest } else { Mode::Ertoltest })
}

/// Writes rows under [`CSV_HEADER`]; an absent `d_hat` is an empty field.
pub fn write_csv(rows: &[Row], out: &mut dyn Write) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in rows {
        w.serialize(r).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> SweepOptions {
        SweepOptions { epsilon: 0.05, eta: 0.9, delta: 0.2, seed: 5, mode: None, timing: false, threads: Some(1) }
    }

    #[test]
    fn grids_parse() {
        assert_eq!(
            parse_grid(SamplerFamily::Binomial, "31306:0.16, 5040:0.03").unwrap(),
            vec![SamplerParams::Binomial { n: 31306, p: 0.16 }, SamplerParams::Binomial { n: 5040, p: 0.03 }]
        );
        assert_eq!(parse_grid(SamplerFamily::Poisson, "1000").unwrap(), vec![SamplerParams::Poisson { mu: 1000.0 }]);
        assert!(parse_grid(SamplerFamily::Binomial, "31306").is_err());
        assert!(parse_grid(SamplerFamily::Poisson, "").unwrap().is_empty());
        assert_eq!(SweepSpec::case_study_default(SamplerFamily::Poisson).grid.len(), 6);
    }

    #[test]
    fn empty_grid_is_refused() {
        let spec = SweepSpec { family: SamplerFamily::Poisson, grid: vec![], variants: vec![1], per_cell_trials: 1 };
        assert!(matches!(case_study(&spec, &opts()), Err(Error::Domain(_))));
    }

    #[test]
    fn single_cell_gives_one_row_and_is_reproducible() {
        let spec = SweepSpec {
            family: SamplerFamily::Geometric,
            grid: vec![SamplerParams::Geometric { p: 0.5 }],
            variants: vec![1],
            per_cell_trials: 1,
        };
        let render = |threads| {
            let rows = perf_sweep(&spec, &SweepOptions { threads: Some(threads), ..opts() }).unwrap();
            let mut buf = Vec::new();
            write_csv(&rows, &mut buf).unwrap();
            String::from_utf8(buf).unwrap()
        };
        let text = render(1);
        assert_eq!(text, render(2));
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], CSV_HEADER.join(","));
        let fields: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(&fields[..4], &["geometric", "0.5", "1", "ertoltest"]);
        for f in &fields[5..] {
            assert!(f.parse::<f64>().is_ok_and(f64::is_finite), "{f}");
        }
    }
}
