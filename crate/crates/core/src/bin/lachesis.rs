use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::mpsc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use lachesis::harness::{
    case_study, estimate, parse_grid, perf_sweep, resolve_seed, run_test, validate, write_csv, write_summary,
    OutputFormat, RunConfig, SweepOptions, SweepSpec,
};
use lachesis::sampler::{SamplerFamily, SamplerKey, SamplerParams};
use lachesis::testers::{Decision, Mode};
use lachesis::Error;

#[derive(Parser)]
#[command(name = "lachesis", version, about = "Test black-box discrete samplers against known distributions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Abort with exit code 3 after this many seconds.
    #[arg(long, global = true)]
    max_seconds: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a tester on one sampler.
    Test(TestArgs),
    /// Decision grid over parameter cells and sampler variants.
    CaseStudy(SweepArgs),
    /// Query counts across parameter cells.
    Perf(SweepArgs),
    /// Estimate the sampler's mass at one point.
    Estimate(EstimateArgs),
    /// Chi-square checks of plain and conditioned draws.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    #[arg(long, default_value_t = 0.5)]
    eta: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// Master seed; falls back to LACHESIS_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct TestArgs {
    /// toltest or ertoltest.
    #[arg(long, default_value = "ertoltest")]
    mode: String,
    /// Registry key, e.g. poisson:29285:v4 or binomial:31306:0.16.
    #[arg(long)]
    sampler: String,
    /// Target spec; defaults to the sampler's own family and parameters.
    #[arg(long)]
    target: Option<String>,
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 1)]
    trials: u32,
    /// json, csv or human.
    #[arg(long, default_value = "human")]
    format: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// binomial, poisson or geometric.
    #[arg(long)]
    family: String,
    /// Cells such as `1000,29285` or `31306:0.16,5040:0.03`; defaults depend on the command.
    #[arg(long)]
    grid: Option<String>,
    /// Variant ids, e.g. `1-6` or `1,4`.
    #[arg(long)]
    variants: Option<String>,
    #[arg(long, default_value_t = 1)]
    trials: u32,
    /// Force toltest or ertoltest.
    #[arg(long)]
    mode: Option<String>,
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write 0 in the seconds column so output is byte-reproducible.
    #[arg(long)]
    no_timing: bool,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    sampler: String,
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    x: i64,
    #[arg(long, default_value_t = 0.2)]
    zeta: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    sampler: String,
    #[arg(long)]
    target: Option<String>,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "human")]
    format: String,
}

/// Failure with its exit code.
struct Fail(u8, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io(_) | Error::Runaway { .. } | Error::DegenerateInterval { .. } => 1,
            Error::Domain(_) | Error::Parse(_) | Error::UnsupportedMode(_) => 2,
        };
        Fail(code, e.to_string())
    }
}

impl From<io::Error> for Fail {
    fn from(e: io::Error) -> Self {
        Fail(1, e.to_string())
    }
}

fn target_for(sampler: &str, target: Option<String>) -> Result<String, Fail> {
    if let Some(t) = target {
        return Ok(t);
    }
    let key = SamplerKey::parse(sampler)?;
    Ok(match key.family_name() {
        "exact" => key.params_label(),
        family => format!("{family}:{}", key.params_label()),
    })
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>, Fail> {
    Ok(match out {
        Some(p) => Box::new(File::create(p).map_err(|e| Fail(1, format!("{}: {e}", p.display())))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn parse_family(s: &str) -> Result<SamplerFamily, Fail> {
    match s {
        "binomial" => Ok(SamplerFamily::Binomial),
        "poisson" => Ok(SamplerFamily::Poisson),
        "geometric" => Ok(SamplerFamily::Geometric),
        _ => Err(Fail(2, format!("unknown family `{s}` (binomial, poisson, geometric)"))),
    }
}

fn parse_variants(s: &str) -> Result<Vec<u8>, Fail> {
    let bad = || Fail(2, format!("bad variant list `{s}`"));
    let mut out = Vec::new();
    for part in s.split(',') {
        match part.split_once('-') {
            Some((a, b)) => out.extend(a.trim().parse::<u8>().map_err(|_| bad())?..=b.trim().parse::<u8>().map_err(|_| bad())?),
            None => out.push(part.trim().parse().map_err(|_| bad())?),
        }
    }
    Ok(out)
}

fn perf_default(family: SamplerFamily) -> Vec<SamplerParams> {
    match family {
        SamplerFamily::Binomial => [1_000, 10_000, 100_000].map(|n| SamplerParams::Binomial { n, p: 0.3 }).to_vec(),
        SamplerFamily::Poisson => [100.0, 10_000.0].map(|mu| SamplerParams::Poisson { mu }).to_vec(),
        SamplerFamily::Geometric => [0.5, 0.05].map(|p| SamplerParams::Geometric { p }).to_vec(),
    }
}

fn sweep(args: SweepArgs, perf: bool) -> Result<u8, Fail> {
    let family = parse_family(&args.family)?;
    let mut spec = SweepSpec::case_study_default(family);
    if perf {
        spec.grid = perf_default(family);
        spec.variants = vec![1];
    }
    if let Some(g) = &args.grid {
        spec.grid = parse_grid(family, g)?;
    }
    if let Some(v) = &args.variants {
        spec.variants = parse_variants(v)?;
    }
    spec.per_cell_trials = args.trials;
    let opts = SweepOptions {
        epsilon: args.common.eps,
        eta: args.common.eta,
        delta: args.common.delta,
        seed: resolve_seed(args.common.seed)?,
        mode: args.mode.as_deref().map(str::parse::<Mode>).transpose()?,
        timing: !args.no_timing,
        threads: args.threads,
    };
    let rows = if perf { perf_sweep(&spec, &opts)? } else { case_study(&spec, &opts)? };
    write_csv(&rows, &mut *sink(&args.out)?)?;
    Ok(0)
}

fn run(command: Command) -> Result<u8, Fail> {
    match command {
        Command::Test(a) => {
            let cfg = RunConfig {
                mode: a.mode.parse()?,
                target: target_for(&a.sampler, a.target)?,
                sampler_key: a.sampler,
                epsilon: a.common.eps,
                eta: a.common.eta,
                delta: a.common.delta,
                seed: resolve_seed(a.common.seed)?,
                trials: a.trials,
                format: a.format.parse()?,
            };
            let summary = run_test(&cfg)?;
            write_summary(&summary, cfg.format, &mut *sink(&a.out)?)?;
            Ok(if summary.decision == Decision::Accept { 0 } else { 1 })
        }
        Command::CaseStudy(a) => sweep(a, false),
        Command::Perf(a) => sweep(a, true),
        Command::Estimate(a) => {
            let target = target_for(&a.sampler, a.target)?;
            let seed = resolve_seed(a.common.seed)?;
            let r = estimate(&a.sampler, &target, a.x, a.zeta, a.common.eps, a.common.delta, seed)?;
            println!("{}", serde_json::to_string_pretty(&r).map_err(|e| Fail(1, e.to_string()))?);
            Ok(0)
        }
        Command::Validate(a) => {
            let format: OutputFormat = a.format.parse()?;
            let target = target_for(&a.sampler, a.target)?;
            let r = validate(&a.sampler, &target, a.samples, resolve_seed(a.seed)?)?;
            if format == OutputFormat::Human {
                for c in &r.checks {
                    let verdict = if c.passed { "pass" } else { "FAIL" };
                    println!("{verdict}  {}  chi2 {:.2} on {} df (critical {:.2})", c.name, c.statistic, c.df, c.critical);
                }
            } else {
                println!("{}", serde_json::to_string_pretty(&r).map_err(|e| Fail(1, e.to_string()))?);
            }
            Ok(if r.passed() { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        let _ = tx.send(run(cli.command));
    });
    let outcome = match cli.max_seconds {
        Some(s) => match rx.recv_timeout(Duration::from_secs_f64(s.max(0.0))) {
            Ok(r) => r,
            Err(_) => {
                eprintln!("lachesis: time budget of {s} s exceeded");
                // the worker cannot be cancelled, so leave without joining it
                std::process::exit(3);
            }
        },
        None => rx.recv().unwrap_or_else(|_| Err(Fail(1, "worker thread panicked".into()))),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(Fail(code, msg)) => {
            eprintln!("lachesis: {msg}");
            ExitCode::from(code)
        }
    }
}
