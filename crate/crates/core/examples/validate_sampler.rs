//! Goodness-of-fit self-checks of a sampler's plain and conditioned draws.

use lachesis::harness::validate;

fn main() -> lachesis::Result<()> {
    for (sampler, target) in [
        ("binomial:31306:0.16", "binomial:31306:0.16"),
        ("binomial:31306:0.16:v2", "binomial:31306:0.16"),
        ("poisson:1000:v5", "poisson:1000"),
    ] {
        let report = validate(sampler, target, 100_000, 8)?;
        println!("{sampler} against {target}: {}", if report.passed() { "pass" } else { "FAIL" });
        for c in &report.checks {
            println!("  {:<36} chi2 {:>10.2}  df {:>4}  critical {:>8.2}  {}", c.name, c.statistic, c.df, c.critical, c.passed);
        }
    }
    Ok(())
}
