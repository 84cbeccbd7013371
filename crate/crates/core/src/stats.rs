//! Goodness-of-fit helpers: one-sample KS and Pearson chi-square.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{domain, Result};

/// Minimum expected count per bin before bins are merged.
pub const MIN_EXPECTED: f64 = 5.0;

/// Sup distance between the empirical CDF of sorted `samples` and `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if samples.is_empty() {
        return domain("ks statistic of an empty sample");
    }
    if samples.windows(2).any(|w| w[0] > w[1]) {
        return domain("ks statistic expects sorted samples");
    }
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    Ok(d)
}

/// 99% critical value of the KS statistic for large `n`.
pub fn ks_critical_99(n: usize) -> f64 {
    1.63 / (n as f64).sqrt()
}

/// Pearson chi-square of `observed` against `expected` probabilities.
///
/// Adjacent bins are merged left to right until each has expected count at
/// least 5; a short remainder is folded into the last bin. Returns the
/// statistic and its degrees of freedom.
pub fn chi_square_stat(observed: &[u64], expected: &[f64]) -> Result<(f64, usize)> {
    if observed.len() != expected.len() || observed.is_empty() {
        return domain("observed and expected must have equal nonzero length");
    }
    let total_p: f64 = expected.iter().sum();
    if (total_p - 1.0).abs() > 1e-6 || expected.iter().any(|&p| p < 0.0) {
        return domain("expected probabilities must sum to 1");
    }
    let n: u64 = observed.iter().sum();
    if n == 0 {
        return domain("no observations");
    }
    let n = n as f64;
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (&ob, &p) in observed.iter().zip(expected) {
        o += ob as f64;
        e += p * n;
        if e >= MIN_EXPECTED {
            bins.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    if o > 0.0 || e > 0.0 {
        match bins.last_mut() {
            Some(last) => {
                last.0 += o;
                last.1 += e;
            }
            None => bins.push((o, e)),
        }
    }
    if bins.len() < 2 {
        return domain("degenerate binning: fewer than two bins after merging");
    }
    let stat = bins
        .iter()
        .map(|&(o, e)| if e > 0.0 { (o - e) * (o - e) / e } else if o > 0.0 { f64::INFINITY } else { 0.0 })
        .sum();
    Ok((stat, bins.len() - 1))
}

/// Chi-square homogeneity statistic for two count vectors over the same bins.
///
/// Bins whose pooled count is below 10 are merged with their right neighbour.
pub fn two_sample_chi_square(a: &[u64], b: &[u64]) -> Result<(f64, usize)> {
    if a.len() != b.len() || a.is_empty() {
        return domain("count vectors must have equal nonzero length");
    }
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    if na == 0 || nb == 0 {
        return domain("empty sample");
    }
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut x, mut y) = (0.0, 0.0);
    for (&ca, &cb) in a.iter().zip(b) {
        x += ca as f64;
        y += cb as f64;
        if x + y >= 10.0 {
            bins.push((x, y));
            x = 0.0;
            y = 0.0;
        }
    }
    if x + y > 0.0 {
        match bins.last_mut() {
            Some(last) => {
                last.0 += x;
                last.1 += y;
            }
            None => bins.push((x, y)),
        }
    }
    if bins.len() < 2 {
        return Ok((0.0, 0));
    }
    let ka = (nb as f64 / na as f64).sqrt();
    let kb = (na as f64 / nb as f64).sqrt();
    let stat = bins.iter().map(|&(x, y)| (ka * x - kb * y).powi(2) / (x + y)).sum();
    Ok((stat, bins.len() - 1))
}

/// Upper `level` quantile of the chi-square law with `df` degrees of freedom.
pub fn chi_square_critical(df: usize, level: f64) -> f64 {
    if df == 0 {
        return f64::INFINITY;
    }
    ChiSquared::new(df as f64).expect("positive df").inverse_cdf(level)
}

/// Whether `(stat, df)` passes a chi-square test at the given level.
pub fn chi_square_passes(result: (f64, usize), level: f64) -> bool {
    result.0 <= chi_square_critical(result.1, level)
}
