//! Exact target distributions, the triangular noise and the convolved model.

use std::path::Path;
use std::sync::OnceLock;

use rand::{Rng, RngCore};
use serde::Serialize;
use statrs::distribution::{Binomial as StatBinomial, DiscreteCDF, Poisson as StatPoisson};
use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Error, Result};

/// Probabilities below this are reported as exactly zero.
pub const MASS_FLOOR: f64 = 1e-300;
/// Tail mass allowed outside the effective support window.
pub const TAIL_MASS: f64 = 1e-12;
/// Slack on total mass accepted when normalizing a table.
pub const NORMALIZATION_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Family {
    UniformOverSet,
    Geometric,
    Binomial,
    Poisson,
    ExplicitTable,
}

/// A normalized probability table on a contiguous integer window.
#[derive(Clone, Debug, PartialEq)]
pub struct ExplicitTable {
    offset: i64,
    probs: Vec<f64>,
}

impl ExplicitTable {
    /// Builds a table from `(index, probability)` pairs; repeated indices are an error.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (i64, f64)>) -> Result<Self> {
        let mut pairs: Vec<(i64, f64)> = pairs.into_iter().collect();
        if pairs.is_empty() {
            return domain("empty probability table");
        }
        pairs.sort_by_key(|&(i, _)| i);
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Parse("repeated index in probability table".into()));
        }
        let offset = pairs[0].0;
        let span = pairs[pairs.len() - 1].0 - offset;
        if span > 50_000_000 {
            return domain("probability table spans too many indices");
        }
        let mut probs = vec![0.0; span as usize + 1];
        for (i, p) in pairs {
            probs[(i - offset) as usize] = p;
        }
        Self::from_dense(offset, probs)
    }

    /// Builds a table whose entry `j` is the probability of `offset + j`.
    pub fn from_dense(offset: i64, mut probs: Vec<f64>) -> Result<Self> {
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return domain("probabilities must be finite and nonnegative");
        }
        let total = kahan_sum(probs.iter().copied());
        if (total - 1.0).abs() > NORMALIZATION_SLACK {
            return domain(format!("table mass {total} is not within 1e-9 of 1"));
        }
        for p in probs.iter_mut() {
            *p /= total;
        }
        let first = probs.iter().position(|&p| p > 0.0).unwrap_or(0);
        let last = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        let probs = probs[first..=last].to_vec();
        Ok(ExplicitTable { offset: offset + first as i64, probs })
    }

    /// Parses "index probability" lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let bad = || Error::Parse(format!("line {}: expected `index probability`", lineno + 1));
            let idx: i64 = fields.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let p: f64 = fields.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            if fields.next().is_some() {
                return Err(bad());
            }
            pairs.push((idx, p));
        }
        Self::from_pairs(pairs)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Smallest and largest index with positive mass.
    pub fn range(&self) -> (i64, i64) {
        (self.offset, self.offset + self.probs.len() as i64 - 1)
    }

    pub fn prob(&self, x: i64) -> f64 {
        if x < self.offset {
            return 0.0;
        }
        self.probs.get((x - self.offset) as usize).copied().unwrap_or(0.0)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.probs.iter().enumerate().map(move |(j, &p)| (self.offset + j as i64, p))
    }

    /// The fair mixture `(self + other) / 2`.
    pub fn mix(&self, other: &ExplicitTable) -> ExplicitTable {
        let lo = self.offset.min(other.offset);
        let hi = self.range().1.max(other.range().1);
        let probs = (lo..=hi).map(|x| 0.5 * (self.prob(x) + other.prob(x))).collect();
        ExplicitTable { offset: lo, probs }
    }
}

/// Total variation distance between two normalized tables.
pub fn tv_distance_exact(p: &ExplicitTable, q: &ExplicitTable) -> Result<f64> {
    for t in [p, q] {
        let total = kahan_sum(t.probs.iter().copied());
        if (total - 1.0).abs() > NORMALIZATION_SLACK {
            return domain("tv distance needs normalized tables");
        }
    }
    let lo = p.offset.min(q.offset);
    let hi = p.range().1.max(q.range().1);
    Ok(0.5 * kahan_sum((lo..=hi).map(|x| (p.prob(x) - q.prob(x)).abs())))
}

pub(crate) fn kahan_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

#[derive(Clone, Debug)]
enum Kind {
    Uniform(Vec<i64>),
    Geometric { p: f64 },
    Binomial { n: u64, p: f64 },
    Poisson { mu: f64 },
    Table(ExplicitTable),
}

/// A target distribution whose pmf, CDF and tilt can be evaluated exactly.
#[derive(Clone, Debug)]
pub struct KnownDistribution {
    kind: Kind,
    window: (i64, i64),
    cumulative: OnceLock<Vec<f64>>,
}

impl KnownDistribution {
    fn with_kind(kind: Kind) -> Self {
        let mut d = KnownDistribution { kind, window: (0, 0), cumulative: OnceLock::new() };
        d.window = d.compute_window();
        d
    }

    /// Uniform over an arbitrary finite set of integers.
    pub fn uniform_set(members: impl IntoIterator<Item = i64>) -> Result<Self> {
        let mut members: Vec<i64> = members.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        if members.is_empty() {
            return domain("uniform over an empty set");
        }
        Ok(Self::with_kind(Kind::Uniform(members)))
    }

    /// Uniform over `lo..=hi`.
    pub fn uniform_range(lo: i64, hi: i64) -> Result<Self> {
        if lo > hi {
            return domain("uniform range with lo > hi");
        }
        Self::uniform_set(lo..=hi)
    }

    /// Geometric on `{1, 2, ...}` with success probability `p`.
    pub fn geometric(p: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return domain("geometric needs p in (0, 1]");
        }
        Ok(Self::with_kind(Kind::Geometric { p }))
    }

    pub fn binomial(n: u64, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) || n == 0 || n > i64::MAX as u64 / 2 {
            return domain("binomial needs n >= 1 and p in [0, 1]");
        }
        Ok(Self::with_kind(Kind::Binomial { n, p }))
    }

    pub fn poisson(mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite() && mu < 1e12) {
            return domain("poisson needs a finite mean mu > 0");
        }
        Ok(Self::with_kind(Kind::Poisson { mu }))
    }

    pub fn table(table: ExplicitTable) -> Self {
        Self::with_kind(Kind::Table(table))
    }

    /// Parses `uniform:lo:hi`, `geometric:p`, `binomial:n:p`, `poisson:mu` or `table:path`.
    pub fn parse_spec(spec: &str) -> Result<Self> {
        let (head, rest) = spec.split_once(':').unwrap_or((spec, ""));
        let fields: Vec<&str> = rest.split(':').collect();
        let bad = || Error::Parse(format!("bad target spec `{spec}`"));
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
        let int = |s: &str| s.parse::<i64>().map_err(|_| bad());
        match (head, fields.as_slice()) {
            ("uniform", [lo, hi]) => Self::uniform_range(int(lo)?, int(hi)?),
            ("geometric", [p]) => Self::geometric(num(p)?),
            ("binomial", [n, p]) => Self::binomial(n.parse().map_err(|_| bad())?, num(p)?),
            ("poisson", [mu]) => Self::poisson(num(mu)?),
            ("table", _) if !rest.is_empty() => Ok(Self::table(ExplicitTable::load(rest)?)),
            _ => Err(bad()),
        }
    }

    pub fn family(&self) -> Family {
        match self.kind {
            Kind::Uniform(_) => Family::UniformOverSet,
            Kind::Geometric { .. } => Family::Geometric,
            Kind::Binomial { .. } => Family::Binomial,
            Kind::Poisson { .. } => Family::Poisson,
            Kind::Table(_) => Family::ExplicitTable,
        }
    }

    /// Short human label such as `poisson(1000)`.
    pub fn label(&self) -> String {
        match &self.kind {
            Kind::Uniform(m) => format!("uniform(|S|={})", m.len()),
            Kind::Geometric { p } => format!("geometric({p})"),
            Kind::Binomial { n, p } => format!("binomial({n},{p})"),
            Kind::Poisson { mu } => format!("poisson({mu})"),
            Kind::Table(t) => format!("table[{}..{}]", t.range().0, t.range().1),
        }
    }

    /// Whether the pmf is log-concave, so tilt has a two-neighbour closed form.
    pub fn is_log_concave(&self) -> bool {
        matches!(self.kind, Kind::Geometric { .. } | Kind::Binomial { .. } | Kind::Poisson { .. })
    }

    /// Support bounds; `None` for an unbounded upper end.
    pub fn support(&self) -> (i64, Option<i64>) {
        match &self.kind {
            Kind::Uniform(m) => (m[0], Some(m[m.len() - 1])),
            Kind::Geometric { p } if *p >= 1.0 => (1, Some(1)),
            Kind::Geometric { .. } => (1, None),
            Kind::Binomial { p, .. } if *p == 0.0 => (0, Some(0)),
            Kind::Binomial { n, p } if *p == 1.0 => (*n as i64, Some(*n as i64)),
            Kind::Binomial { n, .. } => (0, Some(*n as i64)),
            Kind::Poisson { .. } => (0, None),
            Kind::Table(t) => (t.range().0, Some(t.range().1)),
        }
    }

    pub fn has_finite_support(&self) -> bool {
        self.support().1.is_some()
    }

    /// Smallest window starting at the support's lower end holding mass at least `1 - 1e-12`.
    pub fn effective_support(&self) -> (i64, i64) {
        self.window
    }

    fn compute_window(&self) -> (i64, i64) {
        let (lo, hi) = self.support();
        if let Some(hi) = hi {
            return (lo, hi);
        }
        match self.kind {
            Kind::Geometric { p } => {
                let hi = (TAIL_MASS.ln() / (-p).ln_1p()).ceil().max(1.0) as i64;
                (1, hi)
            }
            Kind::Poisson { mu } => {
                let dist = StatPoisson::new(mu).expect("validated mean");
                let mut a = mu.floor() as u64;
                let mut b = (mu + 20.0 * mu.sqrt() + 60.0).ceil() as u64;
                while dist.sf(b) > TAIL_MASS {
                    b *= 2;
                }
                while a < b {
                    let m = a + (b - a) / 2;
                    if dist.sf(m) <= TAIL_MASS {
                        b = m;
                    } else {
                        a = m + 1;
                    }
                }
                (0, a as i64)
            }
            _ => unreachable!("finite families return early"),
        }
    }

    /// Natural log of the pmf; `-inf` outside the support.
    pub fn ln_pmf(&self, x: i64) -> f64 {
        match &self.kind {
            Kind::Uniform(m) => {
                if m.binary_search(&x).is_ok() {
                    -(m.len() as f64).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Kind::Geometric { p } => {
                if x < 1 {
                    f64::NEG_INFINITY
                } else if *p >= 1.0 {
                    if x == 1 { 0.0 } else { f64::NEG_INFINITY }
                } else {
                    (x - 1) as f64 * (-p).ln_1p() + p.ln()
                }
            }
            Kind::Binomial { n, p } => {
                let n = *n as i64;
                if x < 0 || x > n {
                    return f64::NEG_INFINITY;
                }
                if *p == 0.0 {
                    return if x == 0 { 0.0 } else { f64::NEG_INFINITY };
                }
                if *p == 1.0 {
                    return if x == n { 0.0 } else { f64::NEG_INFINITY };
                }
                ln_choose(n, x) + x as f64 * p.ln() + (n - x) as f64 * (-p).ln_1p()
            }
            Kind::Poisson { mu } => {
                if x < 0 {
                    f64::NEG_INFINITY
                } else {
                    x as f64 * mu.ln() - mu - ln_gamma(x as f64 + 1.0)
                }
            }
            Kind::Table(t) => t.prob(x).ln(),
        }
    }

    /// Q(x), with values below `1e-300` reported as 0.
    pub fn pmf(&self, x: i64) -> f64 {
        let v = self.ln_pmf(x).exp();
        if v < MASS_FLOOR {
            0.0
        } else {
            v
        }
    }

    /// P(X <= x).
    pub fn cdf(&self, x: i64) -> f64 {
        let (lo, hi) = self.support();
        if x < lo {
            return 0.0;
        }
        if hi.is_some_and(|h| x >= h) {
            return 1.0;
        }
        match &self.kind {
            Kind::Uniform(m) => m.partition_point(|&y| y <= x) as f64 / m.len() as f64,
            Kind::Geometric { p } => -(x as f64 * (-p).ln_1p()).exp_m1(),
            Kind::Binomial { n, p } => StatBinomial::new(*p, *n).expect("validated").cdf(x as u64),
            Kind::Poisson { mu } => StatPoisson::new(*mu).expect("validated").cdf(x as u64),
            Kind::Table(_) => self.cumulative()[(x - self.window.0) as usize].min(1.0),
        }
    }

    /// P(X > x).
    pub fn sf(&self, x: i64) -> f64 {
        let (lo, hi) = self.support();
        if x < lo {
            return 1.0;
        }
        if hi.is_some_and(|h| x >= h) {
            return 0.0;
        }
        match &self.kind {
            Kind::Geometric { p } => (x as f64 * (-p).ln_1p()).exp(),
            Kind::Binomial { n, p } => StatBinomial::new(*p, *n).expect("validated").sf(x as u64),
            Kind::Poisson { mu } => StatPoisson::new(*mu).expect("validated").sf(x as u64),
            _ => (1.0 - self.cdf(x)).max(0.0),
        }
    }

    /// Q([a, b]).
    pub fn interval_mass(&self, a: i64, b: i64) -> Result<f64> {
        if a > b {
            return domain(format!("interval [{a}, {b}] has a > b"));
        }
        let (lo, hi) = self.support();
        let a = a.max(lo);
        let b = hi.map_or(b, |h| b.min(h));
        if a > b {
            return Ok(0.0);
        }
        if a == b {
            return Ok(self.pmf(a));
        }
        let lower = self.cdf(a - 1);
        let mass = if lower > 0.5 { self.sf(a - 1) - self.sf(b) } else { self.cdf(b) - lower };
        Ok(mass.clamp(0.0, 1.0))
    }

    /// Smallest positive point mass, in log space; `None` for unbounded support.
    pub fn ln_min_mass(&self) -> Option<f64> {
        let (lo, hi) = self.support();
        let hi = hi?;
        Some(match &self.kind {
            Kind::Table(t) => {
                t.probs.iter().filter(|&&p| p > 0.0).fold(f64::INFINITY, |m, &p| m.min(p)).ln()
            }
            Kind::Uniform(m) => -(m.len() as f64).ln(),
            // log-concave: the minimum sits at an end of the support
            _ => self.ln_pmf(lo).min(self.ln_pmf(hi)),
        })
    }

    /// Worst ratio of one point's mass to the mass between it and `x`.
    pub fn tilt(&self, x: i64) -> Result<f64> {
        if self.pmf(x) <= 0.0 {
            return domain(format!("tilt undefined at zero-mass point {x}"));
        }
        match &self.kind {
            Kind::Uniform(m) => Ok(if m.len() > 1 { 1.0 } else { 0.0 }),
            Kind::Table(t) => Ok(tilt_scan(&t.probs, (x - t.offset) as usize)),
            _ => {
                let here = self.ln_pmf(x);
                let left = (self.ln_pmf(x - 1) - here).exp();
                let right = (self.ln_pmf(x + 1) - here).exp();
                Ok(left.max(right))
            }
        }
    }

    /// Materializes the pmf over the effective support window.
    pub fn to_table(&self) -> ExplicitTable {
        let (lo, hi) = self.window;
        let probs: Vec<f64> = (lo..=hi).map(|x| self.pmf(x)).collect();
        let total = kahan_sum(probs.iter().copied());
        ExplicitTable::from_dense(lo, probs.into_iter().map(|p| p / total).collect())
            .expect("window carries the mass")
    }

    fn cumulative(&self) -> &[f64] {
        self.cumulative.get_or_init(|| {
            let (lo, hi) = self.window;
            let mut acc = 0.0;
            let mut c = 0.0;
            (lo..=hi)
                .map(|x| {
                    let y = self.pmf(x) - c;
                    let t = acc + y;
                    c = (t - acc) - y;
                    acc = t;
                    acc
                })
                .collect()
        })
    }

    /// Exact draw from Q restricted to `[a, b]` (within the effective window).
    pub fn sample_between(&self, a: i64, b: i64, rng: &mut dyn RngCore) -> Result<i64> {
        let (lo, hi) = self.window;
        let a2 = a.max(lo);
        let b2 = b.min(hi);
        if a2 > b2 {
            return Err(Error::DegenerateInterval { lo: a, hi: b });
        }
        let cum = self.cumulative();
        let i = (a2 - lo) as usize;
        let j = (b2 - lo) as usize;
        let base = if i == 0 { 0.0 } else { cum[i - 1] };
        let mass = cum[j] - base;
        if !(mass > 0.0) {
            return Err(Error::DegenerateInterval { lo: a, hi: b });
        }
        let target = base + mass * rng.random::<f64>();
        let k = i + cum[i..=j].partition_point(|&c| c <= target);
        Ok(lo + k.min(j) as i64)
    }

    /// Exact unconditional draw from Q.
    pub fn sample(&self, rng: &mut dyn RngCore) -> i64 {
        let (lo, hi) = self.window;
        self.sample_between(lo, hi, rng).expect("window has mass")
    }
}

fn ln_choose(n: i64, k: i64) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Tilt at index `i` of a pmf slice by scanning every other index.
pub fn tilt_scan(probs: &[f64], i: usize) -> f64 {
    let mut prefix = Vec::with_capacity(probs.len() + 1);
    prefix.push(0.0);
    for &p in probs {
        prefix.push(prefix[prefix.len() - 1] + p);
    }
    let mut best: f64 = 0.0;
    for (y, &py) in probs.iter().enumerate() {
        if py <= 0.0 || y == i {
            continue;
        }
        // mass strictly between y and i, plus i itself
        let between = if y < i { prefix[i + 1] - prefix[y + 1] } else { prefix[y] - prefix[i] };
        best = best.max(py / between);
    }
    best
}

/// The triangular density on [-1/2, 1/2] peaking at 0.
#[derive(Clone, Copy, Debug, Default)]
pub struct TriangularNoise;

impl TriangularNoise {
    pub fn pdf(x: f64) -> f64 {
        if !(-0.5..=0.5).contains(&x) {
            0.0
        } else if x <= 0.0 {
            4.0 * x + 2.0
        } else {
            -4.0 * x + 2.0
        }
    }

    pub fn cdf(x: f64) -> f64 {
        if x <= -0.5 {
            0.0
        } else if x <= 0.0 {
            2.0 * (x + 0.5) * (x + 0.5)
        } else if x < 0.5 {
            1.0 - 2.0 * (0.5 - x) * (0.5 - x)
        } else {
            1.0
        }
    }

    pub fn inverse_cdf(u: f64) -> f64 {
        if u < 0.5 {
            -0.5 + (u / 2.0).sqrt()
        } else {
            0.5 - ((1.0 - u) / 2.0).sqrt()
        }
    }

    pub fn sample(rng: &mut dyn RngCore) -> f64 {
        Self::inverse_cdf(rng.random::<f64>())
    }
}

/// Nearest integer with ties rounded up.
pub fn round_half_up(x: f64) -> i64 {
    (x + 0.5).floor() as i64
}

/// A discrete law convolved with triangular noise.
#[derive(Clone, Debug)]
pub struct ConvolvedModel {
    pub base: ExplicitTable,
}

impl ConvolvedModel {
    pub fn new(base: ExplicitTable) -> Self {
        ConvolvedModel { base }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let c = round_half_up(x);
        let (lo, hi) = self.base.range();
        let below = kahan_sum((lo..c.min(hi + 1)).map(|i| self.base.prob(i)));
        (below + self.base.prob(c) * TriangularNoise::cdf(x - c as f64)).min(1.0)
    }

    /// Mass of the real interval [u, v].
    pub fn mass(&self, u: f64, v: f64) -> f64 {
        (self.cdf(v) - self.cdf(u)).max(0.0)
    }
}

/// CDF of P*Tri at `x`, via the nearest-integer decomposition.
pub fn convolved_cdf(model: &ConvolvedModel, x: f64) -> f64 {
    model.cdf(x)
}

/// Sample from the triangular density using one uniform from `rng`.
pub fn sample_triangular(rng: &mut dyn RngCore) -> f64 {
    TriangularNoise::sample(rng)
}
