use rand::RngCore;
use statrs::function::gamma::ln_gamma;

use super::law::RejectionLaw;
use super::transform::{icond_inverse_transform, HatMap, InverseTransform};
use super::{QueryLedger, SamplerOracle, Support, DRAW_CAP, ICOND_CAP};
use crate::error::{domain, Error, Result};

/// Tunable constants of the transformed-rejection binomial sampler.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BtrsConstants {
    /// `b = b_offset + b_scale * spq`
    pub b_offset: f64,
    pub b_scale: f64,
    /// `a = a_offset + a_slope * b + a_p * p`
    pub a_offset: f64,
    pub a_slope: f64,
    pub a_p: f64,
    /// `c = n p + c_offset`
    pub c_offset: f64,
    /// The `n == 1` branch compares `uniform(-0.5, 0.5) < p` instead of `uniform(0, 1) < p`.
    pub centered_bernoulli: bool,
}

impl Default for BtrsConstants {
    fn default() -> Self {
        BtrsConstants {
            b_offset: 1.15,
            b_scale: 2.53,
            a_offset: -0.0873,
            a_slope: 0.0248,
            a_p: 0.01,
            c_offset: 0.5,
            centered_bernoulli: false,
        }
    }
}

/// Binomial sampler by transformed rejection with squeeze.
#[derive(Clone, Debug)]
pub struct BinomialSampler {
    n: i64,
    p: f64,
    consts: BtrsConstants,
    spq: f64,
    hat: HatMap,
    vr: f64,
    alpha: f64,
    lpq: f64,
    m: f64,
    h: f64,
    ledger: QueryLedger,
}

impl BinomialSampler {
    pub fn new(n: u64, p: f64) -> Result<Self> {
        Self::with_constants(n, p, BtrsConstants::default())
    }

    pub fn with_constants(n: u64, p: f64, consts: BtrsConstants) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) || n == 0 || n > (1 << 52) {
            return domain("binomial sampler needs n >= 1 and p in [0, 1]");
        }
        let nf = n as f64;
        let spq = (nf * p * (1.0 - p)).sqrt();
        let b = consts.b_offset + consts.b_scale * spq;
        let a = consts.a_offset + consts.a_slope * b + consts.a_p * p;
        let c = nf * p + consts.c_offset;
        let vr = 0.92 - 4.2 / b;
        let alpha = (2.83 + 5.1 / b) * spq;
        let lpq = (p / (1.0 - p)).ln();
        let m = ((nf + 1.0) * p).floor();
        let h = ln_gamma(m + 1.0) + ln_gamma(nf - m + 1.0);
        Ok(BinomialSampler {
            n: n as i64,
            p,
            consts,
            spq,
            hat: HatMap { a, b, c },
            vr,
            alpha,
            lpq,
            m,
            h,
            ledger: QueryLedger::default(),
        })
    }

    pub fn constants(&self) -> &BtrsConstants {
        &self.consts
    }

    pub fn hat(&self) -> HatMap {
        self.hat
    }

    pub fn n(&self) -> i64 {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Whether the sampler bypasses the transformed-rejection loop.
    fn is_special(&self) -> bool {
        self.p == 0.0 || self.p == 1.0 || self.n == 1
    }

    fn log_ratio(&self, k: i64) -> f64 {
        let k = k as f64;
        self.h - ln_gamma(k + 1.0) - ln_gamma(self.n as f64 - k + 1.0) + (k - self.m) * self.lpq
    }

    /// The second-stage test after a proposal `k` from uniform `u` with us = 1/2 - |u|.
    fn accept_with(&self, k: i64, us: f64, v: f64) -> bool {
        if us >= 0.07 && v <= self.vr {
            return true;
        }
        let v = v * self.alpha / (self.hat.a / (us * us) + self.hat.b);
        v.ln() <= self.log_ratio(k)
    }

    fn special_draw(&mut self, rng: &mut dyn RngCore, u: f64) -> i64 {
        if self.p == 0.0 {
            0
        } else if self.p == 1.0 {
            self.n
        } else if self.consts.centered_bernoulli {
            (self.ledger.uniform(rng) - 0.5 < self.p) as i64
        } else {
            (u < self.p) as i64
        }
    }
}

impl InverseTransform for BinomialSampler {
    fn proposal_range(&self) -> (f64, f64) {
        (-0.5, 0.5)
    }

    fn transform(&self, u: f64) -> i64 {
        self.hat.eval(u).floor() as i64
    }

    fn hat_preimage(&self, a: i64, b: i64) -> Vec<(f64, f64)> {
        let (a, b) = (a.max(0), b.min(self.n));
        if a > b {
            return Vec::new();
        }
        self.hat.preimage(a as f64, b as f64 + 1.0)
    }

    fn accept(&self, k: i64, u: f64, rng: &mut dyn RngCore, ledger: &mut QueryLedger) -> bool {
        let v = ledger.uniform(rng);
        self.accept_with(k, 0.5 - u.abs(), v)
    }

    fn output_support(&self) -> Support {
        Support { lo: 0, hi: Some(self.n) }
    }
}

impl SamplerOracle for BinomialSampler {
    fn draw(&mut self, rng: &mut dyn RngCore) -> Result<i64> {
        self.ledger.draws += 1;
        let u = if self.consts.centered_bernoulli { 0.0 } else { self.ledger.uniform(rng) };
        if self.is_special() {
            return Ok(self.special_draw(rng, u));
        }
        for _ in 0..DRAW_CAP {
            let uu = self.ledger.uniform(rng) - 0.5;
            let us = 0.5 - uu.abs();
            let k = self.transform(uu);
            if k < 0 || k > self.n {
                continue;
            }
            let v = self.ledger.uniform(rng);
            if self.accept_with(k, us, v) {
                return Ok(k);
            }
        }
        Err(Error::Runaway { cap: DRAW_CAP })
    }

    fn icond(&mut self, rng: &mut dyn RngCore, a: i64, b: i64) -> Result<i64> {
        self.ledger.icond_calls += 1;
        if a > b {
            return domain(format!("icond on [{a}, {b}] with a > b"));
        }
        if self.is_special() {
            // degenerate laws: condition by plain rejection
            for _ in 0..ICOND_CAP {
                let u = if self.consts.centered_bernoulli { 0.0 } else { self.ledger.uniform(rng) };
                let x = self.special_draw(rng, u);
                if (a..=b).contains(&x) {
                    return Ok(x);
                }
            }
            return Err(Error::Runaway { cap: ICOND_CAP });
        }
        let mut ledger = self.ledger;
        let out = icond_inverse_transform(&*self, a, b, rng, &mut ledger, ICOND_CAP);
        self.ledger = ledger;
        out
    }

    fn ledger(&self) -> &QueryLedger {
        &self.ledger
    }

    fn ledger_mut(&mut self) -> &mut QueryLedger {
        &mut self.ledger
    }

    fn support(&self) -> Support {
        self.output_support()
    }
}

impl RejectionLaw for BinomialSampler {
    fn hat(&self) -> HatMap {
        self.hat
    }

    fn acceptance_probability(&self, k: i64, u: f64) -> f64 {
        if k < 0 || k > self.n {
            return 0.0;
        }
        let us = 0.5 - u.abs();
        let squeeze = if us >= 0.07 { self.vr } else { 0.0 };
        let full = (self.log_ratio(k)).exp() * (self.hat.a / (us * us) + self.hat.b) / self.alpha;
        squeeze.max(full).clamp(0.0, 1.0)
    }

    fn law_window(&self) -> (i64, i64) {
        if self.is_special() {
            return (0, self.n);
        }
        let mean = self.n as f64 * self.p;
        let spread = 40.0 * self.spq + 40.0;
        (((mean - spread).floor() as i64).max(0), ((mean + spread).ceil() as i64).min(self.n))
    }
}
