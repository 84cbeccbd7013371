use rand::RngCore;
use statrs::function::gamma::ln_gamma;

use super::law::RejectionLaw;
use super::transform::{icond_inverse_transform, HatMap, InverseTransform};
use super::{QueryLedger, SamplerOracle, Support, DRAW_CAP, ICOND_CAP};
use crate::error::{domain, Error, Result};

/// Means below this use the multiplication method instead of transformed rejection.
pub const SMALL_MEAN: f64 = 10.0;

/// Tunable constants of the transformed-rejection Poisson sampler.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PtrsConstants {
    /// `b = b_offset + b_scale * sqrt(mu)`
    pub b_offset: f64,
    pub b_scale: f64,
    /// `a = a_offset + a_slope * b`
    pub a_offset: f64,
    pub a_slope: f64,
    /// `invalpha = inv_alpha_offset + 1.1328 / (b - 3.4)`
    pub inv_alpha_offset: f64,
    /// `k = floor((2a/us + b) U + mu + shift)`
    pub shift: f64,
}

impl Default for PtrsConstants {
    fn default() -> Self {
        PtrsConstants {
            b_offset: 0.931,
            b_scale: 2.53,
            a_offset: -0.059,
            a_slope: 0.02483,
            inv_alpha_offset: 1.1239,
            shift: 0.445,
        }
    }
}

/// Poisson sampler: multiplication method for small means, transformed rejection otherwise.
#[derive(Clone, Debug)]
pub struct PoissonSampler {
    mu: f64,
    consts: PtrsConstants,
    exlam: f64,
    ln_mu: f64,
    hat: HatMap,
    vr: f64,
    ln_inv_alpha: f64,
    ledger: QueryLedger,
}

impl PoissonSampler {
    pub fn new(mu: f64) -> Result<Self> {
        Self::with_constants(mu, PtrsConstants::default())
    }

    pub fn with_constants(mu: f64, consts: PtrsConstants) -> Result<Self> {
        if !(mu > 0.0 && mu < 1e12) {
            return domain("poisson sampler needs a finite mean mu > 0");
        }
        let b = consts.b_offset + consts.b_scale * mu.sqrt();
        let a = consts.a_offset + consts.a_slope * b;
        let vr = 0.9277 - 3.6224 / (b - 2.0);
        let inv_alpha = consts.inv_alpha_offset + 1.1328 / (b - 3.4);
        Ok(PoissonSampler {
            mu,
            consts,
            exlam: (-mu).exp(),
            ln_mu: mu.ln(),
            hat: HatMap { a, b, c: mu + consts.shift },
            vr,
            ln_inv_alpha: inv_alpha.ln(),
            ledger: QueryLedger::default(),
        })
    }

    pub fn constants(&self) -> &PtrsConstants {
        &self.consts
    }

    pub fn inv_alpha(&self) -> f64 {
        self.ln_inv_alpha.exp()
    }

    pub fn hat(&self) -> HatMap {
        self.hat
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    fn small(&self) -> bool {
        self.mu < SMALL_MEAN
    }

    fn multiplication_draw(&mut self, rng: &mut dyn RngCore) -> Result<i64> {
        let mut k = 0;
        let mut prod = 1.0;
        for _ in 0..DRAW_CAP {
            prod *= self.ledger.uniform(rng);
            if prod > self.exlam {
                k += 1;
            } else {
                return Ok(k);
            }
        }
        Err(Error::Runaway { cap: DRAW_CAP })
    }

    fn log_target(&self, k: i64) -> f64 {
        k as f64 * self.ln_mu - self.mu - ln_gamma(k as f64 + 1.0)
    }

    fn accept_with(&self, k: i64, us: f64, v: f64) -> bool {
        if us >= 0.07 && v <= self.vr {
            return true;
        }
        if k <= 0 || (us < 0.013 && v > us) {
            return false;
        }
        v.ln() + self.ln_inv_alpha - (self.hat.a / (us * us) + self.hat.b).ln() <= self.log_target(k)
    }
}

impl InverseTransform for PoissonSampler {
    fn proposal_range(&self) -> (f64, f64) {
        (-0.5, 0.5)
    }

    fn transform(&self, u: f64) -> i64 {
        self.hat.eval(u).floor() as i64
    }

    fn hat_preimage(&self, a: i64, b: i64) -> Vec<(f64, f64)> {
        if a > b {
            return Vec::new();
        }
        let hi = if b >= i64::MAX / 2 { f64::INFINITY } else { b as f64 + 1.0 };
        self.hat.preimage(a as f64, hi)
    }

    fn accept(&self, k: i64, u: f64, rng: &mut dyn RngCore, ledger: &mut QueryLedger) -> bool {
        let v = ledger.uniform(rng);
        self.accept_with(k, 0.5 - u.abs(), v)
    }

    fn output_support(&self) -> Support {
        Support { lo: 0, hi: None }
    }
}

impl SamplerOracle for PoissonSampler {
    fn draw(&mut self, rng: &mut dyn RngCore) -> Result<i64> {
        self.ledger.draws += 1;
        if self.small() {
            return self.multiplication_draw(rng);
        }
        for _ in 0..DRAW_CAP {
            let u = self.ledger.uniform(rng) - 0.5;
            let v = self.ledger.uniform(rng);
            let us = 0.5 - u.abs();
            let k = self.transform(u);
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
        if self.small() {
            // the multiplication method has no monotone proposal map
            for _ in 0..ICOND_CAP {
                let x = self.multiplication_draw(rng)?;
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

impl RejectionLaw for PoissonSampler {
    fn hat(&self) -> HatMap {
        self.hat
    }

    fn acceptance_probability(&self, k: i64, u: f64) -> f64 {
        let us = 0.5 - u.abs();
        let squeeze = if us >= 0.07 { self.vr } else { 0.0 };
        let full = if k <= 0 {
            0.0
        } else {
            let g = (self.log_target(k) - self.ln_inv_alpha + (self.hat.a / (us * us) + self.hat.b).ln()).exp();
            if us < 0.013 {
                g.min(us)
            } else {
                g
            }
        };
        squeeze.max(full).clamp(0.0, 1.0)
    }

    fn law_window(&self) -> (i64, i64) {
        let spread = 40.0 * self.mu.sqrt() + 60.0;
        ((self.mu - spread).floor() as i64, (self.mu + spread).ceil() as i64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::known::KnownDistribution;
    use crate::sampler::tests::counts;
    use crate::sampler::{icond_rejection_fallback, preimage_bisection};
    use crate::stats::{chi_square_passes, chi_square_stat, two_sample_chi_square};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gof(xs: &[i64], q: &KnownDistribution, lo: i64, hi: i64) -> bool {
        let clipped: Vec<i64> = xs.iter().map(|&x| x.clamp(lo, hi)).collect();
        let mut expected: Vec<f64> = (lo..=hi).map(|x| q.pmf(x)).collect();
        expected[0] += q.cdf(lo - 1);
        let last = expected.len() - 1;
        expected[last] += q.sf(hi);
        chi_square_passes(chi_square_stat(&counts(&clipped, lo, hi), &expected).unwrap(), 0.99)
    }

    #[test]
    fn pristine_draws_match_pmf() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for mu in [3.5, 10.0, 100.0, 2500.0] {
            let mut s = PoissonSampler::new(mu).unwrap();
            let q = KnownDistribution::poisson(mu).unwrap();
            let xs: Vec<i64> = (0..100_000).map(|_| s.draw(&mut rng).unwrap()).collect();
            let sd = mu.sqrt();
            let lo = ((mu - 5.0 * sd) as i64).max(0);
            assert!(gof(&xs, &q, lo, (mu + 5.0 * sd) as i64 + 3), "mu={mu}");
        }
    }

    #[test]
    fn conditional_matches_exact_conditional() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for (mu, a, b) in [(100.0, 95, 110), (4.0, 2, 6), (1000.0, 1040, 1100)] {
            let mut s = PoissonSampler::new(mu).unwrap();
            let q = KnownDistribution::poisson(mu).unwrap();
            let xs: Vec<i64> = (0..100_000).map(|_| s.icond(&mut rng, a, b).unwrap()).collect();
            let mass = q.interval_mass(a, b).unwrap();
            let expected: Vec<f64> = (a..=b).map(|x| q.pmf(x) / mass).collect();
            assert!(
                chi_square_passes(chi_square_stat(&counts(&xs, a, b), &expected).unwrap(), 0.99),
                "mu={mu} [{a},{b}]"
            );
        }
    }

    #[test]
    fn icond_equals_rejection_fallback() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut s = PoissonSampler::new(300.0).unwrap();
        for (a, b) in [(270, 290), (300, 301), (320, 350)] {
            let xs: Vec<i64> = (0..20_000).map(|_| s.icond(&mut rng, a, b).unwrap()).collect();
            let ys: Vec<i64> = (0..20_000)
                .map(|_| icond_rejection_fallback(&mut s, a, b, 100_000, &mut rng).unwrap().unwrap())
                .collect();
            let r = two_sample_chi_square(&counts(&xs, a, b), &counts(&ys, a, b)).unwrap();
            assert!(chi_square_passes(r, 0.99), "[{a},{b}] {r:?}");
        }
    }

    #[test]
    fn preimage_agrees_with_bisection() {
        let s = PoissonSampler::new(29285.0).unwrap();
        for (a, b) in [(29285, 29285), (29000, 29400), (0, 28000), (30000, i64::MAX)] {
            let fast = s.hat_preimage(a, b);
            let hi = if b == i64::MAX { f64::INFINITY } else { b as f64 + 1.0 };
            let slow = preimage_bisection(|u| s.hat.eval(u), a as f64, hi, 1 << 14, 1e-14);
            assert_eq!(fast.len(), slow.len(), "[{a},{b}]");
            for (f, g) in fast.iter().zip(&slow) {
                assert!((f.0 - g.0).abs() < 1e-11 && (f.1 - g.1).abs() < 1e-11, "{f:?} vs {g:?}");
            }
        }
    }

    #[test]
    fn round_trip_on_singletons() {
        let s = PoissonSampler::new(500.0).unwrap();
        for k in 420..580 {
            for (l, h) in s.hat_preimage(k, k) {
                assert_eq!(s.transform(0.5 * (l + h)), k);
            }
        }
    }
}
