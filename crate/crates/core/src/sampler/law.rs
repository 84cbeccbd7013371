//! Exact output laws of the transformed-rejection samplers by quadrature over the proposal uniform.

use super::transform::HatMap;
use crate::known::{kahan_sum, ExplicitTable};

/// A sampler whose output law is `P(k) ∝ ∫_{f(u) ∈ [k, k+1)} acc(k, u) du`.
pub trait RejectionLaw {
    fn hat(&self) -> HatMap;
    /// Probability that proposal `u` (mapped to `k`) is accepted.
    fn acceptance_probability(&self, k: i64, u: f64) -> f64;
    /// Integer window holding essentially all output mass.
    fn law_window(&self) -> (i64, i64);
}

const GL_NODES: [(f64, f64); 4] = [
    (0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_3),
];

/// |u| values where the acceptance step changes form (us = 0.07 and us = 0.013).
const KINKS: [f64; 4] = [-0.487, -0.43, 0.43, 0.487];

fn gauss_legendre(f: &impl Fn(f64) -> f64, l: f64, r: f64) -> f64 {
    let mid = 0.5 * (l + r);
    let half = 0.5 * (r - l);
    GL_NODES.iter().map(|&(x, w)| w * (f(mid - half * x) + f(mid + half * x))).sum::<f64>() * half
}

/// Unnormalized output mass of `k`.
pub fn output_weight<S: RejectionLaw + ?Sized>(sampler: &S, k: i64) -> f64 {
    let hat = sampler.hat();
    let acc = |u: f64| sampler.acceptance_probability(k, u);
    let mut total = 0.0;
    for (l, r) in hat.preimage(k as f64, k as f64 + 1.0) {
        let mut cuts = vec![l, r];
        cuts.extend(KINKS.iter().copied().filter(|&x| x > l && x < r));
        cuts.sort_by(f64::total_cmp);
        for w in cuts.windows(2) {
            let panels = ((w[1] - w[0]) / 1e-3).ceil().max(1.0) as usize;
            let h = (w[1] - w[0]) / panels as f64;
            for i in 0..panels {
                let a = w[0] + i as f64 * h;
                total += gauss_legendre(&acc, a, a + h);
            }
        }
    }
    total
}

/// The sampler's output law over its window, normalized.
pub fn exact_law<S: RejectionLaw + ?Sized>(sampler: &S) -> ExplicitTable {
    let (lo, hi) = sampler.law_window();
    let weights: Vec<f64> = (lo..=hi).map(|k| output_weight(sampler, k)).collect();
    let z = kahan_sum(weights.iter().copied());
    ExplicitTable::from_dense(lo, weights.into_iter().map(|w| w / z).collect()).expect("positive total weight")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::known::{tv_distance_exact, KnownDistribution};
    use crate::sampler::{BinomialSampler, PoissonSampler};

    #[test]
    fn pristine_laws_match_targets() {
        for mu in [50.0, 1000.0] {
            let s = PoissonSampler::new(mu).unwrap();
            let tv = tv_distance_exact(&exact_law(&s), &KnownDistribution::poisson(mu).unwrap().to_table()).unwrap();
            assert!(tv < 1e-3, "poisson({mu}) tv {tv}");
        }
        for (n, p) in [(500, 0.3), (31306, 0.16)] {
            let s = BinomialSampler::new(n, p).unwrap();
            let tv = tv_distance_exact(&exact_law(&s), &KnownDistribution::binomial(n, p).unwrap().to_table()).unwrap();
            assert!(tv < 1e-3, "binomial({n},{p}) tv {tv}");
        }
    }
}
