//! Constant-perturbed sampler variants.
//!
//! Variant 1 is the pristine sampler. Binomial variants 2..=6 and Poisson
//! variants 2..=6 carry the perturbed constants of the published flawed
//! listings; the two mildest listings (binomial `b = 13.15 + 2.53 spq`,
//! Poisson `b = 1.931 + 2.53 sqrt(mu)`) are left out because their output laws
//! stay within 0.015 total variation of the target. Poisson variants 5 and 6
//! only touch the rejection step and the proposal shift.

use serde::Serialize;

use super::{AnySampler, BinomialSampler, BtrsConstants, GeometricSampler, PoissonSampler, PtrsConstants};
use crate::error::{domain, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SamplerFamily {
    Binomial,
    Poisson,
    Geometric,
}

/// Family and parameters of a built-in sampler.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SamplerParams {
    Geometric { p: f64 },
    Binomial { n: u64, p: f64 },
    Poisson { mu: f64 },
}

impl SamplerParams {
    pub fn family(&self) -> SamplerFamily {
        match self {
            SamplerParams::Geometric { .. } => SamplerFamily::Geometric,
            SamplerParams::Binomial { .. } => SamplerFamily::Binomial,
            SamplerParams::Poisson { .. } => SamplerFamily::Poisson,
        }
    }
}

/// The constants a variant changes, by name.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BugSpec {
    pub family: SamplerFamily,
    pub variant_id: u8,
    pub perturbations: Vec<(&'static str, f64)>,
}

pub fn bug_spec(family: SamplerFamily, variant_id: u8) -> Result<BugSpec> {
    let perturbations: Vec<(&'static str, f64)> = match (family, variant_id) {
        (_, 1) => vec![],
        (SamplerFamily::Binomial, 2) => vec![("b_offset", 13.15), ("b_scale", 0.53)],
        (SamplerFamily::Binomial, 3) => vec![("b_offset", 13.15), ("b_scale", 0.53), ("a_offset", -0.1874)],
        (SamplerFamily::Binomial, 4) => {
            vec![("b_offset", 13.15), ("b_scale", 0.53), ("a_slope", 0.148), ("c_offset", 0.0)]
        }
        (SamplerFamily::Binomial, 5) => {
            vec![("b_offset", 13.15), ("b_scale", 0.53), ("a_slope", 0.148), ("a_p", 0.04)]
        }
        (SamplerFamily::Binomial, 6) => vec![("b_scale", 0.53), ("a_slope", 0.148), ("c_offset", 0.0)],
        (SamplerFamily::Poisson, 2) => vec![("b_offset", 1.931), ("b_scale", 4.53)],
        (SamplerFamily::Poisson, 3) => vec![("b_offset", 1.931), ("b_scale", 4.53), ("a_offset", -0.559)],
        (SamplerFamily::Poisson, 4) => {
            vec![("b_offset", 1.931), ("b_scale", 4.53), ("a_offset", -0.559), ("a_slope", 0.14483)]
        }
        (SamplerFamily::Poisson, 5) => vec![("shift", 10.445)],
        (SamplerFamily::Poisson, 6) => vec![("inv_alpha_offset", 100.1239)],
        _ => return domain(format!("no variant {variant_id} for {family:?}")),
    };
    Ok(BugSpec { family, variant_id, perturbations })
}

impl BugSpec {
    pub fn binomial_constants(&self) -> BtrsConstants {
        let mut c = BtrsConstants::default();
        if self.variant_id != 1 {
            // every flawed listing shares these unhighlighted differences
            c.a_offset = -0.0874;
            c.centered_bernoulli = true;
        }
        for &(name, v) in &self.perturbations {
            match name {
                "b_offset" => c.b_offset = v,
                "b_scale" => c.b_scale = v,
                "a_offset" => c.a_offset = v,
                "a_slope" => c.a_slope = v,
                "a_p" => c.a_p = v,
                "c_offset" => c.c_offset = v,
                _ => unreachable!("binomial constant {name}"),
            }
        }
        c
    }

    pub fn poisson_constants(&self) -> PtrsConstants {
        let mut c = PtrsConstants::default();
        for &(name, v) in &self.perturbations {
            match name {
                "b_offset" => c.b_offset = v,
                "b_scale" => c.b_scale = v,
                "a_offset" => c.a_offset = v,
                "a_slope" => c.a_slope = v,
                "inv_alpha_offset" => c.inv_alpha_offset = v,
                "shift" => c.shift = v,
                _ => unreachable!("poisson constant {name}"),
            }
        }
        c
    }
}

/// Builds variant `variant_id` of the sampler for `params`.
pub fn make_buggy(params: SamplerParams, variant_id: u8) -> Result<AnySampler> {
    let spec = bug_spec(params.family(), variant_id)?;
    Ok(match params {
        SamplerParams::Geometric { p } => AnySampler::Geometric(GeometricSampler::new(p)?),
        SamplerParams::Binomial { n, p } => {
            AnySampler::Binomial(BinomialSampler::with_constants(n, p, spec.binomial_constants())?)
        }
        SamplerParams::Poisson { mu } => {
            AnySampler::Poisson(PoissonSampler::with_constants(mu, spec.poisson_constants())?)
        }
    })
}
