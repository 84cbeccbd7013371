//! Testing black-box discrete samplers against known target distributions.
//!
//! The unknown sampler is accessed through an interval-conditioning oracle:
//! "give me a draw conditioned on landing in `[a, b]`". For inverse-transform
//! samplers such a draw costs about as much as a plain one. On top of that
//! oracle the crate builds
//!
//! * [`cont::icond_cont`]: conditioning of the noise-smoothed law `P*Tri` on real intervals,
//! * [`tpa::tpa`]: a nested-interval stopping-time estimate of `ln(1/P(x))`,
//! * [`estimator::est`]: a two-phase `(1 ± zeta)` estimate of `P(x)`,
//! * [`testers::toltest`] and [`testers::ertoltest`]: identity testers that accept
//!   samplers close to the target and reject those far from it.
//!
//! # Examples
//!
//! The `examples/` directory has one runnable program per capability:
//!
//! ```text
//! examples/
//! ├── known_targets.rs        pmf, tails and distances of the target families
//! ├── tpa_mass.rs             stopping-time counts for a point of a uniform law
//! ├── smoothed_conditioning.rs conditioning P*Tri on a real interval
//! ├── estimate_mass.rs        two-phase estimate of one point's mass
//! ├── sampler_oracles.rs      conditioned draws from the built-in samplers
//! ├── detect_buggy_poisson.rs early-reject tester on pristine and flawed samplers
//! ├── tolerant_test.rs        mixture-based tolerant tester on a small support
//! ├── case_study.rs           decision grid over all sampler variants
//! └── validate_sampler.rs     goodness-of-fit checks of draws and conditioned draws
//! ```
//!
//! Run one with `cargo run --release --example detect_buggy_poisson`.

pub mod cont;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod known;
pub mod sampler;
pub mod stats;
pub mod testers;
pub mod tpa;

pub use error::{Error, Result};
pub use known::{ExplicitTable, KnownDistribution};
pub use sampler::{AnySampler, QueryLedger, SamplerOracle};
pub use testers::{ertoltest, toltest, Decision, TestParams, TestReport};
