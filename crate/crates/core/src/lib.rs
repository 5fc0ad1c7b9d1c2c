//! Laboratory for money-burning mechanism design.
//!
//! Money-burning mechanisms may charge agents, but the charges are destroyed
//! rather than collected, so the objective is *residual surplus*: allocated
//! value minus everything burnt. The crate covers the Bayesian side
//! (virtual valuations for utility and their ironing), the prior-free side
//! (single- and two-price lotteries, the benchmark `G`, random-sampling
//! mechanisms) and tooling to audit incentive compatibility and reproduce the
//! quantitative gaps between transfers, burning and no payments.
//!
//! Module map:
//!
//! - [`dist`]: valuation priors, virtual valuations, profiles.
//! - [`ironing`]: convex-hull ironing of the virtual valuation for utility.
//! - [`mechanisms`]: every concrete mechanism and its exact expectations.
//! - [`benchmark`]: the two-price benchmark and single-price optimization.
//! - [`audit`]: deviation scans, payment identity and expectation identity checks.
//! - [`simlab`]: Monte-Carlo estimation, corpora and experiments.

pub mod audit;
pub mod benchmark;
pub mod dist;
pub mod error;
pub mod ironing;
pub mod mechanisms;
pub mod rng;
pub mod simlab;
pub mod stats;

pub use error::{Error, Result};
