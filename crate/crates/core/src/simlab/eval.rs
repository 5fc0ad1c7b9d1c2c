use rayon::prelude::*;
use serde::Serialize;

use crate::dist::{ValuationProfile, ValueDistribution};
use crate::error::{Error, Result};
use crate::mechanisms::Mechanism;
use crate::rng::{stream, StreamRng};
use crate::stats::Summary;

/// Fewest replicates accepted for a Monte-Carlo estimate.
pub const MIN_REPLICATES: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    Exact,
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MechanismEval {
    pub mean: f64,
    /// Half-width of the 99% interval; zero in exact mode.
    pub ci_half: f64,
    pub mode: EvalMode,
    pub replicates: usize,
    pub seed: Option<u64>,
}

impl MechanismEval {
    pub fn exact(value: f64) -> Self {
        MechanismEval {
            mean: value,
            ci_half: 0.0,
            mode: EvalMode::Exact,
            replicates: 0,
            seed: None,
        }
    }

    pub fn from_summary(s: &Summary, seed: u64) -> Self {
        MechanismEval {
            mean: s.mean,
            ci_half: s.ci99(),
            mode: EvalMode::Mc,
            replicates: s.count,
            seed: Some(seed),
        }
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.mean - self.ci_half, self.mean + self.ci_half)
    }
}

pub(crate) fn check_replicates(reps: usize) -> Result<()> {
    if reps < MIN_REPLICATES {
        Err(Error::input(format!("Monte-Carlo needs >= {MIN_REPLICATES} replicates, got {reps}")))
    } else {
        Ok(())
    }
}

/// Runs `f` once per replicate on its own stream `(seed, r)`, in parallel;
/// results come back in replicate order.
pub fn replicate<T, F>(reps: usize, seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut StreamRng) -> Result<T> + Sync,
{
    (0..reps as u64)
        .into_par_iter()
        .map(|r| f(&mut stream(seed, r)))
        .collect()
}

/// Mean of `f` over `reps` i.i.d. profiles of `n` agents drawn from `d`.
pub fn profile_average<F>(d: &ValueDistribution, n: usize, reps: usize, seed: u64, f: F) -> Result<MechanismEval>
where
    F: Fn(&ValuationProfile) -> Result<f64> + Sync,
{
    check_replicates(reps)?;
    let xs = replicate(reps, seed, |rng| f(&d.sample_profile(n, rng)))?;
    Ok(MechanismEval::from_summary(&Summary::from_samples(&xs), seed))
}

/// Expected residual surplus of `mech` when `n` agents are drawn from `d`;
/// each replicate contributes the exact expectation on its profile.
pub fn estimate(mech: &dyn Mechanism, d: &ValueDistribution, n: usize, reps: usize, seed: u64) -> Result<MechanismEval> {
    profile_average(d, n, reps, seed, |p| mech.expected_residual(p.values()))
}

/// Monte-Carlo over the mechanism's own randomness on a fixed profile.
pub fn monte_carlo_on_profile(
    mech: &dyn Mechanism,
    profile: &ValuationProfile,
    reps: usize,
    seed: u64,
) -> Result<MechanismEval> {
    check_replicates(reps)?;
    let xs = replicate(reps, seed, |rng| Ok(mech.realize(profile.values(), rng)?.residual_surplus))?;
    Ok(MechanismEval::from_summary(&Summary::from_samples(&xs), seed))
}
