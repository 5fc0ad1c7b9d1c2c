use serde::Serialize;

use crate::dist::ValueDistribution;
use crate::error::{Error, Result};
use crate::ironing::IronedVirtual;
use crate::mechanisms::Mechanism;
use crate::simlab::{replicate, MIN_REPLICATES};
use crate::stats::{Summary, Z99};

/// Standard errors of slack allowed on the dominance inequality.
const DOMINANCE_SE: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpectationReport {
    pub lhs: Summary,
    pub rhs: Summary,
    /// Per-replicate `rhs - lhs`.
    pub difference: Summary,
    pub passed: bool,
    /// The two sides agree within the 99% interval of their difference.
    pub equality: bool,
}

fn check_reps(reps: usize) -> Result<()> {
    if reps < MIN_REPLICATES {
        return Err(Error::input(format!("expectation checks need >= {MIN_REPLICATES} replicates")));
    }
    Ok(())
}

fn report(pairs: &[(f64, f64)], passed: impl Fn(&Summary, &Summary, &Summary) -> bool) -> ExpectationReport {
    let lhs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let rhs: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let diff: Vec<f64> = pairs.iter().map(|p| p.1 - p.0).collect();
    let (lhs, rhs, difference) = (
        Summary::from_samples(&lhs),
        Summary::from_samples(&rhs),
        Summary::from_samples(&diff),
    );
    ExpectationReport {
        passed: passed(&lhs, &rhs, &difference),
        equality: difference.mean.abs() <= Z99 * difference.se,
        lhs,
        rhs,
        difference,
    }
}

/// Expected total utility against expected `sum_i theta(v_i) x_i`.
///
/// When the support starts at `a > 0` the identity carries the utility an
/// agent gets from reporting `a`, so the right side adds
/// `sum_i u_i(a, v_-i)`; it vanishes for supports starting at 0.
pub fn verify_utility_identity(
    d: &ValueDistribution,
    mech: &dyn Mechanism,
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<ExpectationReport> {
    check_reps(reps)?;
    let a = d.support().lo;
    let pairs = replicate(reps, seed, |rng| {
        let p = d.sample_profile(n, rng);
        let v = p.values();
        let out = mech.marginal(v)?;
        let utility: f64 = out.utilities.iter().sum();
        let mut virt: f64 = v.iter().zip(&out.allocation).map(|(&vi, x)| d.theta(vi) * x).sum();
        if a > 0.0 {
            let mut bids = v.to_vec();
            for i in 0..n {
                bids[i] = a;
                let low = mech.marginal(&bids)?;
                virt += a * low.allocation[i] - low.payments[i];
                bids[i] = v[i];
            }
        }
        Ok((utility, virt))
    })?;
    Ok(report(&pairs, |l, r, _| l.overlaps(r)))
}

/// `E[sum theta(v_i) x_i] <= E[sum phibar(v_i) x_i]` for the allocation of
/// `mech`, with equality expected when the allocation is flat on every
/// ironed interval.
pub fn verify_ironing_dominance(
    iv: &IronedVirtual,
    mech: &dyn Mechanism,
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<ExpectationReport> {
    check_reps(reps)?;
    let d = iv.distribution();
    let pairs = replicate(reps, seed, |rng| {
        let p = d.sample_profile(n, rng);
        let out = mech.marginal(p.values())?;
        let mut theta = 0.0;
        let mut ironed = 0.0;
        for (&v, &x) in p.values().iter().zip(&out.allocation) {
            theta += d.theta(v) * x;
            ironed += iv.ironed_value(v)? * x;
        }
        Ok((theta, ironed))
    })?;
    Ok(report(&pairs, |_, _, diff| diff.mean >= -DOMINANCE_SE * diff.se))
}
