//! Incentive and identity audits.
//!
//! Deviation scans and payment-identity checks evaluate mechanisms exactly
//! through [`Mechanism::marginal`], so their verdicts carry no sampling
//! noise. The expectation checks are Monte-Carlo and compare 99% intervals.

mod dsic;
mod identity;
mod expectations;
mod sampling;

use rand::{Rng, RngCore};
use serde::Serialize;

use crate::dist::ValueDistribution;
use crate::error::Result;
use crate::mechanisms::{check_bids, check_units, top_k_marginal, top_k_realize, Mechanism, Outcome, OutcomeMode};
use crate::rng::stream;

pub use dsic::{bid_grid, check_dsic, DsicReport, DSIC_GRID_POINTS};
pub use identity::{check_payment_identity, IdentityReport, InterimRule, MIN_IDENTITY_POINTS};
pub use expectations::{verify_ironing_dominance, verify_utility_identity, ExpectationReport};
pub use sampling::{balanced_sampling_probe, ProbeReport, BALANCE_TARGET, MAX_EXACT_PROBE};

/// Tolerance for exact-arithmetic audits.
pub const EXACT_TOL: f64 = 1e-9;

/// Non-truthful control: the top `k` bids win and pay their own bid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FirstPrice {
    k: usize,
}

impl FirstPrice {
    pub fn new(k: usize) -> Result<Self> {
        check_units(k)?;
        Ok(FirstPrice { k })
    }
}

impl Mechanism for FirstPrice {
    fn name(&self) -> String {
        "first-price".into()
    }

    fn units(&self) -> usize {
        self.k
    }

    fn marginal(&self, bids: &[f64]) -> Result<Outcome> {
        check_bids(bids)?;
        let (x, _) = top_k_marginal(bids, self.k);
        Ok(Outcome::from_prices(bids, x, bids, OutcomeMode::Marginal))
    }

    fn realize(&self, bids: &[f64], rng: &mut dyn RngCore) -> Result<Outcome> {
        check_bids(bids)?;
        let (x, _) = top_k_realize(bids, self.k, rng);
        Ok(Outcome::from_prices(bids, x, bids, OutcomeMode::Realized))
    }
}

/// `count` profiles drawn from `d` with between 1 and `max_n` agents. Every
/// third profile repeats its first value to exercise tie-breaking.
pub fn audit_corpus(d: &ValueDistribution, count: usize, max_n: usize, seed: u64) -> Vec<Vec<f64>> {
    (0..count)
        .map(|c| {
            let mut rng = stream(seed, c as u64);
            let n = rng.random_range(1..=max_n.max(1));
            let mut v: Vec<f64> = (0..n).map(|_| d.sample(&mut rng)).collect();
            if c % 3 == 2 && n >= 2 {
                v[n - 1] = v[0];
            }
            v
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditRow {
    pub mechanism: String,
    pub check: &'static str,
    pub cases: usize,
    pub passed: bool,
    pub worst: f64,
}

/// DSIC and payment-identity audits of `mech` over `profiles`.
pub fn audit_profiles(
    mech: &dyn Mechanism,
    d: &ValueDistribution,
    profiles: &[Vec<f64>],
) -> Result<Vec<AuditRow>> {
    let mut dsic = AuditRow {
        mechanism: mech.name(),
        check: "dsic",
        cases: 0,
        passed: true,
        worst: 0.0,
    };
    let mut ident = AuditRow {
        check: "payment-identity",
        ..dsic.clone()
    };
    for values in profiles {
        let grid = bid_grid(values, d.support(), DSIC_GRID_POINTS);
        let r = check_dsic(mech, values, &grid, EXACT_TOL)?;
        dsic.cases += 1;
        dsic.passed &= r.passed;
        dsic.worst = dsic.worst.max(r.max_gain);

        let fine = bid_grid(values, d.support(), MIN_IDENTITY_POINTS);
        for agent in 0..values.len() {
            let rule = InterimRule::extract(mech, values, agent, &fine)?;
            let r = check_payment_identity(&rule, EXACT_TOL)?;
            ident.cases += 1;
            ident.passed &= r.passed;
            ident.worst = ident.worst.max(if r.monotone { r.max_error } else { f64::INFINITY });
        }
    }
    Ok(vec![dsic, ident])
}
