use rand::RngCore;

use super::{check_bids, check_units, top_k_marginal, top_k_realize, Mechanism, Outcome, OutcomeMode};
use crate::dist::ValuationProfile;
use crate::error::Result;

/// k-unit Vickrey auction with burnt payments: the top `k` bids win and pay
/// the `(k+1)`-th highest bid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Vickrey {
    k: usize,
}

impl Vickrey {
    pub fn new(k: usize) -> Result<Self> {
        check_units(k)?;
        Ok(Vickrey { k })
    }
}

/// Marginal Vickrey outcome on a profile (ties at the cutoff split evenly).
pub fn vickrey(profile: &ValuationProfile, k: usize) -> Result<Outcome> {
    Vickrey::new(k)?.marginal(profile.values())
}

impl Mechanism for Vickrey {
    fn name(&self) -> String {
        "vickrey".into()
    }

    fn units(&self) -> usize {
        self.k
    }

    fn marginal(&self, bids: &[f64]) -> Result<Outcome> {
        check_bids(bids)?;
        let (x, cut) = top_k_marginal(bids, self.k);
        let price = vec![cut.unwrap_or(0.0); bids.len()];
        Ok(Outcome::from_prices(bids, x, &price, OutcomeMode::Marginal))
    }

    fn realize(&self, bids: &[f64], rng: &mut dyn RngCore) -> Result<Outcome> {
        check_bids(bids)?;
        let (x, cut) = top_k_realize(bids, self.k, rng);
        let price = vec![cut.unwrap_or(0.0); bids.len()];
        Ok(Outcome::from_prices(bids, x, &price, OutcomeMode::Realized))
    }
}
