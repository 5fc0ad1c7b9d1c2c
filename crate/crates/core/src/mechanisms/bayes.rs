use std::sync::Arc;

use rand::RngCore;

use super::{check_units, top_k_marginal, top_k_realize, Mechanism, Outcome, OutcomeMode};
use crate::dist::ValuationProfile;
use crate::error::Result;
use crate::ironing::IronedVirtual;

/// The symmetric Bayesian-optimal money-burning mechanism for an i.i.d.
/// prior: allocate to the `k` highest ironed virtual valuations (uniform
/// ties) and charge payments from the payment identity.
#[derive(Debug, Clone)]
pub struct BayesOptimal {
    iv: Arc<IronedVirtual>,
    k: usize,
}

impl BayesOptimal {
    pub fn new(iv: Arc<IronedVirtual>, k: usize) -> Result<Self> {
        check_units(k)?;
        Ok(BayesOptimal { iv, k })
    }

    pub fn ironed(&self) -> &IronedVirtual {
        &self.iv
    }

    fn levels(&self, bids: &[f64]) -> Result<Vec<f64>> {
        bids.iter().map(|&b| self.iv.ironed_value(b)).collect()
    }

    /// Win probability of an agent bidding `u` against opponents with
    /// ironed levels `others`. Below the support the rule is extended
    /// by its value at the bottom of the support.
    fn interim(&self, u: f64, others: &[f64]) -> f64 {
        let level = self.iv.value_unchecked(u.max(self.iv.support().lo));
        let above = others.iter().filter(|&&l| l > level).count();
        let equal = others.iter().filter(|&&l| l == level).count();
        if above >= self.k {
            0.0
        } else if above + equal < self.k {
            1.0
        } else {
            (self.k - above) as f64 / (equal + 1) as f64
        }
    }

    /// Conditional price `int_0^b (1 - x(u)/x(b)) du` for a winner bidding `b`.
    fn price(&self, agent: usize, bids: &[f64], levels: &[f64]) -> f64 {
        let b = bids[agent];
        let others: Vec<f64> = levels
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != agent)
            .map(|(_, &l)| l)
            .collect();
        let x_top = self.interim(b, &others);
        if x_top <= 0.0 {
            return 0.0;
        }
        let lo = self.iv.support().lo;
        let mut cuts = vec![lo, b];
        for (j, &bj) in bids.iter().enumerate() {
            if j == agent {
                continue;
            }
            let set = self.iv.level_set(bj).expect("bid checked against the support");
            cuts.extend([set.lo, set.hi].into_iter().filter(|&c| c > lo && c < b));
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut owed = lo * (1.0 - self.interim(lo, &others) / x_top);
        for w in cuts.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            owed += (w[1] - w[0]) * (1.0 - self.interim(mid, &others) / x_top);
        }
        owed.max(0.0)
    }

    fn prices(&self, bids: &[f64], levels: &[f64], winners: &[f64]) -> Vec<f64> {
        (0..bids.len())
            .map(|i| if winners[i] > 0.0 { self.price(i, bids, levels) } else { 0.0 })
            .collect()
    }
}

impl Mechanism for BayesOptimal {
    fn name(&self) -> String {
        format!("bayes({})", self.iv.distribution().name())
    }

    fn units(&self) -> usize {
        self.k
    }

    fn marginal(&self, bids: &[f64]) -> Result<Outcome> {
        let levels = self.levels(bids)?;
        let (x, _) = top_k_marginal(&levels, self.k);
        let price = self.prices(bids, &levels, &x);
        Ok(Outcome::from_prices(bids, x, &price, OutcomeMode::Marginal))
    }

    fn realize(&self, bids: &[f64], rng: &mut dyn RngCore) -> Result<Outcome> {
        let levels = self.levels(bids)?;
        let (x, _) = top_k_realize(&levels, self.k, rng);
        let price = self.prices(bids, &levels, &x);
        Ok(Outcome::from_prices(bids, x, &price, OutcomeMode::Realized))
    }

    fn breakpoints(&self, bids: &[f64], agent: usize) -> Vec<f64> {
        let mut out = Vec::new();
        for (j, &b) in bids.iter().enumerate() {
            if j == agent {
                continue;
            }
            out.push(b);
            if let Ok(set) = self.iv.level_set(b) {
                out.extend([set.lo, set.hi]);
            }
        }
        out
    }
}

/// One play of the optimal mechanism on a profile.
pub fn bayes_optimal_outcome(
    iv: Arc<IronedVirtual>,
    profile: &ValuationProfile,
    k: usize,
    rng: &mut dyn RngCore,
) -> Result<Outcome> {
    BayesOptimal::new(iv, k)?.realize(profile.values(), rng)
}

/// Marginal (expected over tie-breaks) outcome of the optimal mechanism.
pub fn bayes_optimal_marginal(iv: Arc<IronedVirtual>, profile: &ValuationProfile, k: usize) -> Result<Outcome> {
    BayesOptimal::new(iv, k)?.marginal(profile.values())
}

/// The `(p, q)` pair whose (p,q)-lottery reproduces the optimal mechanism on
/// this profile: `q` and `p` bound the level set of `v_{k+1}`, with `p`
/// capped at the highest bid (a larger `p` leaves the lottery unchanged).
/// `None` when every agent is served.
pub fn bayes_pq(iv: &IronedVirtual, profile: &ValuationProfile, k: usize) -> Result<Option<(f64, f64)>> {
    check_units(k)?;
    if profile.len() <= k {
        return Ok(None);
    }
    let set = iv.level_set(profile.ranked(k + 1))?;
    Ok(Some((set.hi.min(profile.ranked(1)).max(set.lo), set.lo)))
}
