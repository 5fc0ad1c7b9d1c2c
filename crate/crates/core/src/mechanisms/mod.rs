//! Money-burning mechanisms.
//!
//! Every mechanism exposes two evaluations of the same rule:
//! [`Mechanism::marginal`] returns win probabilities and expected payments,
//! exact over the mechanism's own coin flips, and [`Mechanism::realize`]
//! plays the rule once with an explicit random stream.

mod bayes;
mod costs;
mod logprice;
mod lottery;
mod mixed;
mod rsol;
mod vickrey;

use rand::RngCore;
use serde::Serialize;

use crate::dist::ValuationProfile;
use crate::error::{Error, Result};

pub use bayes::{bayes_optimal_marginal, bayes_optimal_outcome, bayes_pq, BayesOptimal};
pub use costs::{CostOutcome, CostProblem, MAX_COST_AGENTS};
pub use logprice::{expected_log_price, log_price_bound, log_price_exponents, realized_log_price, LogPrice};
pub use lottery::{expected_p_lottery, expected_pq_lottery, run_pq_lottery, PLottery, PqLottery};
pub use mixed::{mixed_vickrey_lottery, MixedVickreyLottery};
pub use rsol::{expected_rsol, rsol, Rsol, RsolMode, MAX_EXACT_RSOL};
pub use vickrey::{vickrey, Vickrey};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeMode {
    /// Allocation entries are 0/1 indicators, payments are realized.
    Realized,
    /// Allocation entries are win probabilities, payments are expectations.
    Marginal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub allocation: Vec<f64>,
    pub payments: Vec<f64>,
    pub utilities: Vec<f64>,
    pub residual_surplus: f64,
    pub k_used: f64,
    pub mode: OutcomeMode,
}

impl Outcome {
    pub fn new(values: &[f64], allocation: Vec<f64>, payments: Vec<f64>, mode: OutcomeMode) -> Self {
        debug_assert_eq!(values.len(), allocation.len());
        debug_assert_eq!(values.len(), payments.len());
        let utilities: Vec<f64> = values
            .iter()
            .zip(&allocation)
            .zip(&payments)
            .map(|((v, x), p)| v * x - p)
            .collect();
        let residual_surplus = utilities.iter().sum();
        let k_used = allocation.iter().sum();
        Outcome {
            allocation,
            payments,
            utilities,
            residual_surplus,
            k_used,
            mode,
        }
    }

    /// Outcome in which agent `i` wins with probability `x[i]` at the
    /// conditional price `price[i]`.
    pub(crate) fn from_prices(values: &[f64], x: Vec<f64>, price: &[f64], mode: OutcomeMode) -> Self {
        let payments = x.iter().zip(price).map(|(x, p)| if *x > 0.0 { x * p } else { 0.0 }).collect();
        Outcome::new(values, x, payments, mode)
    }

    pub fn len(&self) -> usize {
        self.allocation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.allocation.is_empty()
    }
}

pub trait Mechanism: Send + Sync {
    fn name(&self) -> String;

    /// Number of identical units for sale.
    fn units(&self) -> usize;

    /// Win probabilities and expected payments under truthful play of `bids`.
    fn marginal(&self, bids: &[f64]) -> Result<Outcome>;

    /// One play of the mechanism.
    fn realize(&self, bids: &[f64], rng: &mut dyn RngCore) -> Result<Outcome>;

    /// Bids of agent `agent` at which its interim allocation may jump,
    /// with the other bids held fixed.
    fn breakpoints(&self, bids: &[f64], agent: usize) -> Vec<f64> {
        bids.iter()
            .enumerate()
            .filter(|&(j, _)| j != agent)
            .map(|(_, &b)| b)
            .collect()
    }

    fn expected_residual(&self, bids: &[f64]) -> Result<f64> {
        Ok(self.marginal(bids)?.residual_surplus)
    }
}

pub(crate) fn check_units(k: usize) -> Result<()> {
    if k == 0 {
        Err(Error::input("a mechanism needs at least one unit"))
    } else {
        Ok(())
    }
}

pub(crate) fn check_price(name: &str, p: f64) -> Result<()> {
    if p.is_finite() && p >= 0.0 {
        Ok(())
    } else {
        Err(Error::input(format!("{name} must be finite and >= 0, got {p}")))
    }
}

pub(crate) fn check_bids(bids: &[f64]) -> Result<()> {
    match bids.iter().find(|b| !(b.is_finite() && **b >= 0.0)) {
        Some(b) => Err(Error::input(format!("bids must be finite and >= 0, got {b}"))),
        None => Ok(()),
    }
}

/// Uniformly chosen `count` members of `pool`.
pub(crate) fn choose(rng: &mut dyn RngCore, pool: &[usize], count: usize) -> Vec<usize> {
    let count = count.min(pool.len());
    rand::seq::index::sample(rng, pool.len(), count)
        .into_iter()
        .map(|i| pool[i])
        .collect()
}

/// Top-`k` selection by `score` with uniform tie-breaking at the cutoff.
/// Returns per-agent selection probabilities and the cutoff score (the
/// `(k+1)`-th highest, `None` when everyone fits).
pub(crate) fn top_k_marginal(score: &[f64], k: usize) -> (Vec<f64>, Option<f64>) {
    let n = score.len();
    if n <= k {
        return (vec![1.0; n], None);
    }
    let mut sorted = score.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let cut = sorted[k];
    let above = sorted.iter().take_while(|&&s| s > cut).count();
    let tied = sorted[above..].iter().take_while(|&&s| s == cut).count();
    let share = (k - above) as f64 / tied as f64;
    let x = score
        .iter()
        .map(|&s| {
            if s > cut {
                1.0
            } else if s == cut {
                share
            } else {
                0.0
            }
        })
        .collect();
    (x, Some(cut))
}

/// One draw of the top-`k` selection with uniform tie-breaking.
pub(crate) fn top_k_realize(score: &[f64], k: usize, rng: &mut dyn RngCore) -> (Vec<f64>, Option<f64>) {
    let (x, cut) = top_k_marginal(score, k);
    let Some(cut) = cut else {
        return (x, None);
    };
    let sure: usize = score.iter().filter(|&&s| s > cut).count();
    let tied: Vec<usize> = (0..score.len()).filter(|&i| score[i] == cut).collect();
    let mut out: Vec<f64> = score.iter().map(|&s| if s > cut { 1.0 } else { 0.0 }).collect();
    for i in choose(rng, &tied, k - sure) {
        out[i] = 1.0;
    }
    (out, Some(cut))
}

/// Convenience: marginal outcome of `mech` on a profile.
pub fn evaluate(mech: &dyn Mechanism, profile: &ValuationProfile) -> Result<Outcome> {
    mech.marginal(profile.values())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn top_k_splits_ties_at_the_cutoff() {
        let (x, cut) = top_k_marginal(&[4.0, 4.0, 1.0], 1);
        assert_eq!(x, vec![0.5, 0.5, 0.0]);
        assert_eq!(cut, Some(4.0));
        let (x, cut) = top_k_marginal(&[2.0, 1.0], 3);
        assert_eq!(x, vec![1.0, 1.0]);
        assert_eq!(cut, None);
    }

    #[test]
    fn top_k_draw_uses_all_units() {
        let mut rng = stream(3, 0);
        for _ in 0..50 {
            let (x, _) = top_k_realize(&[5.0, 3.0, 3.0, 3.0, 1.0], 2, &mut rng);
            assert_eq!(x[0], 1.0);
            assert_eq!(x[4], 0.0);
            assert_eq!(x.iter().sum::<f64>(), 2.0);
        }
    }
}
