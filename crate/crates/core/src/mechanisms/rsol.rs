use rand::{Rng, RngCore};

use super::lottery::p_lottery_rule;
use super::{check_bids, check_units, top_k_marginal, Mechanism, Outcome, OutcomeMode, PLottery, Vickrey};
use crate::benchmark::best_p_lottery;
use crate::dist::ValuationProfile;
use crate::error::{Error, Result};
use crate::simlab::{monte_carlo_on_profile, MechanismEval};

/// Largest agent count for exact partition enumeration.
pub const MAX_EXACT_RSOL: usize = 20;

/// Random Sampling Optimal Lottery: split the agents at random, learn the
/// best posted lottery price on one half, and sell to the other half either
/// through that lottery or through Vickrey, each with probability 1/2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rsol {
    k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RsolMode {
    Exact,
    MonteCarlo { reps: usize, seed: u64 },
}

impl Rsol {
    pub fn new(k: usize) -> Result<Self> {
        check_units(k)?;
        Ok(Rsol { k })
    }

    fn learned_price(&self, bids: &[f64], second: &[usize]) -> f64 {
        if second.is_empty() {
            return 0.0;
        }
        let vals: Vec<f64> = second.iter().map(|&i| bids[i]).collect();
        best_p_lottery(&vals, self.k).1
    }
}

impl Mechanism for Rsol {
    fn name(&self) -> String {
        "rsol".into()
    }

    fn units(&self) -> usize {
        self.k
    }

    /// Exact: averages over all `2^n` partitions and both branches.
    fn marginal(&self, bids: &[f64]) -> Result<Outcome> {
        check_bids(bids)?;
        let n = bids.len();
        if n > MAX_EXACT_RSOL {
            return Err(Error::Capacity { what: "exact RSOL agents", n, max: MAX_EXACT_RSOL });
        }
        let weight = 0.5f64.powi(n as i32);
        let mut x = vec![0.0; n];
        let mut pay = vec![0.0; n];
        let mut first = Vec::with_capacity(n);
        let mut second = Vec::with_capacity(n);
        let mut sub = Vec::with_capacity(n);
        for mask in 0u32..(1u32 << n) {
            first.clear();
            second.clear();
            for i in 0..n {
                if mask >> i & 1 == 1 {
                    first.push(i);
                } else {
                    second.push(i);
                }
            }
            if first.is_empty() {
                continue;
            }
            let p2 = self.learned_price(bids, &second);
            sub.clear();
            sub.extend(first.iter().map(|&i| bids[i]));
            let lot = p_lottery_rule(&sub, self.k, p2);
            let (vic, cut) = top_k_marginal(&sub, self.k);
            let cut = cut.unwrap_or(0.0);
            for (slot, &i) in first.iter().enumerate() {
                x[i] += weight * 0.5 * (lot[slot] + vic[slot]);
                pay[i] += weight * 0.5 * (lot[slot] * p2 + vic[slot] * cut);
            }
        }
        Ok(Outcome::new(bids, x, pay, OutcomeMode::Marginal))
    }

    fn realize(&self, bids: &[f64], rng: &mut dyn RngCore) -> Result<Outcome> {
        check_bids(bids)?;
        let n = bids.len();
        let (first, second): (Vec<usize>, Vec<usize>) = (0..n).partition(|_| rng.random_bool(0.5));
        let p2 = self.learned_price(bids, &second);
        let sub: Vec<f64> = first.iter().map(|&i| bids[i]).collect();
        let inner = if rng.random_bool(0.5) {
            PLottery::new(self.k, p2)?.realize(&sub, rng)?
        } else {
            Vickrey::new(self.k)?.realize(&sub, rng)?
        };
        let mut x = vec![0.0; n];
        let mut pay = vec![0.0; n];
        for (slot, &i) in first.iter().enumerate() {
            x[i] = inner.allocation[slot];
            pay[i] = inner.payments[slot];
        }
        Ok(Outcome::new(bids, x, pay, OutcomeMode::Realized))
    }
}

/// One play of RSOL.
pub fn rsol(profile: &ValuationProfile, k: usize, rng: &mut dyn RngCore) -> Result<Outcome> {
    Rsol::new(k)?.realize(profile.values(), rng)
}

/// Expected residual surplus of RSOL, exact or by Monte-Carlo over its coins.
pub fn expected_rsol(profile: &ValuationProfile, k: usize, mode: RsolMode) -> Result<MechanismEval> {
    let mech = Rsol::new(k)?;
    match mode {
        RsolMode::Exact => Ok(MechanismEval::exact(mech.marginal(profile.values())?.residual_surplus)),
        RsolMode::MonteCarlo { reps, seed } => monte_carlo_on_profile(&mech, profile, reps, seed),
    }
}
