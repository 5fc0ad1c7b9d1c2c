use rand::{Rng, RngCore};

use super::lottery::p_lottery_rule;
use super::{check_bids, top_k_marginal, Mechanism, Outcome, OutcomeMode, PLottery, Vickrey};
use crate::dist::ValuationProfile;
use crate::error::{Error, Result};
use crate::simlab::MechanismEval;

const VICKREY_WEIGHT: f64 = 1.0 / 3.0;

/// Two agents, one unit: Vickrey with probability 1/3, otherwise a free
/// lottery.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MixedVickreyLottery;

fn check_pair(bids: &[f64]) -> Result<()> {
    check_bids(bids)?;
    if bids.len() != 2 {
        return Err(Error::input(format!("the mixture mechanism needs exactly 2 agents, got {}", bids.len())));
    }
    Ok(())
}

impl Mechanism for MixedVickreyLottery {
    fn name(&self) -> String {
        "mix".into()
    }

    fn units(&self) -> usize {
        1
    }

    fn marginal(&self, bids: &[f64]) -> Result<Outcome> {
        check_pair(bids)?;
        let lot = p_lottery_rule(bids, 1, 0.0);
        let (vic, cut) = top_k_marginal(bids, 1);
        let cut = cut.unwrap_or(0.0);
        let x = (0..2).map(|i| VICKREY_WEIGHT * vic[i] + (1.0 - VICKREY_WEIGHT) * lot[i]).collect();
        let pay = (0..2).map(|i| VICKREY_WEIGHT * vic[i] * cut).collect();
        Ok(Outcome::new(bids, x, pay, OutcomeMode::Marginal))
    }

    fn realize(&self, bids: &[f64], rng: &mut dyn RngCore) -> Result<Outcome> {
        check_pair(bids)?;
        if rng.random_bool(VICKREY_WEIGHT) {
            Vickrey::new(1)?.realize(bids, rng)
        } else {
            PLottery::new(1, 0.0)?.realize(bids, rng)
        }
    }
}

/// Exact expected residual surplus of the mixture on a 2-agent profile,
/// `(1/3)(v1 - v2) + (2/3)(v1 + v2)/2`.
pub fn mixed_vickrey_lottery(profile: &ValuationProfile) -> Result<MechanismEval> {
    check_pair(profile.values())?;
    let (v1, v2) = (profile.ranked(1), profile.ranked(2));
    let value = VICKREY_WEIGHT * (v1 - v2) + (1.0 - VICKREY_WEIGHT) * 0.5 * (v1 + v2);
    Ok(MechanismEval::exact(value))
}
