use rand::{Rng, RngCore};

use super::{check_bids, check_units, choose, Mechanism, Outcome, OutcomeMode};
use crate::benchmark::full_surplus;
use crate::dist::ValuationProfile;
use crate::error::Result;

/// Logarithmic-price mechanism: pick `j` uniformly from the exponent range,
/// then run a k-unit lottery among the `2^j` highest bidders at price
/// `v_{2^j + 1}` (zero past the end of the profile).
///
/// Membership in the top `2^j` is by rank, with uniform tie-breaking at the
/// price-setting bid. Agents tied with the price pay their value and so
/// never change the residual surplus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LogPrice {
    k: usize,
}

/// Exponents `j` of the candidate group sizes `2^j`: from `log2` of `k`
/// rounded down to a power of two, to `log2` of `n` rounded up.
pub fn log_price_exponents(n: usize, k: usize) -> Vec<u32> {
    let lo = k.max(1).ilog2();
    let hi = n.max(1).next_power_of_two().ilog2().max(lo);
    (lo..=hi).collect()
}

/// Guaranteed fraction of the full surplus, `V* / (2 (1 + log2(n/k)))`.
pub fn log_price_bound(profile: &ValuationProfile, k: usize) -> f64 {
    let ratio = profile.len().max(k) as f64 / k as f64;
    full_surplus(profile, k) / (2.0 * (1.0 + ratio.log2()))
}

impl LogPrice {
    pub fn new(k: usize) -> Result<Self> {
        check_units(k)?;
        Ok(LogPrice { k })
    }

    /// Win probabilities and the price for group size `m`.
    fn group_rule(&self, bids: &[f64], sorted: &[f64], m: usize) -> (Vec<f64>, f64) {
        let n = bids.len();
        if m >= n {
            let share = if n == 0 { 0.0 } else { self.k.min(n) as f64 / n as f64 };
            return (vec![share; n], 0.0);
        }
        let price = sorted[m];
        let above = sorted.iter().take_while(|&&s| s > price).count();
        let tied = bids.iter().filter(|&&b| b == price).count();
        let share = self.k.min(m) as f64 / m as f64;
        let tied_in = (m - above) as f64 / tied as f64;
        let x = bids
            .iter()
            .map(|&b| {
                if b > price {
                    share
                } else if b == price {
                    share * tied_in
                } else {
                    0.0
                }
            })
            .collect();
        (x, price)
    }
}

fn sorted_desc(bids: &[f64]) -> Vec<f64> {
    let mut s = bids.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

impl Mechanism for LogPrice {
    fn name(&self) -> String {
        "logprice".into()
    }

    fn units(&self) -> usize {
        self.k
    }

    fn marginal(&self, bids: &[f64]) -> Result<Outcome> {
        check_bids(bids)?;
        let n = bids.len();
        let sorted = sorted_desc(bids);
        let js = log_price_exponents(n, self.k);
        let w = 1.0 / js.len() as f64;
        let mut x = vec![0.0; n];
        let mut pay = vec![0.0; n];
        for &j in &js {
            let (xj, price) = self.group_rule(bids, &sorted, 1usize << j);
            for i in 0..n {
                x[i] += w * xj[i];
                pay[i] += w * xj[i] * price;
            }
        }
        Ok(Outcome::new(bids, x, pay, OutcomeMode::Marginal))
    }

    fn realize(&self, bids: &[f64], rng: &mut dyn RngCore) -> Result<Outcome> {
        check_bids(bids)?;
        let n = bids.len();
        let js = log_price_exponents(n, self.k);
        let m = 1usize << js[rng.random_range(0..js.len())];
        let sorted = sorted_desc(bids);
        let (group, price): (Vec<usize>, f64) = if m >= n {
            ((0..n).collect(), 0.0)
        } else {
            let price = sorted[m];
            let mut group: Vec<usize> = (0..n).filter(|&i| bids[i] > price).collect();
            let tied: Vec<usize> = (0..n).filter(|&i| bids[i] == price).collect();
            let fill = m - group.len();
            group.extend(choose(rng, &tied, fill));
            (group, price)
        };
        let mut x = vec![0.0; n];
        for i in choose(rng, &group, self.k) {
            x[i] = 1.0;
        }
        let price = vec![price; n];
        Ok(Outcome::from_prices(bids, x, &price, OutcomeMode::Realized))
    }
}

/// Exact expected residual surplus of the log-price mechanism.
pub fn expected_log_price(profile: &ValuationProfile, k: usize) -> Result<f64> {
    LogPrice::new(k)?.expected_residual(profile.values())
}

/// One play of the log-price mechanism.
pub fn realized_log_price(profile: &ValuationProfile, k: usize, rng: &mut dyn RngCore) -> Result<Outcome> {
    LogPrice::new(k)?.realize(profile.values(), rng)
}
