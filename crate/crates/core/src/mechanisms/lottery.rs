use rand::RngCore;

use super::{check_bids, check_price, check_units, choose, Mechanism, Outcome, OutcomeMode};
use crate::dist::ValuationProfile;
use crate::error::{Error, Result};

/// Expected residual surplus of the k-unit p-lottery; eligibility is `v >= p`.
pub fn expected_p_lottery(profile: &ValuationProfile, k: usize, p: f64) -> f64 {
    p_lottery_value(profile.values(), k, p)
}

pub(crate) fn p_lottery_value(values: &[f64], k: usize, p: f64) -> f64 {
    let (m, total) = values
        .iter()
        .filter(|&&v| v >= p)
        .fold((0usize, 0.0), |(m, s), &v| (m + 1, s + (v - p)));
    if m == 0 {
        return 0.0;
    }
    k.min(m) as f64 / m as f64 * total
}

/// Win probabilities and the common price of the p-lottery.
pub(crate) fn p_lottery_rule(bids: &[f64], k: usize, p: f64) -> Vec<f64> {
    let m = bids.iter().filter(|&&b| b >= p).count();
    let share = if m == 0 { 0.0 } else { k.min(m) as f64 / m as f64 };
    bids.iter().map(|&b| if b >= p { share } else { 0.0 }).collect()
}

/// The three regimes of the (p,q)-lottery against bids `s = #{b > p}` and
/// `t = #{q < b <= p}`.
#[derive(Debug, Clone, Copy, PartialEq)]
enum PqCase {
    /// `s > k`: k-unit lottery on the top agents at price `p`.
    Rationed { s: usize },
    /// `s + t <= k`: everyone above `q` wins at price `q`.
    Everyone,
    /// Top agents win surely at the blended price, band agents share `k - s`
    /// units at price `q`.
    Split { s: usize, t: usize, blended: f64 },
}

fn pq_case(bids: &[f64], k: usize, p: f64, q: f64) -> PqCase {
    let s = bids.iter().filter(|&&b| b > p).count();
    let t = bids.iter().filter(|&&b| b > q && b <= p).count();
    if s > k {
        PqCase::Rationed { s }
    } else if s + t <= k {
        PqCase::Everyone
    } else {
        let blended = ((k - s + 1) as f64 * q + (s + t - k) as f64 * p) / (t + 1) as f64;
        PqCase::Split { s, t, blended }
    }
}

/// Win probabilities and conditional prices of the (p,q)-lottery.
pub(crate) fn pq_lottery_rule(bids: &[f64], k: usize, p: f64, q: f64) -> (Vec<f64>, Vec<f64>) {
    let n = bids.len();
    let mut x = vec![0.0; n];
    let mut price = vec![0.0; n];
    match pq_case(bids, k, p, q) {
        PqCase::Rationed { s } => {
            for (i, &b) in bids.iter().enumerate() {
                if b > p {
                    x[i] = k as f64 / s as f64;
                    price[i] = p;
                }
            }
        }
        PqCase::Everyone => {
            for (i, &b) in bids.iter().enumerate() {
                if b > q {
                    x[i] = 1.0;
                    price[i] = q;
                }
            }
        }
        PqCase::Split { s, t, blended } => {
            for (i, &b) in bids.iter().enumerate() {
                if b > p {
                    x[i] = 1.0;
                    price[i] = blended;
                } else if b > q {
                    x[i] = (k - s) as f64 / t as f64;
                    price[i] = q;
                }
            }
        }
    }
    (x, price)
}

fn check_pq(p: f64, q: f64) -> Result<()> {
    check_price("p", p)?;
    check_price("q", q)?;
    if q > p {
        return Err(Error::input(format!("(p,q)-lottery needs q <= p, got p={p}, q={q}")));
    }
    Ok(())
}

/// Expected residual surplus of the k-unit (p,q)-lottery.
pub fn expected_pq_lottery(profile: &ValuationProfile, k: usize, p: f64, q: f64) -> Result<f64> {
    check_units(k)?;
    check_pq(p, q)?;
    Ok(pq_lottery_value(profile.values(), k, p, q))
}

pub(crate) fn pq_lottery_value(values: &[f64], k: usize, p: f64, q: f64) -> f64 {
    let above = |c: f64| values.iter().filter(move |&&v| v > c);
    match pq_case(values, k, p, q) {
        PqCase::Rationed { s } => k as f64 / s as f64 * above(p).map(|v| v - p).sum::<f64>(),
        PqCase::Everyone => above(q).map(|v| v - q).sum(),
        PqCase::Split { s, t, blended } => {
            let top: f64 = above(p).map(|v| v - blended).sum();
            let band: f64 = values.iter().filter(|&&v| v > q && v <= p).map(|v| v - q).sum();
            top + (k - s) as f64 / t as f64 * band
        }
    }
}

/// One play of the (p,q)-lottery.
pub fn run_pq_lottery(
    profile: &ValuationProfile,
    k: usize,
    p: f64,
    q: f64,
    rng: &mut dyn RngCore,
) -> Result<Outcome> {
    PqLottery::new(k, p, q)?.realize(profile.values(), rng)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PLottery {
    k: usize,
    p: f64,
}

impl PLottery {
    pub fn new(k: usize, p: f64) -> Result<Self> {
        check_units(k)?;
        check_price("p", p)?;
        Ok(PLottery { k, p })
    }

    pub fn price(&self) -> f64 {
        self.p
    }
}

impl Mechanism for PLottery {
    fn name(&self) -> String {
        format!("plottery(p={})", self.p)
    }

    fn units(&self) -> usize {
        self.k
    }

    fn marginal(&self, bids: &[f64]) -> Result<Outcome> {
        check_bids(bids)?;
        let x = p_lottery_rule(bids, self.k, self.p);
        let price = vec![self.p; bids.len()];
        Ok(Outcome::from_prices(bids, x, &price, OutcomeMode::Marginal))
    }

    fn realize(&self, bids: &[f64], rng: &mut dyn RngCore) -> Result<Outcome> {
        check_bids(bids)?;
        let eligible: Vec<usize> = (0..bids.len()).filter(|&i| bids[i] >= self.p).collect();
        let mut x = vec![0.0; bids.len()];
        for i in choose(rng, &eligible, self.k) {
            x[i] = 1.0;
        }
        let price = vec![self.p; bids.len()];
        Ok(Outcome::from_prices(bids, x, &price, OutcomeMode::Realized))
    }

    fn breakpoints(&self, bids: &[f64], agent: usize) -> Vec<f64> {
        let mut b: Vec<f64> = bids.iter().enumerate().filter(|&(j, _)| j != agent).map(|(_, &b)| b).collect();
        b.push(self.p);
        b
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PqLottery {
    k: usize,
    p: f64,
    q: f64,
}

impl PqLottery {
    pub fn new(k: usize, p: f64, q: f64) -> Result<Self> {
        check_units(k)?;
        check_pq(p, q)?;
        Ok(PqLottery { k, p, q })
    }

    pub fn prices(&self) -> (f64, f64) {
        (self.p, self.q)
    }
}

impl Mechanism for PqLottery {
    fn name(&self) -> String {
        format!("pqlottery(p={},q={})", self.p, self.q)
    }

    fn units(&self) -> usize {
        self.k
    }

    fn marginal(&self, bids: &[f64]) -> Result<Outcome> {
        check_bids(bids)?;
        let (x, price) = pq_lottery_rule(bids, self.k, self.p, self.q);
        Ok(Outcome::from_prices(bids, x, &price, OutcomeMode::Marginal))
    }

    fn realize(&self, bids: &[f64], rng: &mut dyn RngCore) -> Result<Outcome> {
        check_bids(bids)?;
        let (p, q, k) = (self.p, self.q, self.k);
        let (x_marg, price) = pq_lottery_rule(bids, k, p, q);
        let top: Vec<usize> = (0..bids.len()).filter(|&i| bids[i] > p).collect();
        let band: Vec<usize> = (0..bids.len()).filter(|&i| bids[i] > q && bids[i] <= p).collect();
        let mut x = vec![0.0; bids.len()];
        match pq_case(bids, k, p, q) {
            PqCase::Rationed { .. } => {
                for i in choose(rng, &top, k) {
                    x[i] = 1.0;
                }
            }
            PqCase::Everyone => {
                for &i in top.iter().chain(&band) {
                    x[i] = 1.0;
                }
            }
            PqCase::Split { s, .. } => {
                for &i in &top {
                    x[i] = 1.0;
                }
                for i in choose(rng, &band, k - s) {
                    x[i] = 1.0;
                }
            }
        }
        debug_assert!(x.iter().zip(&x_marg).all(|(r, m)| *r == 0.0 || *m > 0.0));
        Ok(Outcome::from_prices(bids, x, &price, OutcomeMode::Realized))
    }

    fn breakpoints(&self, bids: &[f64], agent: usize) -> Vec<f64> {
        let mut b: Vec<f64> = bids.iter().enumerate().filter(|&(j, _)| j != agent).map(|(_, &b)| b).collect();
        b.extend([self.p, self.q]);
        b
    }
}
