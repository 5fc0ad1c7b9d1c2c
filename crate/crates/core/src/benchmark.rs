//! The distribution-free benchmark `G` (best (p,q)-lottery on the profile),
//! single-price lottery optimization, and the lottery surplus identity.

use serde::Serialize;

use crate::dist::ValuationProfile;
use crate::error::{Error, Result};
use crate::mechanisms::check_units;

/// Relative slack below which two candidate values count as tied; ties go
/// to the smaller prices.
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchmarkResult {
    pub value: f64,
    pub best_p: f64,
    pub best_q: f64,
    pub best_single_p: f64,
    pub single_value: f64,
}

/// Descending values with prefix sums, for O(log n) lottery evaluation.
struct Ranked {
    sorted: Vec<f64>,
    prefix: Vec<f64>,
}

impl Ranked {
    fn new(values: &[f64]) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let mut prefix = Vec::with_capacity(sorted.len() + 1);
        prefix.push(0.0);
        for v in &sorted {
            prefix.push(prefix.last().unwrap() + v);
        }
        Ranked { sorted, prefix }
    }

    fn count_gt(&self, x: f64) -> usize {
        self.sorted.partition_point(|&v| v > x)
    }

    fn count_ge(&self, x: f64) -> usize {
        self.sorted.partition_point(|&v| v >= x)
    }

    /// Candidate prices `{0} U {v_i}`, ascending and distinct.
    fn candidates(&self) -> Vec<f64> {
        let mut c: Vec<f64> = std::iter::once(0.0).chain(self.sorted.iter().rev().copied()).collect();
        c.dedup();
        c
    }

    fn p_lottery(&self, k: usize, p: f64) -> f64 {
        let m = self.count_ge(p);
        if m == 0 {
            return 0.0;
        }
        k.min(m) as f64 / m as f64 * (self.prefix[m] - m as f64 * p)
    }

    fn pq_lottery(&self, k: usize, p: f64, q: f64) -> f64 {
        let s = self.count_gt(p);
        let st = self.count_gt(q);
        let t = st - s;
        if s > k {
            k as f64 / s as f64 * (self.prefix[s] - s as f64 * p)
        } else if st <= k {
            self.prefix[st] - st as f64 * q
        } else {
            let blended = ((k - s + 1) as f64 * q + (s + t - k) as f64 * p) / (t + 1) as f64;
            let band = self.prefix[st] - self.prefix[s] - t as f64 * q;
            (self.prefix[s] - s as f64 * blended) + (k - s) as f64 / t as f64 * band
        }
    }
}

fn beats(value: f64, best: f64) -> bool {
    value > best + TIE_TOL * best.abs().max(1.0)
}

/// Best k-unit p-lottery over all prices: `(value, price)`.
///
/// On each stretch between profile values the lottery value falls with the
/// price, so the optimum sits at a candidate `c` or just above it, where the
/// agents at exactly `c` drop out. `c.next_up()` is the price that admits
/// exactly the agents strictly above `c`.
pub(crate) fn best_p_lottery(values: &[f64], k: usize) -> (f64, f64) {
    let r = Ranked::new(values);
    let mut best = (r.p_lottery(k, 0.0), 0.0);
    for c in r.candidates() {
        for p in [c, c.next_up()] {
            let v = r.p_lottery(k, p);
            if beats(v, best.0) {
                best = (v, p);
            }
        }
    }
    best
}

/// Best single-price lottery: `(value, p)`, smallest price on ties.
pub fn optimal_p_lottery(profile: &ValuationProfile, k: usize) -> Result<(f64, f64)> {
    check_units(k)?;
    Ok(best_p_lottery(profile.values(), k))
}

/// `G(v)`: the best (p,q)-lottery over candidate prices `{0} U {v_i}` with
/// `q <= p`, lexicographically smallest `(p, q)` on ties.
pub fn benchmark_g(profile: &ValuationProfile, k: usize) -> Result<BenchmarkResult> {
    check_units(k)?;
    let r = Ranked::new(profile.values());
    let cands = r.candidates();
    let (mut value, mut best_p, mut best_q) = (f64::NEG_INFINITY, 0.0, 0.0);
    for (ip, &p) in cands.iter().enumerate() {
        for &q in &cands[..=ip] {
            let v = r.pq_lottery(k, p, q);
            if value == f64::NEG_INFINITY || beats(v, value) {
                (value, best_p, best_q) = (v, p, q);
            }
        }
    }
    let (single_value, best_single_p) = best_p_lottery(profile.values(), k);
    Ok(BenchmarkResult {
        value,
        best_p,
        best_q,
        best_single_p,
        single_value,
    })
}

/// `V*`: the sum of the `min(k, n)` highest values.
pub fn full_surplus(profile: &ValuationProfile, k: usize) -> f64 {
    profile.sorted().iter().take(k).sum()
}

/// Right-hand side of the lottery surplus identity
/// `W(T, v_{l+1}) = min(k, n_l) / n_l * sum_{i <= l} n_i d_i`, where `n_i`
/// counts members of `T` (agent indices) among the `i` highest values.
///
/// When `v_l = v_{l+1}`, `l` is moved back to the last rank strictly above
/// `v_{l+1}`, so the formula prices exactly the agents strictly above
/// `v_{l+1}`.
pub fn lottery_surplus_identity(profile: &ValuationProfile, t: &[usize], k: usize, ell: usize) -> Result<f64> {
    check_units(k)?;
    let n = profile.len();
    if ell == 0 || ell > n {
        return Err(Error::input(format!("index l must lie in 1..={n}, got {ell}")));
    }
    let mut member = vec![false; n];
    let mut rank_of = vec![0; n];
    for (rank, &agent) in profile.order().iter().enumerate() {
        rank_of[agent] = rank;
    }
    for &agent in t {
        if agent >= n {
            return Err(Error::input(format!("agent {agent} not in a profile of {n}")));
        }
        member[rank_of[agent]] = true;
    }

    let price = profile.ranked(ell + 1);
    let ell = profile.sorted().partition_point(|&v| v > price);
    let gaps = profile.gaps();
    let mut count = 0usize;
    let mut weighted = 0.0;
    for i in 0..ell {
        count += member[i] as usize;
        weighted += count as f64 * gaps[i];
    }
    if count == 0 {
        return Ok(0.0);
    }
    Ok(k.min(count) as f64 / count as f64 * weighted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::{expected_p_lottery, expected_pq_lottery};

    fn prof(v: &[f64]) -> ValuationProfile {
        ValuationProfile::new(v.to_vec()).unwrap()
    }

    #[test]
    fn benchmark_examples() {
        let g = benchmark_g(&prof(&[3.0, 1.0]), 1).unwrap();
        assert_eq!((g.value, g.best_p, g.best_q), (2.5, 1.0, 0.0));
        let g = benchmark_g(&prof(&[2.0, 2.0]), 1).unwrap();
        assert_eq!((g.value, g.best_p, g.best_q), (2.0, 0.0, 0.0));
        let g = benchmark_g(&prof(&[4.0, 1.0, 2.5]), 3).unwrap();
        assert_eq!((g.value, g.best_p, g.best_q), (7.5, 0.0, 0.0));
    }

    #[test]
    fn fast_evaluators_match_the_direct_ones() {
        let p = prof(&[5.0, 4.0, 4.0, 3.0, 1.0, 0.0]);
        let r = Ranked::new(p.values());
        for k in 1..=7 {
            for &a in &r.candidates() {
                assert!((r.p_lottery(k, a) - expected_p_lottery(&p, k, a)).abs() < 1e-12);
                for &b in r.candidates().iter().filter(|&&b| b <= a) {
                    let direct = expected_pq_lottery(&p, k, a, b).unwrap();
                    assert!((r.pq_lottery(k, a, b) - direct).abs() < 1e-12, "k={k} p={a} q={b}");
                }
            }
        }
    }

    #[test]
    fn single_price_examples() {
        assert_eq!(optimal_p_lottery(&prof(&[3.0, 1.0]), 1).unwrap(), (2.0, 0.0));
        let (value, p) = optimal_p_lottery(&prof(&[10.0, 1.0, 1.0, 1.0]), 1).unwrap();
        assert_eq!(p, 1.0f64.next_up());
        assert!((value - 9.0).abs() < 1e-12);
        assert_eq!(optimal_p_lottery(&prof(&[2.0; 5]), 3).unwrap(), (6.0, 0.0));
    }

    #[test]
    fn identity_examples() {
        let p = prof(&[3.0, 1.0]);
        assert_eq!(lottery_surplus_identity(&p, &[0, 1], 1, 1).unwrap(), 2.0);
        let eq = prof(&[2.0; 4]);
        for ell in 1..4 {
            assert_eq!(lottery_surplus_identity(&eq, &[0, 1, 2, 3], 2, ell).unwrap(), 0.0);
        }
        assert_eq!(lottery_surplus_identity(&eq, &[0, 1, 2, 3], 2, 4).unwrap(), 4.0);
        assert!(lottery_surplus_identity(&p, &[0], 1, 0).is_err());
        assert_eq!(lottery_surplus_identity(&p, &[1], 1, 1).unwrap(), 0.0);
    }

    #[test]
    fn full_surplus_examples() {
        assert_eq!(full_surplus(&prof(&[3.0, 1.0]), 1), 3.0);
        assert_eq!(full_surplus(&prof(&[3.0, 1.0]), 2), 4.0);
        assert_eq!(full_surplus(&prof(&[]), 1), 0.0);
    }
}
