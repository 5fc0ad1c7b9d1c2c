use std::sync::Arc;

use burnlab::benchmark::{benchmark_g, full_surplus, lottery_surplus_identity, optimal_p_lottery};
use burnlab::dist::{ValuationProfile, ValueDistribution};
use burnlab::ironing::iron;
use burnlab::mechanisms::{bayes_optimal_marginal, expected_p_lottery, vickrey};
use burnlab::rng::stream;
use proptest::prelude::*;
use rand::Rng;

fn prof(v: &[f64]) -> ValuationProfile {
    ValuationProfile::new(v.to_vec()).unwrap()
}

fn random_values(rng: &mut impl Rng, max_n: usize) -> Vec<f64> {
    let n = rng.random_range(1..=max_n);
    (0..n).map(|_| rng.random_range(0.0..10.0)).collect()
}

/// Strict-threshold counts and sums, `#{v > x}` and `sum{v > x}`.
fn above(v: &[f64], x: f64) -> (f64, f64) {
    v.iter().filter(|&&u| u > x).fold((0.0, 0.0), |(c, s), &u| (c + 1.0, s + u))
}

/// (p,q)-lottery from strict counts: `s` agents above `p`, `t` in `(q, p]`.
fn pq_from_counts(k: f64, p: f64, q: f64, (s, ss): (f64, f64), (st, sst): (f64, f64)) -> f64 {
    let t = st - s;
    if s > k {
        return k / s * (ss - s * p);
    }
    let y = ((k - s + 1.0) / (t + 1.0)).min(1.0);
    let band = if t > 0.0 { ((k - s) / t).min(1.0) * (sst - ss - t * q) } else { 0.0 };
    ss - s * (p - (p - q) * y) + band
}

#[test]
fn benchmark_dominates_lottery_vickrey_and_bayes() {
    let priors = ValueDistribution::stock();
    let ironed: Vec<_> = priors.iter().map(|d| Arc::new(iron(d, 1 << 12).unwrap())).collect();
    let mut rng = stream(41, 0);
    for (d, iv) in priors.iter().zip(&ironed) {
        for _ in 0..500 {
            let n = rng.random_range(1..=8);
            let k = rng.random_range(1..=3);
            let p = d.sample_profile(n, &mut rng);
            let g = benchmark_g(&p, k).unwrap().value;
            let tol = 1e-9 * full_surplus(&p, n).max(1.0);
            assert!(g + tol >= expected_p_lottery(&p, k, 0.0));
            assert!(g + tol >= vickrey(&p, k).unwrap().residual_surplus);
            let bayes = bayes_optimal_marginal(iv.clone(), &p, k).unwrap().residual_surplus;
            assert!(g + tol >= bayes, "{}: G={g} bayes={bayes} on {:?}", d.name(), p.values());
        }
    }
}

#[test]
fn benchmark_examples() {
    let g = benchmark_g(&prof(&[3.0, 1.0]), 1).unwrap();
    assert_eq!((g.value, g.best_p, g.best_q), (2.5, 1.0, 0.0));
    // max{(v1+v2)/2, v1 - v2/2} for two agents and one unit.
    let mut rng = stream(8, 8);
    for _ in 0..1000 {
        let (a, b): (f64, f64) = (rng.random_range(0.0..5.0), rng.random_range(0.0..5.0));
        let (v1, v2) = (a.max(b), a.min(b));
        let g = benchmark_g(&prof(&[a, b]), 1).unwrap().value;
        assert!((g - ((v1 + v2) / 2.0).max(v1 - v2 / 2.0)).abs() <= 1e-12 * v1.max(1.0));
    }
    let g = benchmark_g(&prof(&[2.0, 2.0]), 1).unwrap();
    assert_eq!((g.value, g.best_p, g.best_q), (2.0, 0.0, 0.0));
    let v = [1.0, 7.0, 2.0, 4.5];
    let g = benchmark_g(&prof(&v), 4).unwrap();
    assert_eq!((g.value, g.best_p, g.best_q), (14.5, 0.0, 0.0));
}

#[test]
fn single_price_examples() {
    assert_eq!(optimal_p_lottery(&prof(&[3.0, 1.0]), 1).unwrap(), (2.0, 0.0));
    // Prices just above the three tied 1s sell only to the top agent.
    let (value, p) = optimal_p_lottery(&prof(&[10.0, 1.0, 1.0, 1.0]), 1).unwrap();
    assert!((value - 9.0).abs() < 1e-12 && p > 1.0 && p < 1.0 + 1e-12);
    assert_eq!(value, expected_p_lottery(&prof(&[10.0, 1.0, 1.0, 1.0]), 1, p));
    assert_eq!(optimal_p_lottery(&prof(&[1.5; 6]), 4).unwrap(), (6.0, 0.0));
}

#[test]
fn one_price_is_within_a_factor_two_of_two_prices() {
    let mut rng = stream(2, 2);
    for _ in 0..10_000 {
        let v = random_values(&mut rng, 12);
        let k = rng.random_range(1..=4);
        let r = benchmark_g(&prof(&v), k).unwrap();
        let tol = 1e-9 * r.value.max(1.0);
        assert!(r.single_value <= r.value + tol);
        assert!(r.value <= 2.0 * r.single_value + tol, "{v:?} k={k}: {r:?}");
        assert!(r.value + tol >= expected_p_lottery(&prof(&v), k, 0.0));
    }
}

#[test]
fn worst_one_price_gap_on_engineered_profiles() {
    // One high agent over m low agents: G sells the high agent at a blended
    // price and rations the rest, while a single price must pick one side.
    let mut worst = (1.0, String::new());
    for m in 1..=64 {
        for h in [2.0, 4.0, 8.0, 16.0, 64.0, 256.0, 1024.0] {
            let mut v = vec![h];
            v.extend(std::iter::repeat_n(1.0, m));
            for k in [1usize, 2] {
                let r = benchmark_g(&prof(&v), k).unwrap();
                let ratio = r.value / r.single_value;
                assert!(ratio <= 2.0 + 1e-12);
                if ratio > worst.0 {
                    worst = (ratio, format!("h={h} m={m} k={k}"));
                }
            }
        }
    }
    println!("worst G / single-price ratio {:.4} at {}", worst.0, worst.1);
    assert!(worst.0 > 1.3, "{worst:?}");
}

#[test]
fn candidate_prices_match_a_dense_grid() {
    let mut rng = stream(3, 3);
    let points = 1000;
    for _ in 0..1000 {
        let v = random_values(&mut rng, 8);
        let k = rng.random_range(1..=4) as f64;
        let top = v.iter().cloned().fold(0.0, f64::max);
        let grid: Vec<f64> = (0..points).map(|j| top * 1.05 * j as f64 / (points - 1) as f64).collect();
        let counts: Vec<(f64, f64)> = grid.iter().map(|&x| above(&v, x)).collect();
        let mut dense = f64::NEG_INFINITY;
        for ip in 0..points {
            for iq in 0..=ip {
                dense = dense.max(pq_from_counts(k, grid[ip], grid[iq], counts[ip], counts[iq]));
            }
        }
        let g = benchmark_g(&prof(&v), k as usize).unwrap().value;
        assert!(dense <= g + 1e-9 * g.max(1.0), "{v:?} k={k}: dense {dense} > {g}");
    }
}

/// Direct lottery value on the agents of `t` strictly above `v_{l+1}`.
fn identity_oracle(v: &[f64], t: &[usize], k: usize, ell: usize) -> f64 {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let price = sorted.get(ell).copied().unwrap_or(0.0);
    let winners: Vec<f64> = t.iter().map(|&i| v[i]).filter(|&x| x > price).collect();
    if winners.is_empty() {
        return 0.0;
    }
    let m = winners.len() as f64;
    (k as f64).min(m) / m * winners.iter().map(|x| x - price).sum::<f64>()
}

proptest! {
    #[test]
    fn surplus_identity_matches_direct_lottery(
        raw in prop::collection::vec(0u8..6, 1..10),
        mask in any::<u16>(),
        k in 1usize..4,
        ell_seed in any::<usize>(),
    ) {
        // Small integer values force ties.
        let v: Vec<f64> = raw.iter().map(|&x| x as f64).collect();
        let n = v.len();
        let t: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let ell = 1 + ell_seed % n;
        let got = lottery_surplus_identity(&prof(&v), &t, k, ell).unwrap();
        let want = identity_oracle(&v, &t, k, ell);
        prop_assert!((got - want).abs() <= 1e-12 * want.max(1.0), "{got} vs {want}");
    }

    #[test]
    fn full_supply_benchmark_is_the_full_surplus(v in prop::collection::vec(0.0f64..10.0, 1..8), extra in 0usize..3) {
        let k = v.len() + extra;
        let r = benchmark_g(&prof(&v), k).unwrap();
        let total: f64 = v.iter().sum();
        prop_assert!((r.value - total).abs() <= 1e-12 * total.max(1.0));
        prop_assert_eq!((r.best_p, r.best_q), (0.0, 0.0));
        prop_assert!((full_surplus(&prof(&v), k) - total).abs() <= 1e-12 * total.max(1.0));
    }
}
