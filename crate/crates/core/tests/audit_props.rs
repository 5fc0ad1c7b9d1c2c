use std::sync::Arc;

use burnlab::audit::*;
use burnlab::dist::ValueDistribution;
use burnlab::ironing::iron;
use burnlab::mechanisms::*;

fn corpus_mechanisms(d: &ValueDistribution, k: usize) -> Vec<Box<dyn Mechanism>> {
    let iv = Arc::new(iron(d, 1 << 12).unwrap());
    let mid = d.quantile(0.5);
    vec![
        Box::new(PLottery::new(k, mid).unwrap()),
        Box::new(PqLottery::new(k, d.quantile(0.8), d.quantile(0.3)).unwrap()),
        Box::new(Vickrey::new(k).unwrap()),
        Box::new(LogPrice::new(k).unwrap()),
        Box::new(Rsol::new(k).unwrap()),
        Box::new(BayesOptimal::new(iv, k).unwrap()),
    ]
}

#[test]
fn shipped_mechanisms_pass_the_audit_corpus() {
    for d in ValueDistribution::stock() {
        let profiles = audit_corpus(&d, 100, 6, 17);
        for k in [1usize, 2] {
            for m in corpus_mechanisms(&d, k) {
                for row in audit_profiles(m.as_ref(), &d, &profiles).unwrap() {
                    assert!(row.passed, "{} k={k} on {}: {row:?}", m.name(), d.name());
                    assert!(row.worst <= EXACT_TOL, "{row:?}");
                }
            }
        }
        let pairs: Vec<Vec<f64>> = audit_corpus(&d, 300, 6, 5).into_iter().filter(|v| v.len() == 2).collect();
        assert!(pairs.len() >= 20);
        for row in audit_profiles(&MixedVickreyLottery, &d, &pairs).unwrap() {
            assert!(row.passed, "{row:?}");
        }
    }
}

#[test]
fn first_price_control_fails_with_a_positive_gain() {
    let d = ValueDistribution::uniform(0.0, 1.0).unwrap();
    let profiles = audit_corpus(&d, 100, 6, 17);
    let rows = audit_profiles(&FirstPrice::new(1).unwrap(), &d, &profiles).unwrap();
    let dsic = rows.iter().find(|r| r.check == "dsic").unwrap();
    assert!(!dsic.passed && dsic.worst > 0.01, "{dsic:?}");
    let ident = rows.iter().find(|r| r.check == "payment-identity").unwrap();
    assert!(!ident.passed, "{ident:?}");
}

#[test]
fn blended_two_price_lottery_is_truthful() {
    let m = PqLottery::new(1, 2.0, 1.0).unwrap();
    let grid: Vec<f64> = (0..64).map(|j| j as f64 * 4.0 / 63.0).collect();
    let r = check_dsic(&m, &[3.0, 1.5], &grid, EXACT_TOL).unwrap();
    assert!(r.passed, "{r:?}");
    // Band agent: pays q on winning.
    let fine: Vec<f64> = (0..512).map(|j| j as f64 * 4.0 / 511.0).collect();
    let rule = InterimRule::extract(&m, &[3.0, 1.5], 1, &fine).unwrap();
    assert!(check_payment_identity(&rule, EXACT_TOL).unwrap().passed);
    for (j, &b) in rule.points.iter().enumerate() {
        if b > 1.0 && b <= 2.0 {
            assert!((rule.p[j] - rule.x[j] * 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn identity_examples() {
    let grid: Vec<f64> = (0..300).map(|j| j as f64 / 100.0).collect();
    let vick = InterimRule::extract(&Vickrey::new(1).unwrap(), &[2.0, 1.0], 0, &grid).unwrap();
    for (j, &b) in vick.points.iter().enumerate() {
        if b > 1.0 {
            assert_eq!((vick.x[j], vick.p[j]), (1.0, 1.0));
        }
    }
    assert!(check_payment_identity(&vick, EXACT_TOL).unwrap().passed);
    let free = InterimRule::extract(&PLottery::new(2, 0.0).unwrap(), &[2.0, 1.0, 0.5], 1, &grid).unwrap();
    assert!(free.p.iter().all(|&p| p == 0.0));
    assert!(check_payment_identity(&free, EXACT_TOL).unwrap().passed);

    // A decreasing rule is flagged as non-monotone before any payment check.
    let pts: Vec<f64> = (0..256).map(|j| j as f64).collect();
    let x: Vec<f64> = (0..256).map(|j| if j < 128 { 1.0 } else { 0.0 }).collect();
    let rule = InterimRule::new(pts, x.clone(), vec![0.0; 256], x[..255].to_vec()).unwrap();
    let r = check_payment_identity(&rule, EXACT_TOL).unwrap();
    assert!(!r.passed && !r.monotone);
}

#[test]
fn bayes_interim_rule_steps_at_the_ironed_ends() {
    let d = ValueDistribution::two_piece();
    let iv = Arc::new(iron(&d, 1 << 14).unwrap());
    let piece = iv.flat_pieces()[0];
    let (q, p) = (piece.v_lo, piece.v_hi);
    let m = BayesOptimal::new(iv, 1).unwrap();
    let grid: Vec<f64> = (0..1024).map(|j| j as f64 * 8.0 / 1023.0).collect();
    let opponent = 1.5;
    let rule = InterimRule::extract(&m, &[3.0, opponent], 0, &grid).unwrap();
    for (j, &b) in rule.points.iter().enumerate() {
        let want = if b < q {
            0.0
        } else if b > p {
            1.0
        } else {
            0.5
        };
        if (b - q).abs() > 1e-9 && (b - p).abs() > 1e-9 {
            assert_eq!(rule.x[j], want, "bid {b}");
        }
    }
    assert!(check_payment_identity(&rule, EXACT_TOL).unwrap().passed);
    // Winning price for the top agent: (q + p) / 2.
    let out = m.marginal(&[3.0, opponent]).unwrap();
    assert!((out.payments[0] - (q + p) / 2.0).abs() < 1e-12);
}

#[test]
fn utility_identity_examples() {
    let exp = ValueDistribution::exponential(1.0).unwrap();
    let r = verify_utility_identity(&exp, &PLottery::new(2, 0.0).unwrap(), 4, 20_000, 1).unwrap();
    assert!(r.passed, "{r:?}");
    assert!((r.lhs.mean - 2.0).abs() < 0.05 && (r.rhs.mean - 2.0).abs() < 0.05, "{r:?}");
    let uni = ValueDistribution::uniform(0.0, 1.0).unwrap();
    let r = verify_utility_identity(&uni, &Vickrey::new(1).unwrap(), 2, 20_000, 2).unwrap();
    assert!(r.passed, "{r:?}");
    // One agent served for free: E[u] = E[theta] = mean.
    for d in ValueDistribution::stock() {
        let r = verify_utility_identity(&d, &PLottery::new(1, 0.0).unwrap(), 1, 20_000, 3).unwrap();
        assert!(r.passed, "{}: {r:?}", d.name());
    }
    let pareto = ValueDistribution::pareto(1.0, 2.0).unwrap();
    let r = verify_utility_identity(&pareto, &Vickrey::new(1).unwrap(), 3, 20_000, 4).unwrap();
    assert!(r.passed, "{r:?}");
}

#[test]
fn ironing_dominance_examples() {
    let uni = ValueDistribution::uniform(0.0, 1.0).unwrap();
    let iv = iron(&uni, 1 << 12).unwrap();
    let r = verify_ironing_dominance(&iv, &Vickrey::new(1).unwrap(), 3, 20_000, 1).unwrap();
    assert!(r.passed && !r.equality, "{r:?}");
    let pareto = ValueDistribution::pareto(1.0, 2.0).unwrap();
    let iv = iron(&pareto, 1 << 12).unwrap();
    let r = verify_ironing_dominance(&iv, &Vickrey::new(1).unwrap(), 3, 20_000, 2).unwrap();
    assert!(r.passed && r.equality, "{r:?}");
    for d in ValueDistribution::stock() {
        let iv = iron(&d, 1 << 12).unwrap();
        let r = verify_ironing_dominance(&iv, &PLottery::new(1, 0.0).unwrap(), 3, 20_000, 3).unwrap();
        assert!(r.passed && r.equality, "{}: {r:?}", d.name());
    }
}

/// `P[every prefix of agents 2..=n holds at most 3i/4 sampled]` by
/// dynamic programming over the sampled count.
fn balanced_dp(n: usize) -> f64 {
    let mut dist = vec![1.0];
    for i in 2..=n {
        let mut next = vec![0.0; dist.len() + 1];
        for (c, &w) in dist.iter().enumerate() {
            next[c] += w / 2.0;
            next[c + 1] += w / 2.0;
        }
        for (c, w) in next.iter_mut().enumerate() {
            if 4 * c > 3 * i {
                *w = 0.0;
            }
        }
        dist = next;
    }
    dist.iter().sum()
}

#[test]
fn balanced_probe_matches_enumeration_oracle() {
    for n in 1..=MAX_EXACT_PROBE {
        let r = balanced_sampling_probe(n, 0, 0).unwrap();
        assert!(r.exact);
        assert!((r.probability - balanced_dp(n)).abs() < 1e-12, "n={n}");
        assert!(r.passed, "n={n}: {r:?}");
    }
    assert_eq!(balanced_sampling_probe(2, 0, 0).unwrap().probability, 1.0);
    let big = balanced_sampling_probe(10_000, 10_000, 9).unwrap();
    assert!(!big.exact && big.passed && big.probability >= BALANCE_TARGET, "{big:?}");
    let dp = balanced_dp(10_000);
    assert!((big.probability - dp).abs() <= 4.0 * big.se, "{big:?} vs {dp}");
}
