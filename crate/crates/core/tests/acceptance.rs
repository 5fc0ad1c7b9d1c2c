//! Acceptance criteria, one pass/fail line each. Exits non-zero on failure.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use burnlab::audit::{
    audit_corpus, audit_profiles, balanced_sampling_probe, verify_ironing_dominance, verify_utility_identity,
    FirstPrice, BALANCE_TARGET,
};
use burnlab::benchmark::{benchmark_g, optimal_p_lottery};
use burnlab::dist::{quantile_grid, ValuationProfile, ValueDistribution};
use burnlab::ironing::{iron, DEFAULT_GRID};
use burnlab::mechanisms::*;
use burnlab::rng::stream;
use burnlab::simlab::*;
use rand::Rng;

type Check = Result<String, String>;

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Check) -> Check {
    let start = Instant::now();
    let out = f();
    let took = start.elapsed();
    match (out, limit) {
        (Err(e), _) => Err(format!("{e} ({took:.2?})")),
        (Ok(msg), Some(max)) if took > max => Err(format!("{msg}; took {took:.2?}, limit {max:?}")),
        (Ok(msg), _) => Ok(format!("{msg} ({took:.2?})")),
    }
}

fn ensure(ok: bool, msg: String) -> Check {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn prof(v: Vec<f64>) -> ValuationProfile {
    ValuationProfile::new(v).unwrap()
}

fn ironing_mhr() -> Check {
    let mut notes = Vec::new();
    for (d, want) in [
        (ValueDistribution::uniform(0.0, 1.0).unwrap(), 0.5),
        (ValueDistribution::exponential(1.0).unwrap(), 1.0),
    ] {
        let start = Instant::now();
        let iv = iron(&d, DEFAULT_GRID).map_err(|e| e.to_string())?;
        let took = start.elapsed();
        let dev = quantile_grid(DEFAULT_GRID)
            .map(|q| (iv.ironed_value(d.quantile(q)).unwrap() - want).abs())
            .fold(0.0, f64::max);
        let msg = format!("{}: max |phibar - {want}| = {dev:.2e} in {took:.2?}", d.name());
        if dev > 1e-3 || took >= Duration::from_secs(1) {
            return Err(msg);
        }
        notes.push(msg);
    }
    Ok(notes.join("; "))
}

fn gap_four_thirds() -> Check {
    let row = experiment_lb43(1_000_000, 43).map_err(|e| e.to_string())?;
    let g_ok = (row.expected_g - 4.0 / 3.0).abs() <= 0.01 * 4.0 / 3.0;
    let o_ok = (row.optimal_residual - 1.0).abs() <= 0.005;
    ensure(
        g_ok && o_ok,
        format!(
            "E[G] = {:.5} +/- {:.5} (target 4/3 +/- 1%), optimal = {:.5} +/- {:.5} (target 1 +/- 0.5%), ratio {:.4}",
            row.expected_g, row.expected_g_ci, row.optimal_residual, row.optimal_residual_ci, row.ratio
        ),
    )
}

fn mixture() -> Check {
    let mut rng = stream(3, 0);
    let mut worst_formula: f64 = 0.0;
    let mut worst_bound = f64::INFINITY;
    for _ in 0..10_000 {
        let v: Vec<f64> = vec![rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)];
        let v1 = v[0].max(v[1]);
        let p = prof(v);
        let m = mixed_vickrey_lottery(&p).map_err(|e| e.to_string())?.mean;
        let g = benchmark_g(&p, 1).map_err(|e| e.to_string())?.value;
        worst_formula = worst_formula.max((m - 2.0 * v1 / 3.0).abs() / v1.max(1.0));
        worst_bound = worst_bound.min(m - 2.0 * g / 3.0);
    }
    ensure(
        worst_formula <= 1e-12 && worst_bound >= -1e-12,
        format!("max |mix - 2v1/3| = {worst_formula:.1e}, min mix - 2G/3 = {worst_bound:.1e} over 1e4 profiles"),
    )
}

fn lottery_inequalities() -> Check {
    let mut rng = stream(4, 0);
    let (mut worst_split, mut worst_half) = (f64::INFINITY, f64::INFINITY);
    for _ in 0..10_000 {
        let n = rng.random_range(1..=12);
        let k = rng.random_range(1..=5);
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
        let top = v.iter().cloned().fold(0.0, f64::max);
        let (a, b) = (rng.random_range(0.0..1.1 * top), rng.random_range(0.0..1.1 * top));
        let (p, q) = (a.max(b), a.min(b));
        let profile = prof(v);
        let pq = expected_pq_lottery(&profile, k, p, q).map_err(|e| e.to_string())?;
        let split = expected_p_lottery(&profile, k, p) + expected_p_lottery(&profile, k, q);
        let g = benchmark_g(&profile, k).map_err(|e| e.to_string())?.value;
        let single = optimal_p_lottery(&profile, k).map_err(|e| e.to_string())?.0;
        worst_split = worst_split.min(split - pq);
        worst_half = worst_half.min(single - g / 2.0);
    }
    ensure(
        worst_split >= -1e-9 && worst_half >= -1e-9,
        format!("min p(p)+p(q)-pq = {worst_split:.3e}, min single - G/2 = {worst_half:.3e} over 1e4 instances"),
    )
}

fn log_price() -> Check {
    let rows = experiment_thmub(&corpus(&LOG_PRICE_SIZES, DEFAULT_CORPUS_SEED), &DEFAULT_K_LIST)
        .map_err(|e| e.to_string())?;
    let failures = rows.iter().filter(|r| !r.holds).count();
    let min_slack = rows.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min);
    ensure(
        failures == 0,
        format!("{} corpus rows, {failures} below the bound, min slack {min_slack:.3e}", rows.len()),
    )
}

fn surplus_gap() -> Check {
    let rows = experiment_surplus_gap(&[32, 1024], 1, 100_000, 6).map_err(|e| e.to_string())?;
    let h = |n: usize| (1..=n).map(|j| 1.0 / j as f64).sum::<f64>();
    let target = h(1024) / h(32);
    let got = rows[1].ratio / rows[0].ratio;
    ensure(
        (got - target).abs() <= 0.05 * target,
        format!(
            "ratio(1024)/ratio(32) = {got:.4} vs H1024/H32 = {target:.4}; E[V*] = {:.4}, {:.4}",
            rows[0].full_surplus, rows[1].full_surplus
        ),
    )
}

fn rsol() -> Check {
    let rows = experiment_rsol_ratio(&corpus(&RSOL_SIZES, DEFAULT_CORPUS_SEED), &DEFAULT_K_LIST)
        .map_err(|e| e.to_string())?;
    let (min, median) = ratio_summary(&rows);
    let worked = expected_rsol(&prof(vec![3.0, 1.0]), 1, RsolMode::Exact).map_err(|e| e.to_string())?.mean
        / benchmark_g(&prof(vec![3.0, 1.0]), 1).map_err(|e| e.to_string())?.value;
    ensure(
        min >= 0.05 && (worked - 0.6).abs() <= 1e-12,
        format!("{} corpus rows, min ratio {min:.4}, median {median:.4} (floor 0.05); (3,1) ratio {worked:.6}", rows.len()),
    )
}

fn audits() -> Check {
    let mut cases = 0;
    for d in ValueDistribution::stock() {
        let iv = Arc::new(iron(&d, DEFAULT_GRID).map_err(|e| e.to_string())?);
        let profiles = audit_corpus(&d, 100, 6, 8);
        let pairs: Vec<Vec<f64>> = audit_corpus(&d, 400, 6, 9).into_iter().filter(|v| v.len() == 2).take(100).collect();
        for k in [1usize, 2] {
            let mechs: Vec<Box<dyn Mechanism>> = vec![
                Box::new(PLottery::new(k, d.quantile(0.5)).unwrap()),
                Box::new(PqLottery::new(k, d.quantile(0.8), d.quantile(0.3)).unwrap()),
                Box::new(Vickrey::new(k).unwrap()),
                Box::new(LogPrice::new(k).unwrap()),
                Box::new(Rsol::new(k).unwrap()),
                Box::new(BayesOptimal::new(iv.clone(), k).unwrap()),
            ];
            for m in &mechs {
                for row in audit_profiles(m.as_ref(), &d, &profiles).map_err(|e| e.to_string())? {
                    if !row.passed {
                        return Err(format!("{} k={k} on {} failed {}: worst {:.3e}", m.name(), d.name(), row.check, row.worst));
                    }
                    cases += row.cases;
                }
            }
        }
        for row in audit_profiles(&MixedVickreyLottery, &d, &pairs).map_err(|e| e.to_string())? {
            if !row.passed {
                return Err(format!("mix on {} failed {}", d.name(), row.check));
            }
            cases += row.cases;
        }
    }
    let d = ValueDistribution::uniform(0.0, 1.0).unwrap();
    let control = audit_profiles(&FirstPrice::new(1).unwrap(), &d, &audit_corpus(&d, 100, 6, 8)).map_err(|e| e.to_string())?;
    let dsic = control.iter().find(|r| r.check == "dsic").unwrap();
    ensure(
        !dsic.passed && dsic.worst > 0.0,
        format!("{cases} audit cases passed; first-price control fails DSIC with gain {:.4}", dsic.worst),
    )
}

fn identities() -> Check {
    let reps = 100_000;
    let (n, k) = (4, 2);
    let mut checked = 0;
    for d in ValueDistribution::stock() {
        let iv = Arc::new(iron(&d, DEFAULT_GRID).map_err(|e| e.to_string())?);
        let mechs: Vec<Box<dyn Mechanism>> = vec![
            Box::new(PLottery::new(k, 0.0).unwrap()),
            Box::new(Vickrey::new(k).unwrap()),
            Box::new(BayesOptimal::new(iv.clone(), k).unwrap()),
        ];
        for (j, m) in mechs.iter().enumerate() {
            let seed = 900 + j as u64;
            let u = verify_utility_identity(&d, m.as_ref(), n, reps, seed).map_err(|e| e.to_string())?;
            let dom = verify_ironing_dominance(&iv, m.as_ref(), n, reps, seed).map_err(|e| e.to_string())?;
            if !u.passed || !dom.passed {
                return Err(format!(
                    "{} on {}: utility {:.4} vs {:.4} ({}), dominance diff {:.2e} se {:.2e} ({})",
                    m.name(),
                    d.name(),
                    u.lhs.mean,
                    u.rhs.mean,
                    u.passed,
                    dom.difference.mean,
                    dom.difference.se,
                    dom.passed
                ));
            }
            checked += 2;
        }
    }
    let probe = balanced_sampling_probe(10_000, 10_000, 10).map_err(|e| e.to_string())?;
    ensure(
        probe.probability >= BALANCE_TARGET,
        format!(
            "{checked} identity checks passed at {reps} reps; balanced probe(1e4) = {:.4} +/- {:.4}",
            probe.probability, probe.se
        ),
    )
}

type Criterion = (&'static str, Option<Duration>, fn() -> Check);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("ironing-mhr", None, ironing_mhr),
        ("4/3 gap", Some(Duration::from_secs(60)), gap_four_thirds),
        ("mixture guarantee", None, mixture),
        ("lottery inequalities", None, lottery_inequalities),
        ("log-price guarantee", Some(Duration::from_secs(10)), log_price),
        ("surplus gap scaling", None, surplus_gap),
        ("rsol corpus floor", None, rsol),
        ("incentive audits", None, audits),
        ("identity validations", None, identities),
    ];
    let mut failed = 0;
    for (i, (name, limit, f)) in criteria.into_iter().enumerate() {
        match timed(limit, f) {
            Ok(msg) => println!("[PASS] criterion {} ({name}): {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("[FAIL] criterion {} ({name}): {msg}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", 9 - failed, 9);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
