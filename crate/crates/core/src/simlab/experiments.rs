use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, ExperimentName};
use super::corpus::{corpus, CorpusProfile, DEFAULT_CORPUS_SEED, LOG_PRICE_SIZES, RSOL_SIZES};
use super::eval::{check_replicates, replicate};
use crate::benchmark::{benchmark_g, full_surplus};
use crate::dist::ValueDistribution;
use crate::error::Result;
use crate::ironing::{iron, DEFAULT_GRID};
use crate::mechanisms::{expected_log_price, expected_rsol, log_price_bound, BayesOptimal, Mechanism, RsolMode};
use crate::stats::Summary;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Upper edge of the `v_2` bin used for the conditional spot-check.
pub const LB43_COND_BIN: f64 = 0.01;

#[derive(Debug, Clone, Serialize)]
pub struct Lb43Row {
    pub experiment: &'static str,
    pub n: usize,
    pub k: usize,
    pub reps: usize,
    pub seed: u64,
    pub expected_g: f64,
    pub expected_g_ci: f64,
    pub optimal_residual: f64,
    pub optimal_residual_ci: f64,
    pub ratio: f64,
    pub cond_bin_hi: f64,
    pub cond_count: usize,
    pub cond_g: f64,
    pub cond_g_ci: f64,
    pub cond_formula: f64,
}

/// Two i.i.d. unit-exponential agents, one unit: the benchmark against the
/// optimal mechanism, plus `E[G | v_2]` for small `v_2` against
/// `v_2 + (1 + e^{-v_2}) / 2`.
pub fn experiment_lb43(reps: usize, seed: u64) -> Result<Lb43Row> {
    check_replicates(reps)?;
    let d = ValueDistribution::exponential(1.0)?;
    let opt = BayesOptimal::new(Arc::new(iron(&d, DEFAULT_GRID)?), 1)?;
    let draws = replicate(reps, seed, |rng| {
        let p = d.sample_profile(2, rng);
        let g = benchmark_g(&p, 1)?.value;
        Ok((g, opt.expected_residual(p.values())?, p.ranked(2)))
    })?;
    let g: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let o: Vec<f64> = draws.iter().map(|d| d.1).collect();
    let (cond, formula): (Vec<f64>, Vec<f64>) = draws
        .iter()
        .filter(|d| d.2 < LB43_COND_BIN)
        .map(|&(g, _, low)| (g, low + 0.5 * (1.0 + (-low).exp())))
        .unzip();
    let (g, o, c) = (Summary::from_samples(&g), Summary::from_samples(&o), Summary::from_samples(&cond));
    Ok(Lb43Row {
        experiment: "lb43",
        n: 2,
        k: 1,
        reps,
        seed,
        expected_g: g.mean,
        expected_g_ci: g.ci99(),
        optimal_residual: o.mean,
        optimal_residual_ci: o.ci99(),
        ratio: g.mean / o.mean,
        cond_bin_hi: LB43_COND_BIN,
        cond_count: c.count,
        cond_g: c.mean,
        cond_g_ci: c.ci99(),
        cond_formula: formula.iter().sum::<f64>() / formula.len().max(1) as f64,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SurplusGapRow {
    pub experiment: &'static str,
    pub n: usize,
    pub k: usize,
    pub reps: usize,
    pub seed: u64,
    pub full_surplus: f64,
    pub full_surplus_ci: f64,
    /// `k H_n - sum_{i<k} H_i`, the exact mean of the top-`k` sum.
    pub harmonic_oracle: f64,
    pub optimal_residual: f64,
    pub ratio: f64,
}

fn harmonic(n: usize) -> f64 {
    (1..=n).map(|j| 1.0 / j as f64).sum()
}

/// Unit-exponential prior: full surplus `E[V*]` by Monte-Carlo against the
/// optimal money-burning residual, which is the free k-unit lottery's
/// `min(k, n) * mean`.
pub fn experiment_surplus_gap(n_list: &[usize], k: usize, reps: usize, seed: u64) -> Result<Vec<SurplusGapRow>> {
    check_replicates(reps)?;
    crate::mechanisms::check_units(k)?;
    let d = ValueDistribution::exponential(1.0)?;
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let top = replicate(reps, seed, |rng| {
            let mut v: Vec<f64> = (0..n).map(|_| d.sample(rng)).collect();
            let take = k.min(n);
            if take == 0 {
                return Ok(0.0);
            }
            if take < n {
                v.select_nth_unstable_by(take - 1, |a, b| b.total_cmp(a));
            }
            Ok(v[..take].iter().sum())
        })?;
        let s = Summary::from_samples(&top);
        let take = k.min(n);
        let oracle = take as f64 * harmonic(n) - (1..take).map(harmonic).sum::<f64>();
        let optimal = take as f64 * d.mean();
        rows.push(SurplusGapRow {
            experiment: "surplus-gap",
            n,
            k,
            reps,
            seed,
            full_surplus: s.mean,
            full_surplus_ci: s.ci99(),
            harmonic_oracle: oracle,
            optimal_residual: optimal,
            ratio: s.mean / optimal,
        });
    }
    rows.sort_by_key(|r| (r.n, r.k));
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct RsolRow {
    pub experiment: &'static str,
    pub profile: &'static str,
    pub n: usize,
    pub k: usize,
    pub rsol: f64,
    pub benchmark: f64,
    pub ratio: f64,
    pub seed: u64,
}

fn grid<'a>(profiles: &'a [CorpusProfile], k_list: &'a [usize]) -> Vec<(&'a CorpusProfile, usize)> {
    profiles.iter().flat_map(|p| k_list.iter().map(move |&k| (p, k))).collect()
}

/// Exact RSOL against the benchmark on every corpus profile.
pub fn experiment_rsol_ratio(profiles: &[CorpusProfile], k_list: &[usize]) -> Result<Vec<RsolRow>> {
    let mut rows: Vec<RsolRow> = grid(profiles, k_list)
        .into_par_iter()
        .map(|(c, k)| {
            let rsol = expected_rsol(&c.profile, k, RsolMode::Exact)?.mean;
            let benchmark = benchmark_g(&c.profile, k)?.value;
            Ok(RsolRow {
                experiment: "rsol-ratio",
                profile: c.kind.label(),
                n: c.profile.len(),
                k,
                rsol,
                benchmark,
                ratio: if benchmark > 0.0 { rsol / benchmark } else { 1.0 },
                seed: c.seed,
            })
        })
        .collect::<Result<_>>()?;
    rows.sort_by_key(|r| (r.n, r.k));
    Ok(rows)
}

/// Minimum and median of the RSOL ratios.
pub fn ratio_summary(rows: &[RsolRow]) -> (f64, f64) {
    let mut r: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    if r.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    r.sort_by(f64::total_cmp);
    let mid = r.len() / 2;
    let median = if r.len() % 2 == 1 { r[mid] } else { 0.5 * (r[mid - 1] + r[mid]) };
    (r[0], median)
}

#[derive(Debug, Clone, Serialize)]
pub struct ThmubRow {
    pub experiment: &'static str,
    pub profile: &'static str,
    pub n: usize,
    pub k: usize,
    pub log_price: f64,
    pub full_surplus: f64,
    pub bound: f64,
    pub slack: f64,
    pub holds: bool,
    pub seed: u64,
}

/// Exact log-price residual against `V* / (2 (1 + log2(n/k)))`.
pub fn experiment_thmub(profiles: &[CorpusProfile], k_list: &[usize]) -> Result<Vec<ThmubRow>> {
    let mut rows: Vec<ThmubRow> = grid(profiles, k_list)
        .into_par_iter()
        .map(|(c, k)| {
            let log_price = expected_log_price(&c.profile, k)?;
            let bound = log_price_bound(&c.profile, k);
            Ok(ThmubRow {
                experiment: "thmub",
                profile: c.kind.label(),
                n: c.profile.len(),
                k,
                log_price,
                full_surplus: full_surplus(&c.profile, k),
                bound,
                slack: log_price - bound,
                holds: log_price >= bound,
                seed: c.seed,
            })
        })
        .collect::<Result<_>>()?;
    rows.sort_by_key(|r| (r.n, r.k));
    Ok(rows)
}

pub const DEFAULT_K_LIST: [usize; 3] = [1, 2, 4];

/// Writes `rows` as CSV followed by the provenance comment line.
pub fn write_rows<W: Write, T: Serialize>(mut out: W, rows: &[T], seed: u64) -> Result<()> {
    {
        let mut w = csv::Writer::from_writer(&mut out);
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    writeln!(out, "# burnlab {VERSION} seed={seed}")?;
    Ok(())
}

/// Runs `name` with settings from `cfg` (defaults for unset keys) and writes
/// its CSV to `out`.
pub fn run_experiment<W: Write>(name: ExperimentName, cfg: &ExperimentConfig, out: W) -> Result<()> {
    let seed = cfg.seed.unwrap_or(1);
    let corpus_seed = cfg.corpus_seed.unwrap_or(DEFAULT_CORPUS_SEED);
    let k_list = cfg.k_list.clone().unwrap_or_else(|| DEFAULT_K_LIST.to_vec());
    match name {
        ExperimentName::Lb43 => {
            let row = experiment_lb43(cfg.reps.unwrap_or(1_000_000), seed)?;
            write_rows(out, &[row], seed)
        }
        ExperimentName::SurplusGap => {
            let n_list = cfg.n_list.clone().unwrap_or_else(|| vec![32, 1024]);
            let rows = experiment_surplus_gap(&n_list, cfg.k.unwrap_or(1), cfg.reps.unwrap_or(100_000), seed)?;
            write_rows(out, &rows, seed)
        }
        ExperimentName::RsolRatio => {
            let sizes = cfg.n_list.clone().unwrap_or_else(|| RSOL_SIZES.to_vec());
            let rows = experiment_rsol_ratio(&corpus(&sizes, corpus_seed), &k_list)?;
            write_rows(out, &rows, corpus_seed)
        }
        ExperimentName::Thmub => {
            let sizes = cfg.n_list.clone().unwrap_or_else(|| LOG_PRICE_SIZES.to_vec());
            let rows = experiment_thmub(&corpus(&sizes, corpus_seed), &k_list)?;
            write_rows(out, &rows, corpus_seed)
        }
    }
}
