use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::stream;

/// Largest `n` probed by exhaustive enumeration.
pub const MAX_EXACT_PROBE: usize = 20;
pub const BALANCE_TARGET: f64 = 0.9;
const TRIALS_PER_STREAM: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeReport {
    pub n: usize,
    pub probability: f64,
    pub se: f64,
    pub exact: bool,
    pub trials: usize,
    pub passed: bool,
}

/// Whether the subset given by `bit(i)` for agents `2..=n` keeps
/// `4 n_i <= 3 i` for every prefix; agent 1 is never in the subset.
fn balanced_bits(n: usize, mut bit: impl FnMut(usize) -> bool) -> bool {
    let mut count = 0usize;
    for i in 2..=n {
        count += bit(i) as usize;
        if 4 * count > 3 * i {
            return false;
        }
    }
    true
}

/// One random subset of `{2..=n}`, drawn 64 agents per word. Whole words are
/// skipped without bit checks once no prefix inside them can violate the
/// bound.
fn balanced_trial(n: usize, mut next_word: impl FnMut() -> u64) -> bool {
    let mut count = 0usize;
    let mut done = 1usize;
    while done < n {
        let width = (n - done).min(64);
        let word = next_word();
        let word = if width == 64 { word } else { word & ((1u64 << width) - 1) };
        if 4 * (count + width) <= 3 * (done + 1) {
            count += word.count_ones() as usize;
        } else {
            for b in 0..width {
                count += (word >> b & 1) as usize;
                if 4 * count > 3 * (done + b + 1) {
                    return false;
                }
            }
        }
        done += width;
    }
    true
}

/// `P[n_i <= 3i/4 for all i | agent 1 not sampled]` for a uniformly random
/// subset of `n` agents: exact for `n <= 20`, otherwise from `trials` draws.
pub fn balanced_sampling_probe(n: usize, trials: usize, seed: u64) -> Result<ProbeReport> {
    if n == 0 {
        return Err(Error::input("balanced sampling needs n >= 1"));
    }
    if n <= MAX_EXACT_PROBE {
        let subsets = 1u64 << (n - 1);
        let good = (0..subsets)
            .into_par_iter()
            .filter(|&mask| balanced_bits(n, |i| mask >> (i - 2) & 1 == 1))
            .count();
        let probability = good as f64 / subsets as f64;
        return Ok(ProbeReport {
            n,
            probability,
            se: 0.0,
            exact: true,
            trials: subsets as usize,
            passed: probability >= BALANCE_TARGET,
        });
    }
    if trials == 0 {
        return Err(Error::input("Monte-Carlo probe needs trials >= 1"));
    }
    let streams = trials.div_ceil(TRIALS_PER_STREAM);
    let good: usize = (0..streams)
        .into_par_iter()
        .map(|s| {
            let mut rng = stream(seed, s as u64);
            let here = TRIALS_PER_STREAM.min(trials - s * TRIALS_PER_STREAM);
            (0..here).filter(|_| balanced_trial(n, || rng.random())).count()
        })
        .sum();
    let probability = good as f64 / trials as f64;
    let se = (probability * (1.0 - probability) / trials as f64).sqrt();
    Ok(ProbeReport {
        n,
        probability,
        se,
        exact: false,
        trials,
        passed: probability >= BALANCE_TARGET - 3.0 * se,
    })
}
