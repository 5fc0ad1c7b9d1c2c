use rayon::prelude::*;
use serde::Serialize;

use crate::dist::Support;
use crate::error::Result;
use crate::mechanisms::Mechanism;

/// Points of the default deviation grid.
pub const DSIC_GRID_POINTS: usize = 64;
/// Relative offset of the probes placed on either side of each breakpoint.
const NUDGE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DsicReport {
    pub mechanism: String,
    pub passed: bool,
    /// Largest `u_i(b) - u_i(v_i)` seen; at most `tol` on a pass.
    pub max_gain: f64,
    pub agent: Option<usize>,
    pub bid: Option<f64>,
    pub cells: usize,
}

/// `points` evenly spaced bids from the bottom of the support to
/// `min(top of support, 1.25 max(values))`.
pub fn bid_grid(values: &[f64], support: Support, points: usize) -> Vec<f64> {
    let lo = support.lo;
    let top = values.iter().copied().fold(lo, f64::max);
    let mut hi = (1.25 * top).min(support.hi);
    if hi <= lo {
        hi = if support.hi.is_finite() { support.hi } else { lo + 1.0 };
    }
    let points = points.max(2);
    (0..points)
        .map(|j| lo + (hi - lo) * j as f64 / (points - 1) as f64)
        .collect()
}

/// Grid bids plus the mechanism's breakpoints for `agent`, each with a probe
/// just below and above, clipped to the grid's range.
pub(crate) fn deviation_bids(mech: &dyn Mechanism, values: &[f64], agent: usize, grid: &[f64]) -> Vec<f64> {
    let (lo, hi) = grid
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let mut bids: Vec<f64> = grid.to_vec();
    for b in mech.breakpoints(values, agent) {
        let step = NUDGE * b.abs().max(1.0);
        bids.extend([b - step, b, b + step]);
    }
    bids.retain(|b| b.is_finite() && *b >= lo && *b <= hi);
    bids.sort_by(f64::total_cmp);
    bids.dedup();
    bids
}

/// Exact deviation scan: every agent, every bid in `grid` and around every
/// breakpoint, against truthful play of the others.
pub fn check_dsic(mech: &dyn Mechanism, values: &[f64], grid: &[f64], tol: f64) -> Result<DsicReport> {
    let truthful = mech.marginal(values)?;
    let cells: Vec<(usize, f64)> = (0..values.len())
        .flat_map(|i| deviation_bids(mech, values, i, grid).into_iter().map(move |b| (i, b)))
        .collect();
    let gains: Vec<f64> = cells
        .par_iter()
        .map(|&(i, b)| {
            let mut bids = values.to_vec();
            bids[i] = b;
            let out = mech.marginal(&bids)?;
            Ok(values[i] * out.allocation[i] - out.payments[i] - truthful.utilities[i])
        })
        .collect::<Result<_>>()?;
    let mut worst: Option<usize> = None;
    for (c, &g) in gains.iter().enumerate() {
        if worst.is_none_or(|w| g > gains[w]) {
            worst = Some(c);
        }
    }
    let max_gain = worst.map_or(0.0, |w| gains[w]);
    Ok(DsicReport {
        mechanism: mech.name(),
        passed: max_gain <= tol,
        max_gain,
        agent: worst.map(|w| cells[w].0),
        bid: worst.map(|w| cells[w].1),
        cells: cells.len(),
    })
}
