use serde::Serialize;

use super::dsic::deviation_bids;
use crate::error::{Error, Result};
use crate::mechanisms::Mechanism;

/// Fewest grid bids accepted by [`check_payment_identity`].
pub const MIN_IDENTITY_POINTS: usize = 256;
const MONOTONE_TOL: f64 = 1e-12;

/// Interim allocation and payment of one agent against fixed opponents.
///
/// `x_mid[j]` is the allocation at the midpoint of `(points[j], points[j+1])`.
/// With every breakpoint of the rule among `points`, the allocation is
/// constant on each open cell, so the midpoint rule integrates it exactly.
/// Below `points[0]` the allocation is taken to equal `x[0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct InterimRule {
    pub points: Vec<f64>,
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub x_mid: Vec<f64>,
}

impl InterimRule {
    pub fn new(points: Vec<f64>, x: Vec<f64>, p: Vec<f64>, x_mid: Vec<f64>) -> Result<Self> {
        let m = points.len();
        if m == 0 || x.len() != m || p.len() != m || x_mid.len() + 1 != m {
            return Err(Error::input("interim rule arrays have inconsistent lengths"));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::input("interim rule bids must strictly increase"));
        }
        Ok(InterimRule { points, x, p, x_mid })
    }

    /// Evaluates `mech` for `agent` on `grid` together with its breakpoints.
    pub fn extract(mech: &dyn Mechanism, values: &[f64], agent: usize, grid: &[f64]) -> Result<Self> {
        let points = deviation_bids(mech, values, agent, grid);
        let mut bids = values.to_vec();
        let mut at = |b: f64| -> Result<(f64, f64)> {
            bids[agent] = b;
            let out = mech.marginal(&bids)?;
            Ok((out.allocation[agent], out.payments[agent]))
        };
        let mut x = Vec::with_capacity(points.len());
        let mut p = Vec::with_capacity(points.len());
        for &b in &points {
            let (xa, pa) = at(b)?;
            x.push(xa);
            p.push(pa);
        }
        let x_mid = points
            .windows(2)
            .map(|w| at(0.5 * (w[0] + w[1])).map(|r| r.0))
            .collect::<Result<_>>()?;
        InterimRule::new(points, x, p, x_mid)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub passed: bool,
    pub monotone: bool,
    /// Largest `|p(b) - (b x(b) - int_0^b x)|` over the grid.
    pub max_error: f64,
    pub at: Option<f64>,
    pub failure: Option<String>,
}

/// Checks allocation monotonicity, then `p(b) = b x(b) - int_0^b x(u) du`
/// at every grid bid.
pub fn check_payment_identity(rule: &InterimRule, tol: f64) -> Result<IdentityReport> {
    if rule.points.len() < MIN_IDENTITY_POINTS {
        return Err(Error::input(format!(
            "payment identity needs >= {MIN_IDENTITY_POINTS} bids, got {}",
            rule.points.len()
        )));
    }
    let mut seq = Vec::with_capacity(2 * rule.x.len());
    for j in 0..rule.x.len() {
        seq.push((rule.points[j], rule.x[j]));
        if let Some(&xm) = rule.x_mid.get(j) {
            seq.push((0.5 * (rule.points[j] + rule.points[j + 1]), xm));
        }
    }
    if let Some(w) = seq.windows(2).find(|w| w[1].1 < w[0].1 - MONOTONE_TOL) {
        return Ok(IdentityReport {
            passed: false,
            monotone: false,
            max_error: f64::NAN,
            at: Some(w[1].0),
            failure: Some(format!("allocation drops from {} to {} at bid {}", w[0].1, w[1].1, w[1].0)),
        });
    }

    let mut integral = rule.points[0] * rule.x[0];
    let mut worst = (0.0f64, None);
    for j in 0..rule.points.len() {
        if j > 0 {
            integral += (rule.points[j] - rule.points[j - 1]) * rule.x_mid[j - 1];
        }
        let b = rule.points[j];
        let err = (rule.p[j] - (b * rule.x[j] - integral)).abs();
        if err > worst.0 {
            worst = (err, Some(b));
        }
    }
    let passed = worst.0 <= tol;
    Ok(IdentityReport {
        passed,
        monotone: true,
        max_error: worst.0,
        at: worst.1,
        failure: (!passed).then(|| format!("identity off by {} at bid {:?}", worst.0, worst.1)),
    })
}
