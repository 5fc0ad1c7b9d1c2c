use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore};

use crate::dist::ValuationProfile;
use crate::error::{Error, Result};
use crate::ironing::IronedValuation;

/// Largest agent count for exhaustive subset search.
pub const MAX_COST_AGENTS: usize = 20;

type CostFn = dyn Fn(&[bool]) -> f64 + Send + Sync;

/// Virtual-surplus maximization with a general service cost and per-agent
/// (possibly different) ironed virtual valuations.
#[derive(Clone)]
pub struct CostProblem {
    valuations: Vec<Arc<dyn IronedValuation>>,
    cost: Arc<CostFn>,
}

impl fmt::Debug for CostProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CostProblem").field("agents", &self.valuations.len()).finish()
    }
}

/// Result of [`CostProblem::solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct CostOutcome {
    /// All subsets attaining the optimum, in enumeration order.
    pub maximizers: Vec<Vec<bool>>,
    /// `sum_i phibar_i(v_i) x_i - c(x)` at the optimum.
    pub virtual_surplus: f64,
    /// Per-agent service probability under uniform tie-breaking.
    pub allocation: Vec<f64>,
}

impl CostOutcome {
    /// Uniformly chosen maximizer.
    pub fn pick(&self, rng: &mut dyn RngCore) -> &[bool] {
        &self.maximizers[rng.random_range(0..self.maximizers.len())]
    }
}

impl CostProblem {
    /// `cost` receives the served set as one flag per agent; `f64::INFINITY`
    /// marks an infeasible set. `cost(empty)` must be finite.
    pub fn new<C>(valuations: Vec<Arc<dyn IronedValuation>>, cost: C) -> Result<Self>
    where
        C: Fn(&[bool]) -> f64 + Send + Sync + 'static,
    {
        let n = valuations.len();
        if n > MAX_COST_AGENTS {
            return Err(Error::Capacity { what: "cost-problem agents", n, max: MAX_COST_AGENTS });
        }
        let empty = cost(&vec![false; n]);
        if !(empty.is_finite() && empty >= 0.0) {
            return Err(Error::input(format!("cost of the empty set must be finite and >= 0, got {empty}")));
        }
        Ok(CostProblem { valuations, cost: Arc::new(cost) })
    }

    /// Cost function of a `k`-unit supply: free up to `k` winners, infeasible beyond.
    pub fn unit_supply(k: usize) -> impl Fn(&[bool]) -> f64 + Send + Sync + 'static {
        move |served: &[bool]| {
            if served.iter().filter(|&&s| s).count() <= k {
                0.0
            } else {
                f64::INFINITY
            }
        }
    }

    pub fn agents(&self) -> usize {
        self.valuations.len()
    }

    pub fn solve(&self, profile: &ValuationProfile) -> Result<CostOutcome> {
        let n = self.valuations.len();
        if profile.len() != n {
            return Err(Error::input(format!("profile has {} agents, problem has {n}", profile.len())));
        }
        let levels: Vec<f64> = self
            .valuations
            .iter()
            .zip(profile.values())
            .map(|(iv, &v)| iv.ironed_value(v))
            .collect::<Result<_>>()?;

        let mut served = vec![false; n];
        let mut best = f64::NEG_INFINITY;
        let mut maximizers: Vec<Vec<bool>> = Vec::new();
        for mask in 0u32..(1u32 << n) {
            let mut gain = 0.0;
            for (i, s) in served.iter_mut().enumerate() {
                *s = mask >> i & 1 == 1;
                if *s {
                    gain += levels[i];
                }
            }
            let c = (self.cost)(&served);
            if c.is_nan() || c < 0.0 {
                return Err(Error::input(format!("cost must be >= 0, got {c} for set {mask:#b}")));
            }
            if c.is_infinite() {
                continue;
            }
            let value = gain - c;
            let tol = 1e-12 * best.abs().max(1.0);
            if maximizers.is_empty() || value > best + tol {
                best = value;
                maximizers.clear();
                maximizers.push(served.clone());
            } else if (value - best).abs() <= tol {
                maximizers.push(served.clone());
            }
        }

        let share = 1.0 / maximizers.len() as f64;
        let mut allocation = vec![0.0; n];
        for set in &maximizers {
            for (a, &s) in allocation.iter_mut().zip(set) {
                if s {
                    *a += share;
                }
            }
        }
        Ok(CostOutcome { maximizers, virtual_surplus: best, allocation })
    }
}
