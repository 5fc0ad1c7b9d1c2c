//! Sample summaries with normal-approximation confidence intervals.

use serde::Serialize;

/// Two-sided 99% normal quantile.
pub const Z99: f64 = 2.58;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    /// Standard error of the mean.
    pub se: f64,
    pub count: usize,
}

impl Summary {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Summary { mean: f64::NAN, se: f64::NAN, count: 0 };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let se = if n > 1 {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Summary { mean, se, count: n }
    }

    /// Half-width of the 99% interval.
    pub fn ci99(&self) -> f64 {
        Z99 * self.se
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.mean - self.ci99(), self.mean + self.ci99())
    }

    pub fn overlaps(&self, other: &Summary) -> bool {
        let (a_lo, a_hi) = self.interval();
        let (b_lo, b_hi) = other.interval();
        a_lo <= b_hi && b_lo <= a_hi
    }
}
