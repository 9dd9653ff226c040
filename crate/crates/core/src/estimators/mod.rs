//! Estimators of passage-time laws built from simulated ensembles.

mod density;
mod ks;
mod laplace;
mod meander;
mod tail;
mod t0;
mod theorem;

use serde::{Deserialize, Serialize};

pub use density::*;
pub use ks::*;
pub use laplace::*;
pub use meander::*;
pub use tail::*;
pub use t0::*;
pub use theorem::*;

/// A Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn new(value: f64, stderr: f64) -> Self {
        Estimate { value, stderr }
    }

    pub fn exact(value: f64) -> Self {
        Estimate { value, stderr: 0.0 }
    }

    /// Sample mean of `values` over `n` observations, where observations
    /// not yielded by the iterator count as zeros.
    pub fn mean_padded<I: IntoIterator<Item = f64>>(values: I, n: usize) -> Self {
        let (mut s, mut s2) = (0.0, 0.0);
        for v in values {
            s += v;
            s2 += v * v;
        }
        let nf = n as f64;
        let mean = s / nf;
        let var = if n > 1 {
            ((s2 - nf * mean * mean) / (nf - 1.0)).max(0.0)
        } else {
            0.0
        };
        Estimate::new(mean, (var / nf).sqrt())
    }

    pub fn mean<I: IntoIterator<Item = f64>>(values: I) -> Self {
        let v: Vec<f64> = values.into_iter().collect();
        let n = v.len();
        Estimate::mean_padded(v, n)
    }

    pub fn scaled(self, factor: f64) -> Self {
        Estimate::new(self.value * factor, self.stderr * factor.abs())
    }

    /// Ratio with first-order error propagation, treating the two as
    /// independent.
    pub fn ratio(self, other: Estimate) -> Estimate {
        let r = self.value / other.value;
        let rel = (self.stderr / self.value).hypot(other.stderr / other.value);
        Estimate::new(r, (r * rel).abs())
    }

    /// `sqrt(se_a^2 + se_b^2)`.
    pub fn combined_stderr(self, other: Estimate) -> f64 {
        self.stderr.hypot(other.stderr)
    }
}

/// Sample points with normalized importance weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedSamples {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub effective_sample_size: f64,
}

impl WeightedSamples {
    /// Normalizes `raw` weights; `None` if they do not have positive sum.
    pub fn new(points: Vec<f64>, raw: Vec<f64>) -> Option<Self> {
        let total: f64 = raw.iter().sum();
        if !(total > 0.0 && total.is_finite()) || points.len() != raw.len() {
            return None;
        }
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let ess = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        Some(WeightedSamples {
            points,
            weights,
            effective_sample_size: ess,
        })
    }
}

/// Sorted copy of finite values.
pub(crate) fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Empirical quantile by linear interpolation of order statistics.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let h = p.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let lo_v = sorted[lo];
    let hi_v = sorted[hi];
    if lo_v == hi_v {
        return lo_v;
    }
    lo_v + (h - lo as f64) * (hi_v - lo_v)
}

/// `n` points from `a` to `b` equally spaced in `log`.
pub fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(a > 0.0 && b > a && n >= 2);
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp())
        .collect()
}
