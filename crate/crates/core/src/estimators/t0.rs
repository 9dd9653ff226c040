//! Three routes to the law of the zero-overshoot passage time `T0`.
//!
//! * time weight: `P(T0 <= t) = sin(pi rho)/(k0 pi rho) x^(-alpha rho)
//!   E[T 1{T <= t} (t - T)^(rho - 1)]`;
//! * path weight: `P(T0 > t) = E[1{T > t} ((x - X_t)/x)^(alpha rho - 1)]`;
//! * overshoot conditioning: passage times of paths whose overshoot is at
//!   most `eps`.
//!
//! A passage is only known to lie in its bracket `(bracket, time]`; the
//! time-weight kernel is averaged over the bracket, which removes the
//! singularity of `(t - s)^(rho - 1)` at `s = t`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::StableModel;
use crate::sampler::{Passage, PassageEnsemble};

use super::{quantile, sorted, Estimate};

/// Quantile of `T` beyond which the time-weight estimator is not used.
pub const TIMEWEIGHT_WINDOW_QUANTILE: f64 = 0.9;

/// Fraction of path weights kept below the cap.
pub const PATHWEIGHT_CAP_QUANTILE: f64 = 0.999;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityEstimate {
    pub estimate: Estimate,
    /// The raw value fell outside `[0, 1]` and was clamped.
    pub clamped: bool,
}

impl ProbabilityEstimate {
    fn clamp(raw: Estimate) -> Self {
        let v = raw.value.clamp(0.0, 1.0);
        ProbabilityEstimate {
            estimate: Estimate::new(v, raw.stderr),
            clamped: v != raw.value,
        }
    }
}

/// Eventual passage times of all records, `+inf` for unresolved ones.
pub(crate) fn eventual_times(ens: &PassageEnsemble) -> Vec<f64> {
    ens.records
        .iter()
        .map(|r| r.eventual().map_or(f64::INFINITY, |p| p.time))
        .collect()
}

/// Upper end of the time window in which the time-weight estimator is used:
/// the empirical 90% quantile of `T`.
pub fn timeweight_window(ens: &PassageEnsemble) -> f64 {
    quantile(&sorted(&eventual_times(ens)), TIMEWEIGHT_WINDOW_QUANTILE)
}

/// Average over `s` uniform in `(a, b]` of `s (t - s)^(rho - 1) 1{s < t}`.
pub(crate) fn timeweight_kernel(a: f64, b: f64, t: f64, rho: f64) -> f64 {
    if a >= t {
        return 0.0;
    }
    if b <= a {
        return a * (t - a).powf(rho - 1.0);
    }
    let g = |u: f64| t * u.powf(rho) / rho - u.powf(rho + 1.0) / (rho + 1.0);
    let (u_lo, u_hi) = (t - b.min(t), t - a);
    (g(u_hi) - g(u_lo)) / (b - a)
}

/// `P(T0 <= t)` from the passage times alone.
///
/// Every record enters the mean: records that have not passed by `t`
/// contribute zero, so censoring at a horizon beyond `t` is harmless.
pub fn t0_cdf_timeweight(ens: &PassageEnsemble, model: &StableModel, t: f64) -> Result<ProbabilityEstimate> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("t must be > 0, got {t}")));
    }
    let limit = timeweight_window(ens);
    if t > limit {
        return Err(Error::OutsideWindow { t, limit });
    }
    let (a, r) = (model.alpha(), model.rho());
    let x = ens.settings.x;
    let constant = (PI * r).sin() / (model.k0() * PI * r) * x.powf(-a * r);
    let weights = ens
        .records
        .iter()
        .filter_map(|rec| rec.eventual())
        .filter(|p| p.bracket < t)
        .map(|p| timeweight_kernel(p.bracket, p.time, t, r));
    let raw = Estimate::mean_padded(weights, ens.len()).scaled(constant);
    Ok(ProbabilityEstimate::clamp(raw))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathWeightSurvival {
    pub probability: ProbabilityEstimate,
    pub cap: f64,
    /// Fraction of records whose weight was capped.
    pub capped_fraction: f64,
    /// Share of the total weight removed by the cap.
    pub capped_mass: f64,
}

/// `P(T0 > t)` at a recorded checkpoint `t`, from the path positions.
pub fn t0_survival_pathweight(ens: &PassageEnsemble, model: &StableModel, t: f64) -> Result<PathWeightSurvival> {
    let slot = ens.checkpoint_slot(t)?;
    let x = ens.settings.x;
    let expo = model.params.alpha_rho() - 1.0;
    let raw: Vec<f64> = ens
        .records
        .iter()
        .filter_map(|rec| rec.positions[slot])
        .map(|v| ((x - v) / x).powf(expo))
        .collect();
    if raw.is_empty() {
        return Ok(PathWeightSurvival {
            probability: ProbabilityEstimate::clamp(Estimate::exact(0.0)),
            cap: f64::INFINITY,
            capped_fraction: 0.0,
            capped_mass: 0.0,
        });
    }
    let cap = quantile(&sorted(&raw), PATHWEIGHT_CAP_QUANTILE);
    let total: f64 = raw.iter().sum();
    let removed: f64 = raw.iter().map(|w| (w - cap).max(0.0)).sum();
    let capped = raw.iter().filter(|&&w| w > cap).count();
    let est = Estimate::mean_padded(raw.iter().map(|w| w.min(cap)), ens.len());
    Ok(PathWeightSurvival {
        probability: ProbabilityEstimate::clamp(est),
        cap,
        capped_fraction: capped as f64 / ens.len() as f64,
        capped_mass: removed / total,
    })
}

/// Passage times of the records whose overshoot is at most `eps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonEnsemble {
    pub eps: f64,
    pub samples: Vec<Passage>,
    /// Fraction of all records retained, with binomial stderr.
    pub retained: Estimate,
    /// `psi(x; eps)`, the exact retention probability.
    pub exact_retention: f64,
    /// Retained records whose passage was found past the horizon.
    pub continued: usize,
}

impl EpsilonEnsemble {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|p| p.time).collect()
    }

    /// Retention z-score against the exact value.
    pub fn retention_zscore(&self) -> f64 {
        let n = self.retained.value * (1.0 - self.retained.value) / self.retained.stderr.powi(2);
        let p = self.exact_retention;
        (self.retained.value - p) / (p * (1.0 - p) / n).sqrt()
    }
}

/// Conditions on a small overshoot. Records are judged on their eventual
/// passage, so continued censored paths take part.
pub fn t0_epsilon_ensemble(ens: &PassageEnsemble, model: &StableModel, eps: f64) -> Result<EpsilonEnsemble> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be > 0, got {eps}")));
    }
    let mut samples = Vec::new();
    let mut continued = 0;
    for rec in &ens.records {
        if let Some(p) = rec.eventual() {
            if p.overshoot <= eps {
                samples.push(p);
                continued += usize::from(rec.passage.is_none());
            }
        }
    }
    if samples.is_empty() {
        return Err(Error::InsufficientData(format!("no overshoot at or below eps = {eps}")));
    }
    let n = ens.len() as f64;
    let f = samples.len() as f64 / n;
    Ok(EpsilonEnsemble {
        eps,
        retained: Estimate::new(f, (f * (1.0 - f) / n).sqrt()),
        exact_retention: model.overshoot_cdf(ens.settings.x, eps)?,
        samples,
        continued,
    })
}
