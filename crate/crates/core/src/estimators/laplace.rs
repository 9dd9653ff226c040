//! Laplace-transform identities for the passage times.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::StableModel;
use crate::sampler::{Passage, PassageEnsemble};
use crate::special::gamma;

use super::Estimate;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplaceSuite {
    pub lambda: f64,
    /// `f_lambda(x) = (lambda alpha / x) E[T e^(-lambda T)]`.
    pub f_lambda: Estimate,
    /// `ell_x(lambda) = lambda f_lambda(x)`.
    pub ell: Estimate,
    /// `E[e^(-lambda T0)]` from the zero-overshoot samples.
    pub l_t0_direct: Estimate,
    /// The same transform from `f_lambda`.
    pub l_t0_formula: Estimate,
    /// Limit of `ell_x` as `lambda` grows, `alpha k_inf / x^(alpha + 1)`.
    pub ref_limit: f64,
}

impl LaplaceSuite {
    pub fn cross_ratio(&self) -> Estimate {
        self.l_t0_direct.ratio(self.l_t0_formula)
    }

    pub fn ell_ratio(&self) -> Estimate {
        self.ell.scaled(1.0 / self.ref_limit)
    }
}

/// Average of `s e^(-lambda s)` over `s` uniform in `(a, b]`.
fn weighted_exp_average(a: f64, b: f64, lambda: f64) -> f64 {
    if b <= a {
        return a * (-lambda * a).exp();
    }
    let g = |s: f64| -(-lambda * s).exp() * (s / lambda + 1.0 / (lambda * lambda));
    (g(b) - g(a)) / (b - a)
}

/// Average of `e^(-lambda s)` over `s` uniform in `(a, b]`.
fn exp_average(a: f64, b: f64, lambda: f64) -> f64 {
    if b <= a {
        return (-lambda * a).exp();
    }
    -(-lambda * (b - a)).exp_m1() * (-lambda * a).exp() / (lambda * (b - a))
}

/// Evaluates both sides of the Laplace identity for `T0` at rate `lambda`.
///
/// `f_lambda` averages over every record; unresolved ones have `T = inf` and
/// contribute zero.
pub fn laplace_suite(ens: &PassageEnsemble, t0s: &[Passage], model: &StableModel, lambda: f64) -> Result<LaplaceSuite> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be > 0, got {lambda}")));
    }
    if t0s.is_empty() {
        return Err(Error::InsufficientData("no zero-overshoot samples".into()));
    }
    let x = ens.settings.x;
    let (a, r) = (model.alpha(), model.rho());
    let moment = Estimate::mean_padded(
        ens.records
            .iter()
            .filter_map(|rec| rec.eventual())
            .map(|p| weighted_exp_average(p.bracket, p.time, lambda)),
        ens.len(),
    );
    let f_lambda = moment.scaled(lambda * a / x);
    let direct = Estimate::mean(t0s.iter().map(|p| exp_average(p.bracket, p.time, lambda)));
    let formula_factor = x.powf(1.0 - a * r) * lambda.powf(-r) / (model.k0() * gamma(1.0 - r) * a * r);
    Ok(LaplaceSuite {
        lambda,
        f_lambda,
        ell: f_lambda.scaled(lambda),
        l_t0_direct: direct,
        l_t0_formula: f_lambda.scaled(formula_factor),
        ref_limit: a * model.k_inf() / x.powf(a + 1.0),
    })
}
