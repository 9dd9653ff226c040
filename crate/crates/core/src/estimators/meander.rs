//! Excursion and meander densities recovered from the density of `T0`.
//!
//! `r_hat_t(x) = alpha rho k0 Gamma(1 - rho) x^(alpha rho - 1) f_T0(t)` and
//! `m_hat_t(x) = Gamma(rho) t^(1 - rho) r_hat_t(x)`. Feeding `r_hat` into
//! `f_T(t) = x / (alpha Gamma(1 - rho) t) int_0^t (t - s)^(-rho) r_hat_s ds`
//! gives the density of `T` a second way.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::StableModel;
use crate::special::gamma;

use super::density::{DensityEstimate, DensityKind};
use super::Estimate;

/// Grid nodes required below `t` for the convolution.
pub const MIN_CONVOLUTION_NODES: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanderQuantities {
    pub x: f64,
    pub r_hat: DensityEstimate,
    pub m_hat: DensityEstimate,
}

pub fn meander_quantities_from_t0(ft0: &DensityEstimate, model: &StableModel, x: f64) -> Result<MeanderQuantities> {
    if ft0.kind != DensityKind::Pdf {
        return Err(Error::InvalidArgument("expected a density of T0".into()));
    }
    let (a, r) = (model.alpha(), model.rho());
    let c = a * r * model.k0() * gamma(1.0 - r) * x.powf(a * r - 1.0);
    let g = gamma(r);
    let t = &ft0.abscissae;
    let r_hat = DensityEstimate::new(
        t.clone(),
        ft0.values.iter().map(|v| c * v).collect(),
        ft0.stderr.iter().map(|v| c * v).collect(),
        DensityKind::Pdf,
        "rhat",
    )?;
    let m_factor: Vec<f64> = t.iter().map(|s| g * s.powf(1.0 - r)).collect();
    let m_hat = DensityEstimate::new(
        t.clone(),
        r_hat.values.iter().zip(&m_factor).map(|(v, f)| v * f).collect(),
        r_hat.stderr.iter().zip(&m_factor).map(|(v, f)| v * f).collect(),
        DensityKind::Pdf,
        "mhat",
    )?;
    Ok(MeanderQuantities { x, r_hat, m_hat })
}

/// Weights `w_j` with `int_0^t (t - s)^(-rho) g(s) ds = sum_j w_j g(s_j)`
/// for `g` piecewise linear through the nodes below `t`, through `(0, 0)`
/// and interpolated at `t`. The last entry belongs to the value at `t`.
fn product_weights(nodes: &[f64], t: f64, r: f64) -> Vec<f64> {
    let mut s: Vec<f64> = Vec::with_capacity(nodes.len() + 2);
    s.push(0.0);
    s.extend(nodes.iter().copied().filter(|&v| v > 0.0 && v < t));
    s.push(t);
    let mut w = vec![0.0; s.len()];
    let (q1, q2) = (1.0 - r, 2.0 - r);
    for j in 0..s.len() - 1 {
        let (lo, hi) = (s[j], s[j + 1]);
        let (u0, u1) = (t - lo, t - hi);
        let m0 = (u0.powf(q1) - u1.powf(q1)) / q1;
        let m1 = u0 * m0 - (u0.powf(q2) - u1.powf(q2)) / q2;
        let dx = hi - lo;
        w[j] += m0 - m1 / dx;
        w[j + 1] += m1 / dx;
    }
    w.remove(0);
    w
}

/// `f_T(t)` through the convolution of `r_hat` with `(t - s)^(-rho)`.
///
/// `r_hat` is taken piecewise linear on its grid and the kernel is
/// integrated exactly on each piece. The stderr treats the node errors as
/// fully correlated.
pub fn ftx_convolution(mq: &MeanderQuantities, model: &StableModel, t: f64) -> Result<Estimate> {
    let grid = &mq.r_hat.abscissae;
    let below = grid.iter().filter(|&&s| s > 0.0 && s < t).count();
    if below < MIN_CONVOLUTION_NODES {
        return Err(Error::InsufficientData(format!(
            "{below} grid nodes below t = {t}, need {MIN_CONVOLUTION_NODES}"
        )));
    }
    let (end_value, end_se) = mq
        .r_hat
        .at(t)
        .ok_or_else(|| Error::InvalidArgument(format!("t = {t} lies outside the density grid")))?;
    let r = model.rho();
    let w = product_weights(grid, t, r);
    let first = grid.partition_point(|&s| s <= 0.0);
    let mut value = w[below] * end_value;
    let mut se = w[below].abs() * end_se;
    for k in 0..below {
        value += w[k] * mq.r_hat.values[first + k];
        se += w[k].abs() * mq.r_hat.stderr[first + k];
    }
    let c = mq.x / (model.alpha() * gamma(1.0 - r) * t);
    Ok(Estimate::new(c * value, c * se))
}

/// `int y^(-alpha rho) m_hat_1(y) dy`, computed from `m_hat_t(x)` on its
/// time grid as `x^(1 - alpha rho) / alpha int t^(rho - 1) m_hat_t(x) dt`.
/// Mass outside the grid is ignored.
pub fn meander_scalar(mq: &MeanderQuantities, model: &StableModel) -> Estimate {
    let (a, r) = (model.alpha(), model.rho());
    let c = mq.x.powf(1.0 - a * r) / a;
    let m = &mq.m_hat;
    let (mut value, mut se) = (0.0, 0.0);
    for j in 0..m.len().saturating_sub(1) {
        let (t0, t1) = (m.abscissae[j], m.abscissae[j + 1]);
        let h = 0.5 * (t1 - t0);
        value += h * (t0.powf(r - 1.0) * m.values[j] + t1.powf(r - 1.0) * m.values[j + 1]);
        se += h * (t0.powf(r - 1.0) * m.stderr[j] + t1.powf(r - 1.0) * m.stderr[j + 1]);
    }
    Estimate::new(c * value, c * se)
}

/// Exact value of [`meander_scalar`]: `pi rho k0 / sin(pi rho)`.
pub fn meander_scalar_exact(model: &StableModel) -> f64 {
    let r = model.rho();
    PI * r * model.k0() / (PI * r).sin()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::log_grid;
    use crate::model::StableParams;
    use crate::quadrature::integrate;

    fn model() -> StableModel {
        StableModel::new(StableParams::new(1.5, 0.5, 1.0).unwrap()).unwrap()
    }

    fn from_fn(grid: &[f64], f: impl Fn(f64) -> f64) -> DensityEstimate {
        let v: Vec<f64> = grid.iter().map(|&s| f(s)).collect();
        DensityEstimate::new(grid.to_vec(), v, vec![0.0; grid.len()], DensityKind::Pdf, "test").unwrap()
    }

    #[test]
    fn meander_is_gamma_half_sqrt_t_times_rhat() {
        let g = log_grid(0.01, 10.0, 50);
        let mq = meander_quantities_from_t0(&from_fn(&g, |s| (-s).exp()), &model(), 1.0).unwrap();
        for (i, t) in g.iter().enumerate() {
            let want = PI.sqrt() * t.sqrt() * mq.r_hat.values[i];
            assert!((mq.m_hat.values[i] - want).abs() < 1e-14 * want.max(1.0));
        }
    }

    #[test]
    fn product_integration_is_exact_for_linear_functions() {
        let grid = log_grid(1e-3, 2.0, 200);
        let t = 1.0;
        let w = product_weights(&grid, t, 0.5);
        let nodes: Vec<f64> = grid.iter().copied().filter(|&s| s < t).chain([t]).collect();
        let got: f64 = w.iter().zip(&nodes).map(|(w, s)| w * 3.0 * s).sum();
        // int_0^1 (1 - s)^(-1/2) 3 s ds = 3 B(2, 1/2) = 4
        assert!((got - 4.0).abs() < 1e-10, "{got}");
    }

    #[test]
    fn convolution_of_smooth_density_matches_quadrature() {
        let m = model();
        let grid = log_grid(1e-4, 20.0, 600);
        let f = |s: f64| s.sqrt() * (-s).exp();
        let mq = meander_quantities_from_t0(&from_fn(&grid, f), &m, 1.0).unwrap();
        let c = 1.5 * 0.5 * m.k0() * PI.sqrt();
        let want = {
            let t: f64 = 2.0;
            // s = t - u^2 removes the kernel singularity
            let q = integrate(|u| 2.0 * c * f(t - u * u), 0.0, t.sqrt(), 1e-12, 200).unwrap();
            q.value / (1.5 * PI.sqrt() * t)
        };
        let got = ftx_convolution(&mq, &m, 2.0).unwrap();
        assert!((got.value - want).abs() < 1e-4 * want, "{} vs {want}", got.value);
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let m = model();
        let grid = log_grid(0.5, 20.0, 40);
        let mq = meander_quantities_from_t0(&from_fn(&grid, |s| (-s).exp()), &m, 1.0).unwrap();
        assert!(matches!(ftx_convolution(&mq, &m, 1.0), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn scalar_of_exact_density_family() {
        // any probability density of T0 yields pi rho k0 / sin(pi rho) times its mass
        let m = model();
        let grid = log_grid(1e-6, 1e3, 4000);
        let f = |s: f64| (-s).exp();
        let mq = meander_quantities_from_t0(&from_fn(&grid, f), &m, 2.0).unwrap();
        let got = meander_scalar(&mq, &m);
        assert!((got.value - meander_scalar_exact(&m)).abs() < 1e-5);
        assert!((meander_scalar_exact(&m) - 0.9642727230880514).abs() < 1e-13);
    }
}
