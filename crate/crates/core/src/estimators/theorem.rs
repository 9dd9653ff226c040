//! Identities linking `T` (passage time) and `T0` (zero-overshoot passage
//! time): the Mellin relation, the density of `T` written as an average over
//! `T0`, the inverse-beta resampling identity and the change of variables to
//! the law of the supremum `S1`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::StableModel;
use crate::rng::RngStream;
use crate::sampler::{sample_inverse_beta_excess, Passage, PassageEnsemble};
use crate::special::{beta, beta_reg};

use super::density::{DensityEstimate, DensityKind};
use super::{Estimate, WeightedSamples};

/// Average of `s^(-p)` over `s` uniform in `(a, b]`.
pub(crate) fn power_average(a: f64, b: f64, p: f64) -> f64 {
    if b <= a || a <= 0.0 {
        return b.powf(-p);
    }
    let q = 1.0 - p;
    if q.abs() < 1e-12 {
        (b / a).ln() / (b - a)
    } else {
        (b.powf(q) - a.powf(q)) / (q * (b - a))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MellinCheck {
    pub beta: f64,
    /// `E[T0^(-beta)]` from the zero-overshoot samples.
    pub lhs: Estimate,
    /// `x^(-alpha rho) E[T^(rho - beta)] / (k0 rho B(beta, 1 - rho))`.
    pub rhs: Estimate,
    pub ratio: Estimate,
}

/// Compares both sides of the Mellin relation between `T0` and `T`.
///
/// The right side uses the eventual passage of every resolved record, so
/// censored paths enter through their continuation.
pub fn mellin_check(ens: &PassageEnsemble, t0s: &[Passage], model: &StableModel, beta_exp: f64) -> Result<MellinCheck> {
    let r = model.rho();
    if !(beta_exp > 0.0 && beta_exp < 1.0 + r) {
        return Err(Error::InvalidArgument(format!(
            "beta must lie in (0, 1 + rho) = (0, {}), got {beta_exp}",
            1.0 + r
        )));
    }
    if t0s.is_empty() {
        return Err(Error::InsufficientData("no zero-overshoot samples".into()));
    }
    let lhs = Estimate::mean(t0s.iter().map(|p| power_average(p.bracket, p.time, beta_exp)));
    let moment = Estimate::mean(
        ens.records
            .iter()
            .filter_map(|rec| rec.eventual())
            .map(|p| power_average(p.bracket, p.time, beta_exp - r)),
    );
    let x = ens.settings.x;
    let factor = x.powf(-model.params.alpha_rho()) / (model.k0() * r * beta(beta_exp, 1.0 - r));
    let rhs = moment.scaled(factor);
    Ok(MellinCheck {
        beta: beta_exp,
        lhs,
        rhs,
        ratio: lhs.ratio(rhs),
    })
}

/// The two candidate values of `E[T0^(-rho)]`: `sin(pi rho)/(k0 rho pi)
/// x^(-alpha rho)`, as the general relation gives, and the same without the
/// factor `rho`.
pub fn mellin_rho_candidates(model: &StableModel, x: f64) -> (f64, f64) {
    let r = model.rho();
    let without = (PI * r).sin() / (model.k0() * PI) * x.powf(-model.params.alpha_rho());
    (without / r, without)
}

/// Average of `(t - s)^(-rho)` over `s` uniform in `(a, b] ∩ (0, t)`,
/// normalized by the full bracket length.
fn kernel_average(a: f64, b: f64, t: f64, r: f64) -> f64 {
    if a >= t {
        return 0.0;
    }
    if b <= a {
        return (t - a).powf(-r);
    }
    let q = 1.0 - r;
    ((t - a).powf(q) - (t - b.min(t)).powf(q)) / (q * (b - a))
}

/// `f_T(t) = k0 rho x^(alpha rho) / t E[1{T0 <= t} (t - T0)^(-rho)]`.
///
/// Each sample is spread uniformly over its bracket and the kernel is
/// integrated exactly there. With no sample below `t` the value is zero and
/// the stderr infinite.
pub fn ftx_from_t0(t0s: &[Passage], model: &StableModel, x: f64, t: f64) -> Result<Estimate> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("t must be > 0, got {t}")));
    }
    if t0s.is_empty() {
        return Err(Error::InsufficientData("no zero-overshoot samples".into()));
    }
    let r = model.rho();
    let support = t0s.iter().filter(|p| p.bracket < t).count();
    if support == 0 {
        return Ok(Estimate::new(0.0, f64::INFINITY));
    }
    let constant = model.k0() * r * x.powf(model.params.alpha_rho()) / t;
    let terms = t0s
        .iter()
        .filter(|p| p.bracket < t)
        .map(|p| kernel_average(p.bracket, p.time, t, r));
    Ok(Estimate::mean_padded(terms, t0s.len()).scaled(constant))
}

/// [`ftx_from_t0`] over a time grid.
pub fn ftx_density(t0s: &[Passage], model: &StableModel, x: f64, grid: &[f64]) -> Result<DensityEstimate> {
    let mut values = Vec::with_capacity(grid.len());
    let mut stderr = Vec::with_capacity(grid.len());
    for &t in grid {
        let e = ftx_from_t0(t0s, model, x, t)?;
        values.push(e.value);
        stderr.push(e.stderr);
    }
    DensityEstimate::new(grid.to_vec(), values, stderr, DensityKind::Pdf, "theorem")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FtxMass {
    pub horizon: f64,
    /// Mass of the estimated density on `(0, horizon]`.
    pub body: Estimate,
    /// Analytic mass beyond the horizon, `k0 x^(alpha rho) horizon^(-rho)`.
    pub tail: f64,
    pub total: Estimate,
}

/// Total mass of the density estimate of [`ftx_from_t0`].
///
/// Integrating `k0 rho x^(alpha rho) (t - s)^(-rho) / t` over `t` in
/// `(s, h]` gives `k0 rho x^(alpha rho) s^(-rho) B(rho, 1 - rho)
/// (1 - I_{s/h}(rho, 1 - rho))`, so the body is an exact mean over samples.
pub fn ftx_mass(t0s: &[Passage], model: &StableModel, x: f64, horizon: f64) -> Result<FtxMass> {
    if t0s.is_empty() {
        return Err(Error::InsufficientData("no zero-overshoot samples".into()));
    }
    let r = model.rho();
    let b = beta(r, 1.0 - r);
    let scale = model.k0() * r * x.powf(model.params.alpha_rho()) * b;
    let terms = t0s
        .iter()
        .filter(|p| p.time < horizon)
        .map(|p| p.time.powf(-r) * (1.0 - beta_reg(r, 1.0 - r, p.time / horizon)));
    let body = Estimate::mean_padded(terms, t0s.len()).scaled(scale);
    let tail = model.k0() * x.powf(model.params.alpha_rho()) * horizon.powf(-r);
    Ok(FtxMass {
        horizon,
        body,
        tail,
        total: Estimate::new(body.value + tail, body.stderr),
    })
}

/// Density of `S1` from a density of `T_x`:
/// `f_S1(y) = (alpha / x) t^(1 + 1/alpha) f_T(t)` at `y = x t^(-1/alpha)`.
pub fn fs1_from_ftx(fhat: &DensityEstimate, model: &StableModel, x: f64) -> Result<DensityEstimate> {
    if fhat.kind != DensityKind::Pdf {
        return Err(Error::InvalidArgument("expected a density of T_x".into()));
    }
    let a = model.alpha();
    let mut ys = Vec::with_capacity(fhat.abscissae.len());
    let mut values = Vec::with_capacity(ys.capacity());
    let mut stderr = Vec::with_capacity(ys.capacity());
    for i in (0..fhat.abscissae.len()).rev() {
        let t = fhat.abscissae[i];
        let jac = a / x * t.powf(1.0 + 1.0 / a);
        ys.push(x * t.powf(-1.0 / a));
        values.push(jac * fhat.values[i]);
        stderr.push(jac * fhat.stderr[i]);
    }
    DensityEstimate::new(ys, values, stderr, DensityKind::Pdf, format!("{}:s1", fhat.provenance))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResampledPassages {
    /// The zero-overshoot points with their size-biasing weights.
    pub weighted: WeightedSamples,
    /// Index into `weighted.points` of the source of each output.
    pub sources: Vec<usize>,
    pub samples: Vec<f64>,
}

/// Draws `n_out` passage times as `s / B`, with `s` drawn from the
/// zero-overshoot samples with weights proportional to `s^(-rho)` and `B`
/// an independent `Beta(rho, 1 - rho)` variable.
pub fn resample_tx_from_t0(
    rng: &mut RngStream,
    t0s: &[Passage],
    model: &StableModel,
    n_out: usize,
) -> Result<ResampledPassages> {
    let r = model.rho();
    let points: Vec<f64> = t0s.iter().map(|p| p.time).collect();
    let raw: Vec<f64> = points.iter().map(|s| s.powf(-r)).collect();
    let weighted = WeightedSamples::new(points, raw)
        .ok_or_else(|| Error::InsufficientData("no zero-overshoot samples".into()))?;
    let mut cumulative = Vec::with_capacity(weighted.weights.len());
    let mut acc = 0.0;
    for w in &weighted.weights {
        acc += w;
        cumulative.push(acc);
    }
    let sources: Vec<usize> = (0..n_out)
        .map(|_| {
            let u = rng.open01() * acc;
            cumulative.partition_point(|&c| c < u).min(cumulative.len() - 1)
        })
        .collect();
    let excess = sample_inverse_beta_excess(rng, r, 1.0 - r, n_out);
    let samples = sources
        .iter()
        .zip(&excess)
        .map(|(&i, e)| weighted.points[i] * (1.0 + e))
        .collect();
    Ok(ResampledPassages {
        weighted,
        sources,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::StableParams;
    use crate::quadrature::integrate;

    fn model() -> StableModel {
        StableModel::new(StableParams::new(1.5, 0.5, 1.0).unwrap()).unwrap()
    }

    fn point(t: f64) -> Passage {
        Passage {
            time: t,
            bracket: t,
            overshoot: 0.0,
        }
    }

    #[test]
    fn candidates_at_rho_one_half() {
        let (with_rho, without) = mellin_rho_candidates(&model(), 1.0);
        assert!((with_rho - 1.03705100855444).abs() < 1e-12);
        assert!((with_rho - 2.0 * without).abs() < 1e-15);
        let (at2, _) = mellin_rho_candidates(&model(), 2.0);
        assert!((at2 / with_rho - 2f64.powf(-0.75)).abs() < 1e-14);
    }

    #[test]
    fn power_average_limits() {
        assert!((power_average(1.0, 1.0, 0.5) - 1.0).abs() < 1e-15);
        let exact = integrate(|s| s.powf(-0.3), 0.5, 0.7, 1e-13, 100).unwrap().value / 0.2;
        assert!((power_average(0.5, 0.7, 0.3) - exact).abs() < 1e-12);
        let exact = integrate(|s| 1.0 / s, 0.5, 0.7, 1e-13, 100).unwrap().value / 0.2;
        assert!((power_average(0.5, 0.7, 1.0) - exact).abs() < 1e-12);
    }

    #[test]
    fn density_vanishes_below_the_samples() {
        let t0s = [point(1.0), point(2.0)];
        let e = ftx_from_t0(&t0s, &model(), 1.0, 0.5).unwrap();
        assert_eq!(e.value, 0.0);
        assert!(e.stderr.is_infinite());
    }

    #[test]
    fn single_point_mass_density() {
        // T0 = 1 exactly: f_T(t) = k0 rho (t - 1)^(-rho) / t
        let m = model();
        let e = ftx_from_t0(&[point(1.0)], &m, 1.0, 3.0).unwrap();
        let want = m.k0() * 0.5 * 2f64.powf(-0.5) / 3.0;
        assert!((e.value - want).abs() < 1e-14);
    }

    #[test]
    fn mass_of_point_mass_matches_quadrature() {
        let m = model();
        let h = 50.0;
        let s = 0.7;
        let got = ftx_mass(&[point(s)], &m, 1.0, h).unwrap();
        let f = |t: f64| m.k0() * 0.5 * (t - s).powf(-0.5) / t;
        // substitute t = s + u^2 to remove the singularity
        let q = integrate(|u: f64| 2.0 * u * f(s + u * u), 0.0, (h - s).sqrt(), 1e-12, 200).unwrap();
        assert!((got.body.value - q.value).abs() < 1e-9, "{} vs {}", got.body.value, q.value);
        assert!((got.tail - m.k0() * h.powf(-0.5)).abs() < 1e-15);
    }

    #[test]
    fn supremum_density_at_one_is_alpha_times() {
        let f = DensityEstimate::new(vec![0.5, 1.0, 2.0], vec![0.2, 0.3, 0.1], vec![0.01; 3], DensityKind::Pdf, "t").unwrap();
        let s = fs1_from_ftx(&f, &model(), 1.0).unwrap();
        assert!(s.abscissae.windows(2).all(|w| w[0] < w[1]));
        assert!((s.at(1.0).unwrap().0 - 1.5 * 0.3).abs() < 1e-14);
    }

    #[test]
    fn resampled_points_exceed_their_source() {
        let t0s: Vec<_> = (1..200).map(|k| point(0.01 * k as f64)).collect();
        let out = resample_tx_from_t0(&mut RngStream::new(1, 0), &t0s, &model(), 1000).unwrap();
        assert!((out.weighted.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(out.weighted.effective_sample_size > 1.0);
        for (v, &i) in out.samples.iter().zip(&out.sources) {
            assert!(*v >= out.weighted.points[i]);
        }
    }

    #[test]
    fn beta_range_is_enforced() {
        let m = model();
        let e = crate::sampler::PassageEnsemble {
            settings: crate::sampler::EnsembleSettings {
                params: m.params,
                x: 1.0,
                dt: 0.1,
                horizon: 1.0,
                checkpoints: vec![],
                n_samples: 0,
                seed: 0,
                refine: 0.01,
                early_refine: 0.05,
                continue_censored: false,
            },
            seeds: vec![],
            records: vec![],
            censored_count: 0,
        };
        assert!(mellin_check(&e, &[point(1.0)], &m, 1.5).is_err());
        assert!(mellin_check(&e, &[point(1.0)], &m, 0.0).is_err());
    }
}
