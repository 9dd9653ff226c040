//! Log-log regression slopes of tails and densities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::density::DensityEstimate;
use super::{log_grid, sorted};

pub const MIN_GRID_POINTS: usize = 8;
pub const MIN_EXCEEDANCES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slope {
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub points: usize,
}

impl Slope {
    pub fn within(&self, target: f64, tol: f64) -> bool {
        (self.slope - target).abs() <= tol
    }
}

/// Least-squares slope of `ln y` on `ln x`.
pub fn tail_slope_points(xs: &[f64], ys: &[f64]) -> Result<Slope> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidArgument("abscissae and values differ in length".into()));
    }
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0 && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = pts.len();
    if n < MIN_GRID_POINTS {
        return Err(Error::InsufficientData(format!(
            "{n} positive points, need {MIN_GRID_POINTS}"
        )));
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    Ok(Slope {
        slope,
        stderr: (rss / (nf - 2.0) / sxx).sqrt(),
        intercept,
        points: n,
    })
}

/// Slope of the values of a density or distribution estimate over the
/// grid points inside `[lo, hi]`.
pub fn tail_slope_density(est: &DensityEstimate, lo: f64, hi: f64) -> Result<Slope> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = est
        .abscissae
        .iter()
        .zip(&est.values)
        .filter(|(z, _)| (lo..=hi).contains(*z))
        .unzip();
    tail_slope_points(&xs, &ys)
}

/// Slope of the empirical upper tail `P(S > z)` over `z` in `[lo, hi]`,
/// read at 16 log-spaced levels. Needs at least 1000 samples above `lo`.
pub fn tail_slope_samples(samples: &[f64], lo: f64, hi: f64) -> Result<Slope> {
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidArgument(format!("bad window [{lo}, {hi}]")));
    }
    let s = sorted(samples);
    let n = s.len() as f64;
    let above = |z: f64| s.len() - s.partition_point(|&v| v <= z);
    let exceed = above(lo);
    if exceed < MIN_EXCEEDANCES {
        return Err(Error::InsufficientData(format!(
            "{exceed} exceedances of {lo}, need {MIN_EXCEEDANCES}"
        )));
    }
    let zs = log_grid(lo, hi, 16);
    let tail: Vec<f64> = zs.iter().map(|&z| above(z) as f64 / n).collect();
    tail_slope_points(&zs, &tail)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn exact_power_law() {
        let xs = log_grid(1.0, 100.0, 20);
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x.powf(-2.5)).collect();
        let s = tail_slope_points(&xs, &ys).unwrap();
        assert!((s.slope + 2.5).abs() < 1e-12);
        assert!((s.intercept - 3f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn pareto_samples() {
        let mut rng = RngStream::new(8, 0);
        let v: Vec<f64> = (0..200_000).map(|_| rng.open01().powf(-1.0 / 1.5)).collect();
        let s = tail_slope_samples(&v, 3.0, 10.0).unwrap();
        assert!(s.within(-1.5, 0.05), "{s:?}");
    }

    #[test]
    fn too_few_points() {
        assert!(matches!(
            tail_slope_points(&[1.0, 2.0], &[1.0, 0.5]),
            Err(Error::InsufficientData(_))
        ));
        assert!(matches!(
            tail_slope_samples(&[1.0; 50], 0.5, 2.0),
            Err(Error::InsufficientData(_))
        ));
    }
}
