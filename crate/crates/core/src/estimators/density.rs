//! Gridded density and distribution estimates, and log-scale kernel
//! density estimation.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{quantile, sorted};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityKind {
    Pdf,
    Cdf,
    Survival,
}

impl DensityKind {
    pub fn tag(self) -> &'static str {
        match self {
            DensityKind::Pdf => "pdf",
            DensityKind::Cdf => "cdf",
            DensityKind::Survival => "survival",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "pdf" => Some(DensityKind::Pdf),
            "cdf" => Some(DensityKind::Cdf),
            "survival" => Some(DensityKind::Survival),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub abscissae: Vec<f64>,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
    pub kind: DensityKind,
    pub provenance: String,
    /// Set when values had to be clamped into their admissible range.
    #[serde(default)]
    pub clamped: bool,
}

impl DensityEstimate {
    /// Checks the grid and, for distribution functions, clamps values into
    /// `[0, 1]` and makes them monotone, flagging the result if anything
    /// changed.
    pub fn new(
        abscissae: Vec<f64>,
        mut values: Vec<f64>,
        stderr: Vec<f64>,
        kind: DensityKind,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        if abscissae.len() != values.len() || values.len() != stderr.len() {
            return Err(Error::InvalidArgument("density arrays differ in length".into()));
        }
        if abscissae.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument("abscissae must be strictly increasing".into()));
        }
        if stderr.iter().any(|s| !(*s >= 0.0)) {
            return Err(Error::InvalidArgument("stderr must be nonnegative".into()));
        }
        let original = values.clone();
        match kind {
            DensityKind::Pdf => values.iter_mut().for_each(|v| *v = v.max(0.0)),
            DensityKind::Cdf => {
                let mut lo: f64 = 0.0;
                for v in values.iter_mut() {
                    *v = v.clamp(lo, 1.0);
                    lo = *v;
                }
            }
            DensityKind::Survival => {
                let mut hi: f64 = 1.0;
                for v in values.iter_mut() {
                    *v = v.clamp(0.0, hi);
                    hi = *v;
                }
            }
        }
        Ok(DensityEstimate {
            clamped: values != original,
            abscissae,
            values,
            stderr,
            kind,
            provenance: provenance.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.abscissae.len()
    }

    pub fn is_empty(&self) -> bool {
        self.abscissae.is_empty()
    }

    /// Linear interpolation of value and stderr; `None` outside the grid.
    pub fn at(&self, z: f64) -> Option<(f64, f64)> {
        let a = &self.abscissae;
        if a.is_empty() || z < a[0] || z > a[a.len() - 1] {
            return None;
        }
        let i = a.partition_point(|&v| v < z);
        if a[i] == z {
            return Some((self.values[i], self.stderr[i]));
        }
        let w = (z - a[i - 1]) / (a[i] - a[i - 1]);
        let lerp = |v: &[f64]| v[i - 1] + w * (v[i] - v[i - 1]);
        Some((lerp(&self.values), lerp(&self.stderr)))
    }

    /// Trapezoid integral of the values over the grid.
    pub fn integral(&self) -> f64 {
        self.abscissae
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
            .sum()
    }

    /// CSV with header `abscissa,value,stderr,kind`; numbers carry 17
    /// significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("abscissa,value,stderr,kind\n");
        for i in 0..self.len() {
            let _ = writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{}",
                self.abscissae[i],
                self.values[i],
                self.stderr[i],
                self.kind.tag()
            );
        }
        out
    }

    pub fn from_csv(text: &str, provenance: impl Into<String>) -> Result<Self> {
        let fmt = |message: String| Error::Format {
            path: "<density csv>".into(),
            message,
        };
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("abscissa,value,stderr,kind") {
            return Err(fmt("missing header abscissa,value,stderr,kind".into()));
        }
        let (mut a, mut v, mut s) = (vec![], vec![], vec![]);
        let mut kind = None;
        for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let cols: Vec<&str> = line.trim().split(',').collect();
            if cols.len() != 4 {
                return Err(fmt(format!("row {}: expected 4 columns", i + 1)));
            }
            let num = |c: &str| {
                c.parse::<f64>()
                    .map_err(|e| fmt(format!("row {}: {e}", i + 1)))
            };
            a.push(num(cols[0])?);
            v.push(num(cols[1])?);
            s.push(num(cols[2])?);
            let k = DensityKind::parse(cols[3]).ok_or_else(|| fmt(format!("row {}: unknown kind", i + 1)))?;
            if kind.is_some_and(|prev| prev != k) {
                return Err(fmt("mixed kinds in one file".into()));
            }
            kind = Some(k);
        }
        let kind = kind.ok_or_else(|| fmt("no data rows".into()))?;
        let mut est = DensityEstimate::new(a, v.clone(), s, kind, provenance)?;
        // values are stored as written; a file is not re-clamped on reading
        est.values = v;
        Ok(est)
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn write_files(&self, dir: &Path, stem: &str) -> Result<()> {
        let csv = dir.join(format!("{stem}.csv"));
        std::fs::write(&csv, self.to_csv()).map_err(|e| Error::io(&csv, e))?;
        let json = dir.join(format!("{stem}.json"));
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&json, text + "\n").map_err(|e| Error::io(&json, e))?;
        Ok(())
    }
}

/// Kernel bandwidth on the log scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    /// `0.9 min(sd, IQR / 1.34) n^(-1/5)` of the log-samples.
    Silverman,
    Fixed(f64),
}

pub const KDE_MIN_SAMPLES: usize = 100;

/// Gaussian-kernel density estimate of positive samples, computed on the
/// log scale and transformed back, so no mass leaks below zero.
pub fn kde_pdf(samples: &[f64], grid: &[f64]) -> Result<DensityEstimate> {
    kde_pdf_with(samples, samples.len(), grid, Bandwidth::Silverman)
}

/// As [`kde_pdf`], normalized by `n_total >= samples.len()` observations;
/// the difference is mass that lies outside the sample (for instance beyond
/// a censoring horizon).
pub fn kde_pdf_with(
    samples: &[f64],
    n_total: usize,
    grid: &[f64],
    bandwidth: Bandwidth,
) -> Result<DensityEstimate> {
    if samples.len() < KDE_MIN_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "kernel density estimate needs at least {KDE_MIN_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if n_total < samples.len() {
        return Err(Error::InvalidArgument("n_total below the sample count".into()));
    }
    if samples.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
        return Err(Error::InvalidArgument("kernel density samples must be positive and finite".into()));
    }
    if grid.iter().any(|&g| !(g > 0.0)) {
        return Err(Error::InvalidArgument("kernel density grid must be positive".into()));
    }
    let logs = sorted(&samples.iter().map(|s| s.ln()).collect::<Vec<_>>());
    let h = match bandwidth {
        Bandwidth::Fixed(h) => h,
        Bandwidth::Silverman => silverman(&logs),
    };
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InsufficientData(
            "degenerate sample: Silverman bandwidth is zero".into(),
        ));
    }
    let n = n_total as f64;
    let norm = 1.0 / (h * (2.0 * PI).sqrt());
    let reach = 8.0 * h;
    let mut values = Vec::with_capacity(grid.len());
    let mut stderr = Vec::with_capacity(grid.len());
    for &g in grid {
        let y = g.ln();
        let lo = logs.partition_point(|&v| v < y - reach);
        let hi = logs.partition_point(|&v| v <= y + reach);
        let (mut s, mut s2) = (0.0, 0.0);
        for &v in &logs[lo..hi] {
            let z = (y - v) / h;
            let c = norm * (-0.5 * z * z).exp() / g;
            s += c;
            s2 += c * c;
        }
        let f = s / n;
        values.push(f);
        stderr.push(((s2 / n - f * f).max(0.0) / n).sqrt());
    }
    DensityEstimate::new(
        grid.to_vec(),
        values,
        stderr,
        DensityKind::Pdf,
        format!("log-scale Gaussian KDE, bandwidth {h:.6e}, n = {}", samples.len()),
    )
}

fn silverman(sorted_logs: &[f64]) -> f64 {
    let n = sorted_logs.len() as f64;
    let mean = sorted_logs.iter().sum::<f64>() / n;
    let sd = (sorted_logs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let iqr = quantile(sorted_logs, 0.75) - quantile(sorted_logs, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    0.9 * spread * n.powf(-0.2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::log_grid;
    use crate::rng::RngStream;
    use rand_distr::{Distribution, StandardNormal};

    fn lognormal(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = RngStream::new(seed, 0);
        (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z.exp()
            })
            .collect()
    }

    #[test]
    fn point_mass_concentrates() {
        let samples = vec![1.0; 200];
        let grid = [0.5, 0.9, 0.99, 1.0, 1.01, 1.1, 2.0];
        let est = kde_pdf_with(&samples, 200, &grid, Bandwidth::Fixed(1e-3)).unwrap();
        let (peak, _) = est.at(1.0).unwrap();
        assert!(peak > 300.0);
        assert!(est.values[0] == 0.0 && est.values[6] == 0.0 && est.values[1] < 1e-10);
        assert!(kde_pdf(&samples, &grid).is_err());
    }

    #[test]
    fn integrates_to_one() {
        let s = lognormal(20_000, 1);
        let grid = log_grid(1e-3, 1e3, 800);
        let est = kde_pdf(&s, &grid).unwrap();
        assert!((est.integral() - 1.0).abs() < 0.02, "{}", est.integral());
    }

    fn lognormal_pdf(x: f64) -> f64 {
        (-(x.ln()).powi(2) / 2.0).exp() / (x * (2.0 * PI).sqrt())
    }

    #[test]
    fn lognormal_sup_error() {
        // quantile sample: no sampling noise, so only the estimator's own
        // error is measured
        let n = 100_000;
        use statrs::distribution::{ContinuousCDF, Normal};
        let std = Normal::new(0.0, 1.0).unwrap();
        let s: Vec<f64> = (0..n)
            .map(|i| std.inverse_cdf((i as f64 + 0.5) / n as f64).exp())
            .collect();
        let grid = log_grid(0.05, 20.0, 300);
        let est = kde_pdf(&s, &grid).unwrap();
        let worst = grid
            .iter()
            .zip(&est.values)
            .map(|(&x, &v)| (v - lognormal_pdf(x)).abs())
            .fold(0.0, f64::max);
        assert!(worst < 0.02, "sup error {worst}");
    }

    #[test]
    fn lognormal_errors_match_reported_stderr() {
        let s = lognormal(100_000, 2);
        let grid = log_grid(0.05, 20.0, 300);
        let est = kde_pdf(&s, &grid).unwrap();
        let z: Vec<f64> = grid
            .iter()
            .zip(est.values.iter().zip(&est.stderr))
            .map(|(&x, (&v, &se))| (v - lognormal_pdf(x)) / se)
            .collect();
        let rms = (z.iter().map(|z| z * z).sum::<f64>() / z.len() as f64).sqrt();
        assert!(z.iter().all(|z| z.abs() < 5.0));
        assert!((0.5..2.0).contains(&rms), "rms z = {rms}");
    }

    #[test]
    fn too_few_samples() {
        let s = lognormal(99, 3);
        assert!(matches!(kde_pdf(&s, &[1.0]), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let est = DensityEstimate::new(
            vec![0.1, 1.0 / 3.0, 2.0],
            vec![0.2, std::f64::consts::E, 1e-300],
            vec![0.0, 0.1, 1.0 / 7.0],
            DensityKind::Pdf,
            "test",
        )
        .unwrap();
        let back = DensityEstimate::from_csv(&est.to_csv(), "test").unwrap();
        assert_eq!(back, est);
    }

    #[test]
    fn cdf_is_clamped_with_flag() {
        let est = DensityEstimate::new(
            vec![1.0, 2.0, 3.0],
            vec![0.2, 0.1, 1.2],
            vec![0.0; 3],
            DensityKind::Cdf,
            "t",
        )
        .unwrap();
        assert!(est.clamped);
        assert_eq!(est.values, vec![0.2, 0.2, 1.0]);
        let ok = DensityEstimate::new(vec![1.0, 2.0], vec![0.1, 0.3], vec![0.0; 2], DensityKind::Cdf, "t").unwrap();
        assert!(!ok.clamped);
    }

    #[test]
    fn grid_must_increase() {
        let r = DensityEstimate::new(vec![1.0, 1.0], vec![0.0; 2], vec![0.0; 2], DensityKind::Pdf, "t");
        assert!(r.is_err());
    }
}
