//! Experiment configuration: one JSON document, every field defaulted.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::log_grid;
use crate::model::{StableModel, StableParams};
use crate::sampler::EnsembleSettings;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Log,
    Linear,
}

/// `points` abscissae from `start` to `end`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub start: f64,
    pub end: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl GridSpec {
    pub fn log(start: f64, end: f64, points: usize) -> Self {
        GridSpec {
            start,
            end,
            points,
            spacing: Spacing::Log,
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        let positive = self.spacing == Spacing::Linear || self.start > 0.0;
        if !(self.points >= 2 && self.start < self.end && positive && self.end.is_finite()) {
            return Err(Error::InvalidArgument(format!("{name} grid must be strictly increasing: {self:?}")));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        match self.spacing {
            Spacing::Log => log_grid(self.start, self.end, self.points),
            Spacing::Linear => (0..self.points)
                .map(|i| self.start + (self.end - self.start) * i as f64 / (self.points - 1) as f64)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grids {
    /// Times for densities of `T_x`, `T0`, `r_hat` and `m_hat`.
    pub time: GridSpec,
    /// Levels for the density of `S1`.
    pub level: GridSpec,
}

impl Default for Grids {
    fn default() -> Self {
        Grids {
            time: GridSpec::log(1e-3, 1e6, 600),
            level: GridSpec::log(1e-2, 1e2, 300),
        }
    }
}

/// Sizes and tolerances of the check battery. Times and levels are given
/// for `x = 1` and scaled with the level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CheckSettings {
    pub positivity_params: Vec<(f64, f64)>,
    pub positivity_samples: usize,
    pub positivity_tolerance: f64,
    pub fine_dt: f64,
    pub fine_horizon: f64,
    pub fine_samples: usize,
    pub scaling_ks: f64,
    pub overshoot_ks: f64,
    pub retention_eps: Vec<f64>,
    pub z_tolerance: f64,
    pub two_route_times: Vec<f64>,
    pub slope_window: (f64, f64),
    pub slope_points: usize,
    pub t0_slope_tolerance: f64,
    pub tx_slope_tolerance: f64,
    pub mellin_betas: Vec<f64>,
    pub mellin_tolerance: f64,
    pub mass_tolerance: f64,
    pub density_times: Vec<f64>,
    pub plateau_time: f64,
    pub plateau_tolerance: f64,
    pub large_window: (f64, f64),
    pub large_slope_tolerance: f64,
    pub resample_samples: usize,
    pub resample_ks: f64,
    pub lower_tail_levels: Vec<f64>,
    pub upper_tail_levels: Vec<f64>,
    pub tail_samples: usize,
    pub tail_tolerance: f64,
    pub short_horizon: f64,
    pub short_samples: usize,
    pub laplace_lambdas: Vec<f64>,
    pub laplace_tolerance: f64,
    pub ell_lambdas: (f64, f64),
    pub convolution_times: Vec<f64>,
    pub scalar_tolerance: f64,
    pub eps_stability_ks: f64,
}

impl Default for CheckSettings {
    fn default() -> Self {
        CheckSettings {
            positivity_params: vec![(1.5, 0.5), (1.3, 0.6), (1.8, 0.45), (1.5, 1.0 / 3.0)],
            positivity_samples: 200_000,
            positivity_tolerance: 0.01,
            fine_dt: 1e-4,
            fine_horizon: 10.0,
            fine_samples: 50_000,
            scaling_ks: 0.02,
            overshoot_ks: 0.02,
            retention_eps: vec![0.05, 0.1, 0.2],
            z_tolerance: 3.0,
            two_route_times: vec![0.25, 0.5, 1.0, 2.0],
            slope_window: (0.02, 0.2),
            slope_points: 12,
            t0_slope_tolerance: 0.15,
            tx_slope_tolerance: 0.1,
            mellin_betas: vec![0.3, 0.5, 0.7, 0.9, 1.2],
            mellin_tolerance: 0.1,
            mass_tolerance: 0.02,
            density_times: vec![0.5, 1.0, 2.0, 5.0],
            plateau_time: 0.01,
            plateau_tolerance: 0.1,
            large_window: (10.0, 200.0),
            large_slope_tolerance: 0.15,
            resample_samples: 50_000,
            resample_ks: 0.03,
            lower_tail_levels: vec![0.1, 0.05],
            upper_tail_levels: vec![3.0, 5.0, 8.0],
            tail_samples: 2_000_000,
            tail_tolerance: 0.15,
            short_horizon: 1.0,
            short_samples: 2_000_000,
            laplace_lambdas: vec![1.0, 2.0, 5.0],
            laplace_tolerance: 0.08,
            ell_lambdas: (25.0, 100.0),
            convolution_times: vec![0.5, 1.0, 2.0],
            scalar_tolerance: 0.1,
            eps_stability_ks: 0.03,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub params: StableParams,
    pub x: f64,
    pub n_samples: usize,
    pub dt: f64,
    pub horizon: f64,
    pub checkpoints: Vec<f64>,
    /// Overshoot thresholds whose retention `simulate` reports.
    pub eps_list: Vec<f64>,
    /// Threshold of the zero-overshoot ensemble; `None` means `0.02 x`.
    pub t0_eps: Option<f64>,
    pub refine: f64,
    pub early_refine: f64,
    pub grids: Grids,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    pub check: CheckSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            params: StableParams {
                alpha: 1.5,
                rho: 0.5,
                c: 1.0,
            },
            x: 1.0,
            n_samples: 100_000,
            dt: 1e-3,
            horizon: 50.0,
            checkpoints: vec![0.25, 0.5, 1.0, 2.0],
            eps_list: vec![0.02, 0.05, 0.1, 0.2],
            t0_eps: None,
            refine: 0.01,
            early_refine: 0.05,
            grids: Grids::default(),
            master_seed: 20_240_601,
            output_dir: PathBuf::from("out"),
            check: CheckSettings::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))
    }

    pub fn t0_eps(&self) -> f64 {
        self.t0_eps.unwrap_or(0.02 * self.x)
    }

    /// Checks every field; returns the model on success.
    pub fn validate(&self) -> Result<StableModel> {
        let model = StableModel::new(self.params)?;
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.x > 0.0 && self.dt > 0.0 && self.horizon > 0.0 && self.n_samples > 0) {
            return bad("x, dt, horizon and n_samples must be positive".into());
        }
        if self.checkpoints.iter().any(|&t| !(t >= 0.0 && t < self.horizon)) {
            return bad(format!("checkpoints must lie in [0, horizon = {})", self.horizon));
        }
        if self.eps_list.iter().any(|&e| !(e > 0.0)) || !(self.t0_eps() > 0.0) {
            return bad("overshoot thresholds must be positive".into());
        }
        self.grids.time.validate("time")?;
        self.grids.level.validate("level")?;
        self.main_settings().validate()?;
        Ok(model)
    }

    pub fn main_settings(&self) -> EnsembleSettings {
        EnsembleSettings {
            params: self.params,
            x: self.x,
            dt: self.dt,
            horizon: self.horizon,
            checkpoints: self.checkpoints.clone(),
            n_samples: self.n_samples,
            seed: self.master_seed,
            refine: self.refine,
            early_refine: self.early_refine,
            continue_censored: true,
        }
    }
}
