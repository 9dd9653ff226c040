//! The four commands. Each returns a serializable summary; files go to the
//! configured output directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::*;
use crate::model::{AsymptoteKind, DerivedConstants, StableModel, StableParams};
use crate::sampler::*;

use super::check::{run_check, CheckReport};
use super::config::ExperimentConfig;

pub const ENSEMBLE_STEM: &str = "ensemble";
pub const REPORT_FILE: &str = "check_report.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoteEntry {
    pub kind: AsymptoteKind,
    /// `x` for the supremum tails, `t` for times, `h` for the overshoot.
    pub variable: String,
    pub exponent: f64,
    /// Coefficient of `variable^exponent` at the configured level; `None`
    /// when only the exponent is known.
    pub prefactor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsSummary {
    pub params: StableParams,
    pub x: f64,
    pub constants: DerivedConstants,
    pub h: f64,
    pub h_hat: f64,
    pub asymptotes: Vec<AsymptoteEntry>,
}

pub fn cmd_constants(cfg: &ExperimentConfig) -> Result<ConstantsSummary> {
    let m = cfg.validate()?;
    let x = cfg.x;
    let (h, h_hat) = m.h_functions(x)?;
    let asymptotes = AsymptoteKind::ALL
        .iter()
        .map(|&kind| {
            let (variable, prefactor) = match kind {
                AsymptoteKind::SupLower | AsymptoteKind::SupUpper => ("x", m.asymptote(kind, 1.0, 0.0)),
                AsymptoteKind::OvershootSmall => ("h", m.asymptote(kind, x, 1.0)),
                _ => ("t", m.asymptote(kind, x, 1.0)),
            };
            AsymptoteEntry {
                kind,
                variable: variable.into(),
                exponent: m.asymptote_exponent(kind),
                prefactor: prefactor.ok(),
            }
        })
        .collect();
    Ok(ConstantsSummary {
        params: m.params,
        x,
        constants: m.constants,
        h,
        h_hat,
        asymptotes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Retention {
    pub eps: f64,
    pub retained: f64,
    pub stderr: f64,
    pub exact: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateSummary {
    pub csv: PathBuf,
    pub sidecar: PathBuf,
    pub n_records: usize,
    pub censored_fraction: f64,
    pub unresolved: usize,
    pub retention: Vec<Retention>,
}

fn config_value(cfg: &ExperimentConfig) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(cfg)?)
}

pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<SimulateSummary> {
    let m = cfg.validate()?;
    let ens = generate_passage_ensemble(&cfg.main_settings())?;
    let (csv, sidecar) = write_ensemble(&ens, &cfg.output_dir, ENSEMBLE_STEM, config_value(cfg)?)?;
    let retention = cfg
        .eps_list
        .iter()
        .map(|&eps| {
            let e = t0_epsilon_ensemble(&ens, &m, eps)?;
            Ok(Retention {
                eps,
                retained: e.retained.value,
                stderr: e.retained.stderr,
                exact: e.exact_retention,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SimulateSummary {
        csv,
        sidecar,
        n_records: ens.len(),
        censored_fraction: ens.censored_count as f64 / ens.len() as f64,
        unresolved: ens.unresolved_count(),
        retention,
    })
}

/// The main ensemble: read from the output directory when a file written
/// with the same settings exists, generated and written otherwise.
pub fn load_or_simulate(cfg: &ExperimentConfig) -> Result<PassageEnsemble> {
    let settings = cfg.main_settings();
    let csv = cfg.output_dir.join(format!("{ENSEMBLE_STEM}.csv"));
    if csv.exists() {
        if let Ok(ens) = read_ensemble(&csv) {
            if ens.settings == settings {
                return Ok(ens);
            }
        }
    }
    let ens = generate_passage_ensemble(&settings)?;
    write_ensemble(&ens, &cfg.output_dir, ENSEMBLE_STEM, config_value(cfg)?)?;
    Ok(ens)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityTarget {
    Tx,
    T0,
    S1,
    Rhat,
    Mhat,
}

impl DensityTarget {
    pub fn tag(self) -> &'static str {
        match self {
            DensityTarget::Tx => "tx",
            DensityTarget::T0 => "t0",
            DensityTarget::S1 => "s1",
            DensityTarget::Rhat => "rhat",
            DensityTarget::Mhat => "mhat",
        }
    }
}

impl std::str::FromStr for DensityTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tx" => Ok(DensityTarget::Tx),
            "t0" => Ok(DensityTarget::T0),
            "s1" => Ok(DensityTarget::S1),
            "rhat" => Ok(DensityTarget::Rhat),
            "mhat" => Ok(DensityTarget::Mhat),
            _ => Err(Error::InvalidArgument(format!("unknown density target `{s}` (tx, t0, s1, rhat, mhat)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySummary {
    pub target: DensityTarget,
    /// Stems of the written `<stem>.csv` / `<stem>.json` pairs.
    pub files: Vec<PathBuf>,
    /// Fitted small-time log-log slope of the `T0` density, with the
    /// exponent it should approach.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub small_time_slope: Option<(f64, f64, f64)>,
    pub config: ExperimentConfig,
}

fn write_curve(est: &DensityEstimate, dir: &Path, stem: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    est.write_files(dir, stem)?;
    files.push(dir.join(stem));
    Ok(())
}

fn t0_density(ens: &PassageEnsemble, m: &StableModel, cfg: &ExperimentConfig) -> Result<DensityEstimate> {
    let t0 = t0_epsilon_ensemble(ens, m, cfg.t0_eps())?;
    let mut est = kde_pdf_with(&t0.times(), t0.samples.len(), &cfg.grids.time.values(), Bandwidth::Silverman)?;
    est.provenance = "kde".into();
    Ok(est)
}

pub fn cmd_density(cfg: &ExperimentConfig, target: DensityTarget) -> Result<DensitySummary> {
    let m = cfg.validate()?;
    let x = cfg.x;
    let ens = load_or_simulate(cfg)?;
    let dir = &cfg.output_dir;
    let mut files = Vec::new();
    let mut small_time_slope = None;
    let t0s = || t0_epsilon_ensemble(&ens, &m, cfg.t0_eps()).map(|e| e.samples);
    match target {
        DensityTarget::Tx => {
            let grid = cfg.grids.time.values();
            write_curve(&ftx_density(&t0s()?, &m, x, &grid)?, dir, "density_tx_theorem", &mut files)?;
            let times: Vec<f64> = ens.records.iter().filter_map(|r| r.eventual()).map(|p| p.time).collect();
            let mut kde = kde_pdf_with(&times, ens.len(), &grid, Bandwidth::Silverman)?;
            kde.provenance = "kde".into();
            write_curve(&kde, dir, "density_tx_kde", &mut files)?;
        }
        DensityTarget::T0 => {
            let est = t0_density(&ens, &m, cfg)?;
            let (lo, hi) = cfg.check.slope_window;
            let scale = x.powf(m.alpha());
            let s = tail_slope_density(&est, lo * scale, hi * scale)?;
            small_time_slope = Some((s.slope, s.stderr, m.asymptote_exponent(AsymptoteKind::Ft0Small)));
            write_curve(&est, dir, "density_t0", &mut files)?;
        }
        DensityTarget::S1 => {
            // times t = (x / y)^alpha for the level grid, in increasing order
            let a = m.alpha();
            let mut times: Vec<f64> = cfg.grids.level.values().iter().map(|y| (x / y).powf(a)).collect();
            times.reverse();
            let ftx = ftx_density(&t0s()?, &m, x, &times)?;
            write_curve(&fs1_from_ftx(&ftx, &m, x)?, dir, "density_s1", &mut files)?;
        }
        DensityTarget::Rhat | DensityTarget::Mhat => {
            let mq = meander_quantities_from_t0(&t0_density(&ens, &m, cfg)?, &m, x)?;
            if target == DensityTarget::Rhat {
                write_curve(&mq.r_hat, dir, "density_rhat", &mut files)?;
            } else {
                write_curve(&mq.m_hat, dir, "density_mhat", &mut files)?;
            }
        }
    }
    let summary = DensitySummary {
        target,
        files,
        small_time_slope,
        config: cfg.clone(),
    };
    let run = dir.join(format!("density_{}_run.json", target.tag()));
    fs::write(&run, serde_json::to_string_pretty(&summary)? + "\n").map_err(|e| Error::io(&run, e))?;
    Ok(summary)
}

/// Runs the battery and writes the report to `<output_dir>/check_report.json`.
pub fn cmd_check(cfg: &ExperimentConfig, k0_scale: f64, progress: &mut dyn FnMut(&str)) -> Result<CheckReport> {
    let report = run_check(cfg, k0_scale, progress)?;
    fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
    let path = cfg.output_dir.join(REPORT_FILE);
    fs::write(&path, report.to_json()?).map_err(|e| Error::io(&path, e))?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_summary() {
        let s = cmd_constants(&ExperimentConfig::default()).unwrap();
        assert!((s.constants.k0 - 0.6138750814725831).abs() < 1e-13);
        assert_eq!(s.asymptotes.len(), 9);
        let last_value = s.asymptotes.iter().find(|e| e.kind == AsymptoteKind::Ft0Large).unwrap();
        assert!(last_value.prefactor.is_none());
        let upper = s.asymptotes.iter().find(|e| e.kind == AsymptoteKind::SupUpper).unwrap();
        assert_eq!(upper.prefactor, Some(s.constants.k_inf));
    }

    #[test]
    fn targets_parse() {
        for t in ["tx", "t0", "s1", "rhat", "mhat"] {
            assert_eq!(t.parse::<DensityTarget>().unwrap().tag(), t);
        }
        assert!("sup".parse::<DensityTarget>().is_err());
    }

    fn small(dir: &Path) -> ExperimentConfig {
        ExperimentConfig {
            n_samples: 4000,
            dt: 1e-2,
            horizon: 20.0,
            t0_eps: Some(0.1),
            output_dir: dir.to_path_buf(),
            ..Default::default()
        }
    }

    #[test]
    fn s1_curve_is_alpha_times_tx_curve_at_one() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small(dir.path());
        cfg.grids.level = super::super::config::GridSpec::log(0.5, 2.0, 3);
        cfg.grids.time = super::super::config::GridSpec::log(0.5, 2.0, 3);
        let s1 = cmd_density(&cfg, DensityTarget::S1).unwrap();
        let tx = cmd_density(&cfg, DensityTarget::Tx).unwrap();
        let read = |p: &PathBuf| -> DensityEstimate {
            serde_json::from_str(&fs::read_to_string(p.with_extension("json")).unwrap()).unwrap()
        };
        let (fs1, ftx) = (read(&s1.files[0]), read(&tx.files[0]));
        assert_eq!(ftx.provenance, "theorem");
        assert_eq!(read(&tx.files[1]).provenance, "kde");
        assert!((fs1.abscissae[1] - 1.0).abs() < 1e-12);
        assert!((fs1.values[1] - 1.5 * ftx.values[1]).abs() < 1e-12 * ftx.values[1]);
    }

    #[test]
    fn simulate_then_density_reuses_the_ensemble() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small(dir.path());
        let s = cmd_simulate(&cfg).unwrap();
        assert_eq!(s.n_records, 4000);
        assert_eq!(fs::read_to_string(&s.csv).unwrap().lines().count(), 4001);
        let before = fs::metadata(&s.csv).unwrap().modified().unwrap();
        cmd_density(&cfg, DensityTarget::T0).unwrap();
        assert_eq!(fs::metadata(&s.csv).unwrap().modified().unwrap(), before);
    }
}
