//! The identity-check battery behind `check` and the acceptance target.
//!
//! Rows are grouped by criterion number; criterion 0 holds supporting
//! design checks. The report is a pure function of the configuration: it
//! carries no timings, and every ensemble is seeded from the master seed.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::estimators::*;
use crate::model::{AsymptoteKind, StableModel, StableParams};
use crate::rng::{derive_seed, RngStream};
use crate::sampler::*;

use super::config::ExperimentConfig;

const TAG_POSITIVITY: u64 = 0x504f_5349;
const TAG_FINE: u64 = 0x4649_4e45;
const TAG_BETA: u64 = 0x4245_5441;
const TAG_RESAMPLE: u64 = 0x5253_4d50;
const TAG_SHORT: u64 = 0x5348_5254;
const TAG_LOWER: u64 = 0x4c4f_5752;

/// How a row's numbers decide its verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// `|lhs - rhs| <= tolerance`
    AbsDiff,
    /// `|lhs / rhs - 1| <= tolerance`
    RelDiff,
    /// `lhs < tolerance`
    Below,
    /// `lhs < rhs`
    Less,
}

impl Rule {
    fn holds(self, lhs: f64, rhs: f64, tol: f64) -> bool {
        match self {
            Rule::AbsDiff => (lhs - rhs).abs() <= tol,
            Rule::RelDiff => (lhs / rhs - 1.0).abs() <= tol,
            Rule::Below => lhs < tol,
            Rule::Less => lhs < rhs,
        }
    }
}

// Non-finite numbers are written as null and read back as NaN.
fn ser_num<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_none()
    }
}

fn de_num<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub criterion: u8,
    pub name: String,
    #[serde(serialize_with = "ser_num", deserialize_with = "de_num")]
    pub lhs: f64,
    #[serde(serialize_with = "ser_num", deserialize_with = "de_num")]
    pub rhs: f64,
    #[serde(serialize_with = "ser_num", deserialize_with = "de_num")]
    pub tolerance: f64,
    #[serde(serialize_with = "ser_num", deserialize_with = "de_num")]
    pub stderr: f64,
    pub rule: Rule,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl CheckRow {
    pub fn new(criterion: u8, name: impl Into<String>, rule: Rule, lhs: f64, rhs: f64, tolerance: f64, stderr: f64) -> Self {
        CheckRow {
            criterion,
            name: name.into(),
            lhs,
            rhs,
            tolerance,
            stderr,
            rule,
            pass: rule.holds(lhs, rhs, tolerance),
            note: String::new(),
        }
    }

    fn failed(criterion: u8, name: impl Into<String>, err: &Error) -> Self {
        let mut row = CheckRow::new(criterion, name, Rule::AbsDiff, f64::NAN, f64::NAN, f64::NAN, f64::NAN);
        row.note = format!("error: {err}");
        row
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }
}

/// A number reported for context; it does not enter the verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub name: String,
    #[serde(serialize_with = "ser_num", deserialize_with = "de_num")]
    pub value: f64,
    #[serde(serialize_with = "ser_num", deserialize_with = "de_num")]
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionVerdict {
    pub criterion: u8,
    pub rows: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub pass: bool,
    pub criteria: Vec<CriterionVerdict>,
    pub rows: Vec<CheckRow>,
    pub diagnostics: Vec<Diagnostic>,
    pub k0_scale: f64,
    pub config: ExperimentConfig,
}

impl CheckReport {
    fn assemble(rows: Vec<CheckRow>, diagnostics: Vec<Diagnostic>, k0_scale: f64, config: ExperimentConfig) -> Self {
        let mut ids: Vec<u8> = rows.iter().map(|r| r.criterion).collect();
        ids.sort_unstable();
        ids.dedup();
        let criteria = ids
            .into_iter()
            .map(|c| {
                let mine: Vec<&CheckRow> = rows.iter().filter(|r| r.criterion == c).collect();
                CriterionVerdict {
                    criterion: c,
                    rows: mine.len(),
                    pass: mine.iter().all(|r| r.pass),
                }
            })
            .collect();
        CheckReport {
            pass: rows.iter().all(|r| r.pass),
            criteria,
            rows,
            diagnostics,
            k0_scale,
            config,
        }
    }

    pub fn criterion(&self, c: u8) -> Option<&CriterionVerdict> {
        self.criteria.iter().find(|v| v.criterion == c)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

struct Battery<'a> {
    cfg: &'a ExperimentConfig,
    /// Model whose constants the estimators use (`k0` may be perturbed).
    model: StableModel,
    /// Time scale `x^alpha` of the level.
    tscale: f64,
    rows: Vec<CheckRow>,
    diagnostics: Vec<Diagnostic>,
    progress: &'a mut dyn FnMut(&str),
}

impl Battery<'_> {
    fn push(&mut self, row: CheckRow) {
        self.rows.push(row);
    }

    fn push_result(&mut self, criterion: u8, name: &str, row: Result<CheckRow>) {
        let row = row.unwrap_or_else(|e| CheckRow::failed(criterion, name, &e));
        self.rows.push(row);
    }

    fn diag(&mut self, name: impl Into<String>, value: f64, stderr: f64) {
        self.diagnostics.push(Diagnostic {
            name: name.into(),
            value,
            stderr,
        });
    }

    fn seed(&self, tag: u64) -> u64 {
        derive_seed(self.cfg.master_seed, tag)
    }

    fn settings(&self, x: f64, dt: f64, horizon: f64, n: usize, seed: u64, continue_censored: bool) -> EnsembleSettings {
        EnsembleSettings {
            params: self.cfg.params,
            x,
            dt,
            horizon,
            checkpoints: vec![],
            n_samples: n,
            seed,
            refine: self.cfg.refine,
            early_refine: self.cfg.early_refine,
            continue_censored,
        }
    }

    fn positivity(&mut self) {
        let c = &self.cfg.check;
        let n = c.positivity_samples;
        let mut rows = Vec::new();
        for (i, &(a, r)) in c.positivity_params.iter().enumerate() {
            let name = format!("positivity alpha={a} rho={r:.4}");
            let row = StableParams::new(a, r, 1.0).and_then(StableModel::new).map(|m| {
                let incs = StableIncrements::new(&m, 1.0);
                let mut rng = RngStream::new(self.seed(TAG_POSITIVITY), i as u64);
                let mut buf = vec![0.0; n];
                incs.fill(&mut rng, &mut buf);
                let frac = buf.iter().filter(|&&v| v > 0.0).count() as f64 / n as f64;
                let se = (r * (1.0 - r) / n as f64).sqrt();
                CheckRow::new(1, &name, Rule::AbsDiff, frac, r, c.positivity_tolerance, se)
            });
            rows.push(row.unwrap_or_else(|e| CheckRow::failed(1, name, &e)));
        }
        self.rows.extend(rows);
    }

    /// Criteria 2 and 3; returns the direct passage times for criterion 9.
    fn fine(&mut self) -> Result<Vec<f64>> {
        let c = &self.cfg.check;
        let x = self.cfg.x;
        let a = self.cfg.params.alpha;
        let s = self.settings(x, c.fine_dt, c.fine_horizon * self.tscale, c.fine_samples, self.seed(TAG_FINE), true);
        (self.progress)("fine passage ensemble");
        let ens = generate_passage_ensemble(&s)?;
        (self.progress)("fine supremum ensemble");
        let sup = generate_supremum_ensemble(&s, 1.0)?;
        let times: Vec<f64> = ens
            .records
            .iter()
            .map(|r| r.eventual().map_or(f64::INFINITY, |p| p.time))
            .collect();
        let from_sup: Vec<f64> = sup.iter().map(|&v| x.powf(a) * v.powf(-a)).collect();
        let (n1, n2) = (times.len(), from_sup.len());
        let ks = ks_two_sample(&from_sup, &times)?;
        self.push(
            CheckRow::new(2, "scaling KS(x^a S1^-a, T_x)", Rule::Below, ks, 0.0, c.scaling_ks, f64::NAN)
                .with_note(format!("5% critical value {:.4}", ks_critical_value(n1, n2, 0.05))),
        );
        let overshoots: Vec<f64> = ens.records.iter().filter_map(|r| r.eventual()).map(|p| p.overshoot / x).collect();
        let ar = self.cfg.params.alpha_rho();
        let mut rng = RngStream::new(self.seed(TAG_BETA), 0);
        let exact = sample_inverse_beta_excess(&mut rng, ar, 1.0 - ar, overshoots.len());
        let ks = ks_two_sample(&overshoots, &exact)?;
        self.push(
            CheckRow::new(3, "overshoot KS(X_T/x - 1, 1/Beta - 1)", Rule::Below, ks, 0.0, c.overshoot_ks, f64::NAN)
                .with_note(format!(
                    "{} unresolved paths; 5% critical value {:.4}",
                    ens.unresolved_count(),
                    ks_critical_value(overshoots.len(), exact.len(), 0.05)
                )),
        );
        self.diag("fine ensemble censored fraction", ens.censored_count as f64 / n1 as f64, f64::NAN);
        Ok(times)
    }

    fn main(&mut self, direct_times: Option<&[f64]>) -> Result<()> {
        let cfg = self.cfg;
        let c = &cfg.check;
        let x = cfg.x;
        let (a, r) = (cfg.params.alpha, cfg.params.rho);
        let m = self.model;
        (self.progress)("main passage ensemble");
        let ens = generate_passage_ensemble(&cfg.main_settings())?;
        let n = ens.len();
        self.diag("main ensemble censored fraction", ens.censored_count as f64 / n as f64, f64::NAN);
        self.diag("main ensemble unresolved paths", ens.unresolved_count() as f64, f64::NAN);
        (self.progress)("estimators on the main ensemble");

        for &eps in &c.retention_eps {
            let name = format!("retention eps={eps}");
            let row = t0_epsilon_ensemble(&ens, &m, eps * x).map(|e| {
                let p = e.exact_retention;
                let se = (p * (1.0 - p) / n as f64).sqrt();
                CheckRow::new(4, &name, Rule::AbsDiff, e.retained.value, p, c.z_tolerance * se, se)
            });
            self.push_result(4, &name, row);
        }

        for &t in &c.two_route_times {
            let t = t * self.tscale;
            let name = format!("two-route T0 law t={t}");
            let row = t0_cdf_timeweight(&ens, &m, t).and_then(|cdf| {
                let s = t0_survival_pathweight(&ens, &m, t)?;
                let (ce, se) = (cdf.estimate, s.probability.estimate);
                let tol = c.z_tolerance * ce.combined_stderr(se);
                Ok(CheckRow::new(5, &name, Rule::AbsDiff, ce.value + se.value, 1.0, tol, ce.combined_stderr(se))
                    .with_note(format!("cdf {:.6}, survival {:.6}, capped mass {:.2e}", ce.value, se.value, s.capped_mass)))
            });
            self.push_result(5, &name, row);
        }

        let window = log_grid(c.slope_window.0 * self.tscale, c.slope_window.1 * self.tscale, c.slope_points);
        let row = window
            .iter()
            .map(|&t| t0_cdf_timeweight(&ens, &m, t).map(|p| p.estimate.value))
            .collect::<Result<Vec<f64>>>()
            .and_then(|v| tail_slope_points(&window, &v))
            .map(|s| CheckRow::new(6, "T0 CDF small-time slope", Rule::AbsDiff, s.slope, 1.0 + r, c.t0_slope_tolerance, s.stderr));
        self.push_result(6, "T0 CDF small-time slope", row);
        let times: Vec<f64> = ens
            .records
            .iter()
            .map(|rec| rec.eventual().map_or(f64::INFINITY, |p| p.time))
            .collect();
        let sorted_times = {
            let mut v = times.clone();
            v.sort_by(f64::total_cmp);
            v
        };
        let ecdf = |t: f64| sorted_times.partition_point(|&v| v <= t) as f64 / n as f64;
        let row = tail_slope_points(&window, &window.iter().map(|&t| ecdf(t)).collect::<Vec<_>>())
            .map(|s| CheckRow::new(6, "T_x CDF small-time slope", Rule::AbsDiff, s.slope, 1.0, c.tx_slope_tolerance, s.stderr));
        self.push_result(6, "T_x CDF small-time slope", row);

        let eps = cfg.t0_eps();
        let t0 = match t0_epsilon_ensemble(&ens, &m, eps) {
            Ok(t0) => t0,
            Err(e) => {
                for (k, name) in [(7, "Mellin"), (8, "theorem density"), (9, "resampling"), (11, "Laplace"), (12, "meander")] {
                    self.push(CheckRow::failed(k, format!("{name}: zero-overshoot ensemble"), &e));
                }
                return Ok(());
            }
        };
        let t0s = &t0.samples;
        self.diag("zero-overshoot samples", t0s.len() as f64, f64::NAN);
        self.diag("zero-overshoot retention z-score", t0.retention_zscore(), f64::NAN);
        let row = t0_epsilon_ensemble(&ens, &m, eps / 2.5).and_then(|fine| ks_two_sample(&t0.times(), &fine.times())).map(|ks| {
            CheckRow::new(0, format!("eps stability KS(eps={eps}, eps/2.5)"), Rule::Below, ks, 0.0, c.eps_stability_ks, f64::NAN)
        });
        self.push_result(0, "eps stability", row);

        for &b in &c.mellin_betas {
            let name = format!("Mellin beta={b}");
            let row = mellin_check(&ens, t0s, &m, b)
                .map(|mc| CheckRow::new(7, &name, Rule::RelDiff, mc.lhs.value, mc.rhs.value, c.mellin_tolerance, mc.ratio.stderr));
            self.push_result(7, &name, row);
        }
        let (with_rho, without) = mellin_rho_candidates(&m, x);
        let name = "Mellin beta=rho constant";
        let row = mellin_check(&ens, t0s, &m, r).map(|mc| {
            let (dw, dn) = (mc.lhs.value / with_rho - 1.0, mc.lhs.value / without - 1.0);
            let supported = if dw.abs() < dn.abs() { "with the factor rho" } else { "without the factor rho" };
            CheckRow::new(7, name, Rule::RelDiff, mc.lhs.value, with_rho, c.mellin_tolerance, mc.lhs.stderr).with_note(format!(
                "E[T0^-rho] supports the constant {supported}: {dw:+.4} relative to {with_rho:.6} (with), {dn:+.4} relative to {without:.6} (without)"
            ))
        });
        self.push_result(7, name, row);

        let row = ftx_mass(t0s, &m, x, cfg.horizon)
            .map(|fm| CheckRow::new(8, "theorem density total mass", Rule::AbsDiff, fm.total.value, 1.0, c.mass_tolerance, fm.total.stderr)
                .with_note(format!("analytic tail beyond {}: {:.6}", fm.horizon, fm.tail)));
        self.push_result(8, "theorem density total mass", row);
        let finite: Vec<f64> = times.iter().copied().filter(|t| t.is_finite()).collect();
        let points: Vec<f64> = c.density_times.iter().map(|t| t * self.tscale).collect();
        match kde_pdf_with(&finite, n, &points, Bandwidth::Silverman) {
            Ok(kde) => {
                for (i, &t) in points.iter().enumerate() {
                    let name = format!("theorem density vs KDE t={t}");
                    let row = ftx_from_t0(t0s, &m, x, t).map(|f| {
                        let se = f.stderr.hypot(kde.stderr[i]);
                        CheckRow::new(8, &name, Rule::AbsDiff, f.value, kde.values[i], c.z_tolerance * se, se)
                    });
                    self.push_result(8, &name, row);
                }
            }
            Err(e) => self.push(CheckRow::failed(8, "theorem density vs KDE", &e)),
        }
        let tp = c.plateau_time * self.tscale;
        let plateau = m.asymptote(AsymptoteKind::FtxSmall, x, tp)?;
        let row = ftx_from_t0(t0s, &m, x, tp).map(|f| {
            CheckRow::new(8, format!("theorem density plateau t={tp}"), Rule::RelDiff, f.value, plateau, c.plateau_tolerance, f.stderr)
        });
        self.push_result(8, "theorem density plateau", row);
        if let Ok(k) = kde_pdf_with(&finite, n, &[tp], Bandwidth::Silverman) {
            self.diag(format!("direct KDE of T_x at t={tp} over the plateau value"), k.values[0] / plateau, k.stderr[0] / plateau);
        }
        let large = log_grid(c.large_window.0 * self.tscale, c.large_window.1 * self.tscale, c.slope_points);
        let row = large
            .iter()
            .map(|&t| ftx_from_t0(t0s, &m, x, t).map(|e| e.value))
            .collect::<Result<Vec<f64>>>()
            .and_then(|v| tail_slope_points(&large, &v))
            .map(|s| CheckRow::new(8, "theorem density large-time slope", Rule::AbsDiff, s.slope, -(1.0 + r), c.large_slope_tolerance, s.stderr));
        self.push_result(8, "theorem density large-time slope", row);

        let name = "resampling KS(resampled, direct T_x)";
        let mut rng = RngStream::new(self.seed(TAG_RESAMPLE), 0);
        let row = resample_tx_from_t0(&mut rng, t0s, &m, c.resample_samples).and_then(|rs| {
            let direct = direct_times.ok_or_else(|| Error::InsufficientData("no direct passage times".into()))?;
            let ks = ks_two_sample(&rs.samples, direct)?;
            Ok(CheckRow::new(9, name, Rule::Below, ks, 0.0, c.resample_ks, f64::NAN).with_note(format!(
                "effective sample size {:.0}; 5% critical value {:.4}",
                rs.weighted.effective_sample_size,
                ks_critical_value(rs.samples.len(), direct.len(), 0.05)
            )))
        });
        self.push_result(9, name, row);

        for &l in &c.laplace_lambdas {
            let name = format!("Laplace cross-route lambda={l}");
            let row = laplace_suite(&ens, t0s, &m, l).map(|s| {
                CheckRow::new(11, &name, Rule::RelDiff, s.l_t0_direct.value, s.l_t0_formula.value, c.laplace_tolerance, s.cross_ratio().stderr)
            });
            self.push_result(11, &name, row);
        }

        let grid = cfg.grids.time.values();
        match kde_pdf_with(&t0.times(), t0s.len(), &grid, Bandwidth::Silverman).and_then(|ft0| meander_quantities_from_t0(&ft0, &m, x)) {
            Ok(mq) => {
                for &t in &c.convolution_times {
                    let t = t * self.tscale;
                    let name = format!("convolution route vs theorem t={t}");
                    let row = ftx_convolution(&mq, &m, t).and_then(|cv| {
                        let f = ftx_from_t0(t0s, &m, x, t)?;
                        let se = cv.combined_stderr(f);
                        Ok(CheckRow::new(12, &name, Rule::AbsDiff, cv.value, f.value, c.z_tolerance * se, se))
                    });
                    self.push_result(12, &name, row);
                }
                let sc = meander_scalar(&mq, &m);
                self.push(CheckRow::new(12, "meander scalar", Rule::RelDiff, sc.value, meander_scalar_exact(&m), c.scalar_tolerance, sc.stderr));
            }
            Err(e) => self.push(CheckRow::failed(12, "meander quantities", &e)),
        }
        let _ = a;
        Ok(())
    }

    /// Upper supremum tail (criterion 10) and slow variation (criterion 11)
    /// from one short ensemble.
    fn short(&mut self) -> Result<()> {
        let cfg = self.cfg;
        let c = &cfg.check;
        let x = cfg.x;
        let a = cfg.params.alpha;
        let m = self.model;
        let horizon = c.short_horizon * self.tscale;
        let s = self.settings(x, cfg.dt, horizon, c.short_samples, self.seed(TAG_SHORT), false);
        (self.progress)("short passage ensemble");
        let ens = generate_passage_ensemble(&s)?;
        let n = ens.len() as f64;
        let mut passed: Vec<f64> = ens.records.iter().filter_map(|r| r.passage_time()).collect();
        passed.sort_by(f64::total_cmp);

        let mut levels = c.upper_tail_levels.clone();
        levels.sort_by(f64::total_cmp);
        let mut devs = Vec::new();
        for &y in &levels {
            // P(S1 > y) = P(T_y <= 1) = P(T_x <= (x / y)^alpha)
            let t = (x / y).powf(a);
            let name = format!("upper tail y^a P(S1 > y) y={y}");
            if t > horizon {
                self.push(CheckRow::failed(10, &name, &Error::OutsideWindow { t, limit: horizon }));
                continue;
            }
            let p = passed.partition_point(|&v| v <= t) as f64 / n;
            let scale = y.powf(a);
            let se = (p * (1.0 - p) / n).sqrt() * scale;
            let row = CheckRow::new(10, &name, Rule::RelDiff, scale * p, m.k_inf(), c.tail_tolerance, se);
            devs.push((y, (row.lhs / row.rhs - 1.0).abs()));
            self.push(row);
        }
        for w in devs.windows(2) {
            self.push(CheckRow::new(
                10,
                format!("upper tail trend y={} closer than y={}", w[1].0, w[0].0),
                Rule::Less,
                w[1].1,
                w[0].1,
                0.0,
                f64::NAN,
            ));
        }

        let t0s = [Passage {
            time: 1.0,
            bracket: 1.0,
            overshoot: 0.0,
        }];
        let (l1, l2) = c.ell_lambdas;
        let row = laplace_suite(&ens, &t0s, &m, l1).and_then(|s1| {
            let s2 = laplace_suite(&ens, &t0s, &m, l2)?;
            let (r1, r2) = (s1.ell_ratio(), s2.ell_ratio());
            Ok(CheckRow::new(11, format!("ell trend lambda={l2} closer than lambda={l1}"), Rule::Less, (r2.value - 1.0).abs(), (r1.value - 1.0).abs(), 0.0, r1.combined_stderr(r2))
                .with_note(format!("ell/limit = {:.4} +- {:.4} at {l1}, {:.4} +- {:.4} at {l2}", r1.value, r1.stderr, r2.value, r2.stderr)))
        });
        self.push_result(11, "ell trend", row);

        // the same slopes one decade closer to zero, for context
        let (w0, w1) = c.slope_window;
        let window = log_grid(w0 * self.tscale / 10.0, w1 * self.tscale / 10.0, c.slope_points);
        let ecdf: Vec<f64> = window.iter().map(|&t| passed.partition_point(|&v| v <= t) as f64 / n).collect();
        if let Ok(s) = tail_slope_points(&window, &ecdf) {
            self.diag(format!("T_x CDF slope over [{:.3}, {:.3}]", window[0], window[window.len() - 1]), s.slope, s.stderr);
        }
        let t0cdf: Result<Vec<f64>> = window.iter().map(|&t| t0_cdf_timeweight(&ens, &m, t).map(|p| p.estimate.value)).collect();
        if let Ok(s) = t0cdf.and_then(|v| tail_slope_points(&window, &v)) {
            self.diag(format!("T0 CDF slope over [{:.3}, {:.3}]", window[0], window[window.len() - 1]), s.slope, s.stderr);
        }
        Ok(())
    }

    /// Lower supremum tail (criterion 10): `P(S1 <= y) = P(T_y > 1)`.
    fn lower(&mut self) {
        let cfg = self.cfg;
        let c = &cfg.check;
        let ar = cfg.params.alpha_rho();
        let mut levels = c.lower_tail_levels.clone();
        levels.sort_by(|a, b| b.total_cmp(a));
        let mut devs = Vec::new();
        for (i, &y) in levels.iter().enumerate() {
            let name = format!("lower tail y^-ar P(S1 <= y) y={y}");
            let s = self.settings(y, cfg.dt, 1.0, c.tail_samples, self.seed(TAG_LOWER + i as u64), false);
            (self.progress)(&format!("lower-tail ensemble at level {y}"));
            match generate_passage_ensemble(&s) {
                Ok(ens) => {
                    let n = ens.len() as f64;
                    let p = ens.censored_count as f64 / n;
                    let scale = y.powf(-ar);
                    let se = (p * (1.0 - p) / n).sqrt() * scale;
                    let row = CheckRow::new(10, &name, Rule::RelDiff, scale * p, self.model.k0(), c.tail_tolerance, se);
                    devs.push((y, (row.lhs / row.rhs - 1.0).abs()));
                    self.push(row);
                }
                Err(e) => self.push(CheckRow::failed(10, &name, &e)),
            }
        }
        for w in devs.windows(2) {
            self.push(CheckRow::new(
                10,
                format!("lower tail trend y={} closer than y={}", w[1].0, w[0].0),
                Rule::Less,
                w[1].1,
                w[0].1,
                0.0,
                f64::NAN,
            ));
        }
    }
}

/// Runs the battery. `k0_scale` perturbs the `k0` the estimators see (a
/// sensitivity hook; 1 for real runs). `progress` receives stage names.
pub fn run_check(cfg: &ExperimentConfig, k0_scale: f64, progress: &mut dyn FnMut(&str)) -> Result<CheckReport> {
    let model = cfg.validate()?;
    let mut b = Battery {
        cfg,
        model: model.with_k0_scaled(k0_scale),
        tscale: cfg.x.powf(cfg.params.alpha),
        rows: Vec::new(),
        diagnostics: Vec::new(),
        progress,
    };
    (b.progress)("positivity");
    b.positivity();
    let direct = match b.fine() {
        Ok(t) => Some(t),
        Err(e) => {
            b.push(CheckRow::failed(2, "fine ensemble", &e));
            b.push(CheckRow::failed(3, "fine ensemble", &e));
            None
        }
    };
    if let Err(e) = b.main(direct.as_deref()) {
        b.push(CheckRow::failed(5, "main ensemble", &e));
    }
    if let Err(e) = b.short() {
        b.push(CheckRow::failed(10, "short ensemble", &e));
        b.push(CheckRow::failed(11, "short ensemble", &e));
    }
    b.lower();
    let (rows, diagnostics) = (b.rows, b.diagnostics);
    Ok(CheckReport::assemble(rows, diagnostics, k0_scale, cfg.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rules() {
        assert!(Rule::AbsDiff.holds(1.0, 1.05, 0.1));
        assert!(!Rule::RelDiff.holds(1.2, 1.0, 0.1));
        assert!(Rule::Below.holds(0.01, 0.0, 0.02));
        assert!(!Rule::Less.holds(0.3, 0.2, 0.0));
        assert!(!Rule::AbsDiff.holds(f64::NAN, 1.0, 0.1));
    }

    #[test]
    fn non_finite_numbers_round_trip_as_null() {
        let row = CheckRow::new(1, "r", Rule::Below, 0.1, 0.0, 0.2, f64::NAN);
        let text = serde_json::to_string(&row).unwrap();
        assert!(text.contains("\"stderr\":null"));
        let back: CheckRow = serde_json::from_str(&text).unwrap();
        assert!(back.stderr.is_nan() && back.pass);
    }

    #[test]
    fn overall_verdict_needs_every_row() {
        let rows = vec![
            CheckRow::new(1, "a", Rule::Below, 0.1, 0.0, 0.2, 0.0),
            CheckRow::new(2, "b", Rule::Below, 0.3, 0.0, 0.2, 0.0),
        ];
        let r = CheckReport::assemble(rows, vec![], 1.0, ExperimentConfig::default());
        assert!(!r.pass);
        assert!(r.criterion(1).unwrap().pass);
        assert!(!r.criterion(2).unwrap().pass);
    }
}
