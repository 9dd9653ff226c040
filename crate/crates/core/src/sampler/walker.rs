//! Passage simulation with local grid refinement near the level.
//!
//! Inside the horizon the path is observed at every point of the uniform
//! grid `k dt`. A grid cell is subdivided while the path is within
//! `(dt / refine)^(1/alpha)` of the level: the next step is then
//! `refine * d^alpha`, with `d` the current distance to the level, so the
//! step resolves the path at a fixed fraction of the natural time scale of
//! a crossing from distance `d`. A plain uniform grid smears the overshoot
//! at the scale `dt^(1/alpha)`, and because the overshoot law puts mass
//! `~ eps^(1 - alpha rho)` on `[0, eps]` this error decays only like
//! `dt^((1 - alpha rho)/alpha)`.
//!
//! Early cells are subdivided as well: before `dt / early_refine` no step
//! exceeds `early_refine * t` (and the first step is
//! `FIRST_STEP_FRACTION * dt`), so a passage at small times is bracketed to
//! a fixed relative precision.
//!
//! Censored paths may be continued past the horizon with steps
//! `refine * d^alpha` (no upper cap) until they cross; the cost grows only
//! logarithmically with the eventual passage time.

use crate::error::{Error, Result};
use crate::model::StableModel;
use crate::rng::RngStream;

use super::increments::{StableIncrements, LANES};
use super::record::{Passage, PassageRecord};
use super::skeleton::grid_steps;

/// Smallest refined step, as a fraction of `dt`.
pub const MIN_STEP_FRACTION: f64 = 1e-12;

/// First step of every path, as a fraction of `dt`.
pub const FIRST_STEP_FRACTION: f64 = 1e-4;

/// Step budget for continuing one censored path; a path that exhausts it is
/// left without a continuation.
pub const CONTINUATION_STEP_CAP: u64 = 20_000_000;

/// Time-stepping rule of the passage walker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRule {
    pub dt: f64,
    pub horizon: f64,
    /// Relative step `kappa` in `h = kappa * d^alpha` near the level.
    pub refine: f64,
    /// Relative step `gamma` in `h = gamma * t` at early times.
    pub early_refine: f64,
    pub continue_censored: bool,
}

struct Draws<'a> {
    unit: &'a StableIncrements,
    rng: &'a mut RngStream,
    buf: [f64; LANES],
    next: usize,
}

impl Draws<'_> {
    #[inline]
    fn next(&mut self) -> f64 {
        if self.next == LANES {
            self.buf = self.unit.sample4(self.rng);
            self.next = 0;
        }
        self.next += 1;
        self.buf[self.next - 1]
    }
}

/// Simulates first passages of one model above one level.
#[derive(Debug, Clone)]
pub struct PassageWalker {
    unit: StableIncrements,
    alpha: f64,
    inv_alpha: f64,
    x: f64,
    rule: StepRule,
    cells: usize,
    dt_scale: f64,
    kappa_scale: f64,
    min_step: f64,
    min_scale: f64,
    // distance beyond which a whole cell is taken in one step
    d_refine: f64,
    // time before which steps are limited to early_refine * t
    t_refine: f64,
    first_step: f64,
}

impl PassageWalker {
    pub fn new(model: &StableModel, x: f64, rule: StepRule) -> Result<Self> {
        if !(x > 0.0) {
            return Err(Error::InvalidArgument(format!("level x must be > 0, got {x}")));
        }
        let unit_interval = |v: f64| v > 0.0 && v <= 1.0;
        if !(rule.dt > 0.0 && rule.horizon >= rule.dt && unit_interval(rule.refine) && unit_interval(rule.early_refine)) {
            return Err(Error::InvalidArgument(format!(
                "need dt > 0, horizon >= dt and refinement factors in (0, 1], got {rule:?}"
            )));
        }
        let alpha = model.alpha();
        let inv_alpha = 1.0 / alpha;
        let min_step = rule.dt * MIN_STEP_FRACTION;
        Ok(PassageWalker {
            unit: StableIncrements::new(model, 1.0),
            alpha,
            inv_alpha,
            x,
            rule,
            cells: grid_steps(rule.dt, rule.horizon),
            dt_scale: rule.dt.powf(inv_alpha),
            kappa_scale: rule.refine.powf(inv_alpha),
            min_step,
            min_scale: min_step.powf(inv_alpha),
            d_refine: (rule.dt / rule.refine).powf(inv_alpha),
            t_refine: rule.dt / rule.early_refine,
            first_step: rule.dt * FIRST_STEP_FRACTION,
        })
    }

    /// Horizon actually simulated, `floor(horizon / dt) * dt`.
    pub fn effective_horizon(&self) -> f64 {
        self.cells as f64 * self.rule.dt
    }

    /// Refined step from distance `d`: `(length, length^(1/alpha))`.
    #[inline]
    fn refined(&self, d: f64) -> (f64, f64) {
        let h = self.rule.refine * d.powf(self.alpha);
        if h > self.min_step {
            (h, self.kappa_scale * d)
        } else {
            (self.min_step, self.min_scale)
        }
    }

    /// One path. `checkpoints` are grid indices in increasing order.
    pub fn walk(&self, rng: &mut RngStream, checkpoints: &[usize]) -> PassageRecord {
        let x = self.x;
        let dt = self.rule.dt;
        let mut draws = Draws {
            unit: &self.unit,
            rng,
            buf: [0.0; LANES],
            next: LANES,
        };
        let mut positions = vec![None; checkpoints.len()];
        let mut cp = 0;
        while cp < checkpoints.len() && checkpoints[cp] == 0 {
            positions[cp] = Some(0.0);
            cp += 1;
        }
        let mut pos = 0.0;
        let mut sup = 0.0f64;
        for k in 0..self.cells {
            let start = k as f64 * dt;
            let end = (k + 1) as f64 * dt;
            let mut t = start;
            loop {
                let d = x - pos;
                let rem = end - t;
                let (h, scale) = if d < self.d_refine {
                    self.refined(d)
                } else {
                    (f64::INFINITY, 0.0)
                };
                let (h, scale) = if t < self.t_refine {
                    let early = (self.rule.early_refine * t).max(self.first_step);
                    if early < h {
                        (early, early.powf(self.inv_alpha))
                    } else {
                        (h, scale)
                    }
                } else {
                    (h, scale)
                };
                let (next_t, scale) = if h < rem {
                    (t + h, scale)
                } else if t == start {
                    (end, self.dt_scale)
                } else {
                    (end, rem.powf(self.inv_alpha))
                };
                pos += scale * draws.next();
                let bracket = t;
                t = next_t;
                sup = sup.max(pos);
                if pos >= x {
                    return PassageRecord {
                        passage: Some(Passage {
                            time: t,
                            bracket,
                            overshoot: pos - x,
                        }),
                        positions,
                        sup_horizon: sup,
                        terminal: None,
                        continuation: None,
                    };
                }
                if t == end {
                    break;
                }
            }
            while cp < checkpoints.len() && checkpoints[cp] == k + 1 {
                positions[cp] = Some(pos);
                cp += 1;
            }
        }
        let continuation = if self.rule.continue_censored {
            self.continue_path(&mut draws, pos)
        } else {
            None
        };
        PassageRecord {
            passage: None,
            positions,
            sup_horizon: sup,
            terminal: Some(pos),
            continuation,
        }
    }

    fn continue_path(&self, draws: &mut Draws<'_>, mut pos: f64) -> Option<Passage> {
        let mut t = self.effective_horizon();
        for _ in 0..CONTINUATION_STEP_CAP {
            let (h, scale) = self.refined(self.x - pos);
            pos += scale * draws.next();
            let bracket = t;
            t += h;
            if pos >= self.x {
                return Some(Passage {
                    time: t,
                    bracket,
                    overshoot: pos - self.x,
                });
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::StableParams;

    fn walker(refine: f64, continue_censored: bool) -> PassageWalker {
        let m = StableModel::new(StableParams::new(1.5, 0.5, 1.0).unwrap()).unwrap();
        let rule = StepRule {
            dt: 1e-2,
            horizon: 2.0,
            refine,
            early_refine: 0.05,
            continue_censored,
        };
        PassageWalker::new(&m, 1.0, rule).unwrap()
    }

    #[test]
    fn records_are_consistent() {
        let w = walker(1e-2, true);
        let cps = [0, 50, 100, 200];
        for i in 0..500 {
            let rec = w.walk(&mut RngStream::new(3, i), &cps);
            assert_eq!(rec.positions[0], Some(0.0));
            match rec.passage {
                Some(p) => {
                    assert!(p.overshoot >= 0.0 && p.bracket < p.time && p.time <= 2.0 + 1e-12);
                    assert!(rec.terminal.is_none() && rec.continuation.is_none());
                    for (k, v) in cps.iter().zip(&rec.positions) {
                        let t = *k as f64 * 1e-2;
                        assert_eq!(v.is_some(), t < p.time, "checkpoint {t} vs passage {}", p.time);
                    }
                }
                None => {
                    assert!(rec.positions.iter().all(Option::is_some));
                    let c = rec.continuation.unwrap();
                    assert!(c.time > 2.0 && c.overshoot >= 0.0);
                    assert!(rec.terminal.unwrap() < 1.0);
                }
            }
            for v in rec.positions.iter().flatten() {
                assert!(rec.sup_horizon >= *v);
            }
        }
    }

    #[test]
    fn deterministic_per_stream() {
        let w = walker(1e-2, true);
        let a = w.walk(&mut RngStream::new(5, 17), &[10]);
        let b = w.walk(&mut RngStream::new(5, 17), &[10]);
        assert_eq!(a, b);
    }

    #[test]
    fn continuation_can_be_disabled() {
        let w = walker(1e-2, false);
        let censored = (0..300)
            .map(|i| w.walk(&mut RngStream::new(1, i), &[]))
            .filter(|r| r.is_censored())
            .collect::<Vec<_>>();
        assert!(!censored.is_empty());
        assert!(censored.iter().all(|r| r.continuation.is_none()));
    }
}
