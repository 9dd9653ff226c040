//! Seeded ensembles of passage records and supremum samples.
//!
//! Record `i` of an ensemble with seed `s` is simulated from stream
//! `(s, i)`, so the ensemble is a function of its settings alone: thread
//! count and work scheduling cannot change a single bit.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{StableModel, StableParams};
use crate::rng::{derive_seed, RngStream};

use super::increments::{StableIncrements, LANES};
use super::record::PassageRecord;
use super::skeleton::{checkpoint_index, grid_steps};
use super::walker::{PassageWalker, StepRule};

/// Largest number of uniform grid steps a single path may need.
pub const GRID_STEP_CAP: usize = 1 << 30;

const SUPREMUM_TAG: u64 = 0x5355_5052;

/// Everything that determines an ensemble; echoed into its sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSettings {
    pub params: StableParams,
    pub x: f64,
    pub dt: f64,
    pub horizon: f64,
    pub checkpoints: Vec<f64>,
    pub n_samples: usize,
    pub seed: u64,
    pub refine: f64,
    pub early_refine: f64,
    pub continue_censored: bool,
}

impl EnsembleSettings {
    pub fn validate(&self) -> Result<StableModel> {
        let model = StableModel::new(self.params)?;
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.x > 0.0 && self.x.is_finite()) {
            return bad(format!("level x must be positive, got {}", self.x));
        }
        if !(self.dt > 0.0 && self.horizon >= self.dt && self.horizon.is_finite()) {
            return bad(format!("need 0 < dt <= horizon, got dt = {}, horizon = {}", self.dt, self.horizon));
        }
        for (name, v) in [("refine", self.refine), ("early_refine", self.early_refine)] {
            if !(v > 0.0 && v <= 1.0) {
                return bad(format!("{name} must lie in (0, 1], got {v}"));
            }
        }
        if self.n_samples == 0 {
            return bad("n_samples must be positive".into());
        }
        let steps = grid_steps(self.dt, self.horizon);
        if steps > GRID_STEP_CAP {
            return Err(Error::StepCapExceeded {
                steps,
                cap: GRID_STEP_CAP,
            });
        }
        if self.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return bad("checkpoints must be strictly increasing".into());
        }
        for &t in &self.checkpoints {
            if checkpoint_index(t, self.dt)? > steps {
                return bad(format!("checkpoint {t} lies beyond the horizon {}", self.horizon));
            }
        }
        Ok(model)
    }

    fn rule(&self) -> StepRule {
        StepRule {
            dt: self.dt,
            horizon: self.horizon,
            refine: self.refine,
            early_refine: self.early_refine,
            continue_censored: self.continue_censored,
        }
    }

    /// Same settings except for the ones that only scale the run.
    pub fn compatible_with(&self, other: &EnsembleSettings) -> bool {
        let strip = |s: &EnsembleSettings| EnsembleSettings {
            n_samples: 0,
            seed: 0,
            ..s.clone()
        };
        strip(self) == strip(other)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassageEnsemble {
    pub settings: EnsembleSettings,
    /// Seeds of the constituent runs, in record order.
    pub seeds: Vec<u64>,
    pub records: Vec<PassageRecord>,
    pub censored_count: usize,
}

impl PassageEnsemble {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn model(&self) -> Result<StableModel> {
        StableModel::new(self.settings.params)
    }

    /// Censored records without a continuation.
    pub fn unresolved_count(&self) -> usize {
        self.records.iter().filter(|r| r.eventual().is_none()).count()
    }

    /// Position of a checkpoint time in the record's position vector.
    pub fn checkpoint_slot(&self, t: f64) -> Result<usize> {
        self.settings
            .checkpoints
            .iter()
            .position(|&c| (c - t).abs() <= 1e-12 * t.abs().max(1.0))
            .ok_or(Error::MissingCheckpoint(t))
    }

    /// Concatenates two runs that differ only in seed and size.
    pub fn merge(mut self, other: PassageEnsemble) -> Result<PassageEnsemble> {
        if !self.settings.compatible_with(&other.settings) {
            return Err(Error::Incompatible(
                "ensembles differ in more than seed and sample count".into(),
            ));
        }
        self.records.extend(other.records);
        self.seeds.extend(other.seeds);
        self.censored_count += other.censored_count;
        self.settings.n_samples = self.records.len();
        Ok(self)
    }
}

pub fn generate_passage_ensemble(settings: &EnsembleSettings) -> Result<PassageEnsemble> {
    let model = settings.validate()?;
    let walker = PassageWalker::new(&model, settings.x, settings.rule())?;
    let checkpoints = settings
        .checkpoints
        .iter()
        .map(|&t| checkpoint_index(t, settings.dt))
        .collect::<Result<Vec<_>>>()?;
    let seed = settings.seed;
    let records: Vec<PassageRecord> = (0..settings.n_samples)
        .into_par_iter()
        .with_min_len(64)
        .map(|i| walker.walk(&mut RngStream::new(seed, i as u64), &checkpoints))
        .collect();
    let censored_count = records.iter().filter(|r| r.is_censored()).count();
    Ok(PassageEnsemble {
        settings: settings.clone(),
        seeds: vec![seed],
        records,
        censored_count,
    })
}

/// `n_samples` draws of `S_t = sup_{s <= t} X_s`, read off uniform
/// skeletons with step `dt`.
pub fn generate_supremum_ensemble(settings: &EnsembleSettings, t: f64) -> Result<Vec<f64>> {
    let model = settings.validate()?;
    if !(t >= settings.dt && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("need t >= dt, got t = {t}")));
    }
    let steps = grid_steps(settings.dt, t);
    if steps > GRID_STEP_CAP {
        return Err(Error::StepCapExceeded {
            steps,
            cap: GRID_STEP_CAP,
        });
    }
    let incs = StableIncrements::new(&model, settings.dt);
    let seed = derive_seed(settings.seed, SUPREMUM_TAG);
    Ok((0..settings.n_samples)
        .into_par_iter()
        .with_min_len(16)
        .map(|i| {
            let mut rng = RngStream::new(seed, i as u64);
            let mut buf = [0.0; 64 * LANES];
            let (mut pos, mut sup) = (0.0f64, 0.0f64);
            let mut left = steps;
            while left > 0 {
                let take = left.min(buf.len());
                incs.fill(&mut rng, &mut buf[..take]);
                for &d in &buf[..take] {
                    pos += d;
                    sup = sup.max(pos);
                }
                left -= take;
            }
            sup
        })
        .collect())
}
