use serde::{Deserialize, Serialize};

/// An observed upward crossing of the level.
///
/// The crossing happened somewhere in `(bracket, time]`: `bracket` is the
/// last observation time at which the path was still below the level and
/// `time` the first at which it was at or above it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Passage {
    pub time: f64,
    pub bracket: f64,
    pub overshoot: f64,
}

/// One simulated path, reduced to what the estimators need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassageRecord {
    /// Crossing inside the horizon; `None` means censored.
    pub passage: Option<Passage>,
    /// Path value at each configured checkpoint, present only for
    /// checkpoints strictly before the passage.
    pub positions: Vec<Option<f64>>,
    /// Running supremum over the simulated part of `[0, horizon]`.
    pub sup_horizon: f64,
    /// Path value at the horizon, for censored records.
    pub terminal: Option<f64>,
    /// Crossing found by continuing a censored path past the horizon.
    pub continuation: Option<Passage>,
}

impl PassageRecord {
    pub fn is_censored(&self) -> bool {
        self.passage.is_none()
    }

    pub fn passage_time(&self) -> Option<f64> {
        self.passage.map(|p| p.time)
    }

    pub fn overshoot(&self) -> Option<f64> {
        self.passage.map(|p| p.overshoot)
    }

    /// The crossing inside the horizon or, failing that, the continued one.
    pub fn eventual(&self) -> Option<Passage> {
        self.passage.or(self.continuation)
    }
}
