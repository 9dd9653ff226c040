//! Uniform-grid skeletons and first-passage detection on them.

use crate::error::{Error, Result};
use crate::model::StableModel;
use crate::rng::RngStream;

use super::increments::{StableIncrements, LANES};
use super::record::{Passage, PassageRecord};

/// Anything that yields successive path increments.
pub trait IncrementSource {
    fn next_increment(&mut self) -> f64;
}

impl<F: FnMut() -> f64> IncrementSource for F {
    fn next_increment(&mut self) -> f64 {
        self()
    }
}

/// Exact stable increments over a fixed step, drawn from one stream.
pub struct StreamIncrements {
    incs: StableIncrements,
    rng: RngStream,
    buf: [f64; LANES],
    next: usize,
}

impl StreamIncrements {
    pub fn new(model: &StableModel, dt: f64, rng: RngStream) -> Self {
        StreamIncrements {
            incs: StableIncrements::new(model, dt),
            rng,
            buf: [0.0; LANES],
            next: LANES,
        }
    }
}

impl IncrementSource for StreamIncrements {
    #[inline]
    fn next_increment(&mut self) -> f64 {
        if self.next == LANES {
            self.buf = self.incs.sample4(&mut self.rng);
            self.next = 0;
        }
        self.next += 1;
        self.buf[self.next - 1]
    }
}

/// Number of grid steps `floor(horizon / dt)`, tolerant of the rounding in
/// quotients such as `1.0 / 0.01`.
pub fn grid_steps(dt: f64, horizon: f64) -> usize {
    let q = horizon / dt;
    let r = q.round();
    if (q - r).abs() <= 1e-9 * r.max(1.0) {
        r as usize
    } else {
        q.floor() as usize
    }
}

/// `floor(horizon / dt) + 1` path values on the grid `0, dt, 2 dt, ...`,
/// starting at 0.
pub fn simulate_skeleton<S: IncrementSource>(
    source: &mut S,
    dt: f64,
    horizon: f64,
    cap: usize,
) -> Result<Vec<f64>> {
    if !(dt > 0.0 && horizon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "dt and horizon must be > 0, got dt = {dt}, horizon = {horizon}"
        )));
    }
    let steps = grid_steps(dt, horizon);
    if steps > cap {
        return Err(Error::StepCapExceeded { steps, cap });
    }
    let mut path = Vec::with_capacity(steps + 1);
    let mut x = 0.0;
    path.push(x);
    for _ in 0..steps {
        x += source.next_increment();
        path.push(x);
    }
    Ok(path)
}

/// Grid index of a checkpoint time, which must lie on the grid.
pub fn checkpoint_index(t: f64, dt: f64) -> Result<usize> {
    let k = (t / dt).round();
    if !(t >= 0.0) || (k * dt - t).abs() > 1e-9 * t.max(dt) {
        return Err(Error::InvalidArgument(format!(
            "checkpoint {t} is not a multiple of dt = {dt}"
        )));
    }
    Ok(k as usize)
}

/// Reads the first passage above `x` off a skeleton sampled every `dt`.
pub fn detect_first_passage(
    skeleton: &[f64],
    x: f64,
    dt: f64,
    checkpoints: &[f64],
) -> Result<PassageRecord> {
    if !(x > 0.0) {
        return Err(Error::InvalidArgument(format!("level x must be > 0, got {x}")));
    }
    let last = skeleton.len().saturating_sub(1);
    let indices = checkpoints
        .iter()
        .map(|&t| {
            let k = checkpoint_index(t, dt)?;
            if k > last {
                return Err(Error::InvalidArgument(format!(
                    "checkpoint {t} lies beyond the skeleton"
                )));
            }
            Ok(k)
        })
        .collect::<Result<Vec<_>>>()?;
    let hit = skeleton.iter().position(|&v| v >= x);
    let stop = hit.unwrap_or(skeleton.len());
    let sup_horizon = skeleton.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let positions = indices
        .iter()
        .map(|&k| (k < stop).then(|| skeleton[k]))
        .collect();
    Ok(PassageRecord {
        passage: hit.map(|k| Passage {
            time: k as f64 * dt,
            bracket: k.saturating_sub(1) as f64 * dt,
            overshoot: skeleton[k] - x,
        }),
        positions,
        sup_horizon,
        terminal: hit.is_none().then(|| skeleton[last]),
        continuation: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::StableParams;
    use proptest::prelude::*;

    fn model() -> StableModel {
        StableModel::new(StableParams::new(1.5, 0.5, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn stub_generator_walks_linearly() {
        let mut stub = || 0.1;
        let path = simulate_skeleton(&mut stub, 1.0, 3.0, 100).unwrap();
        assert_eq!(path.len(), 4);
        for (k, v) in path.iter().enumerate() {
            assert!((v - 0.1 * k as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn length_formula() {
        let mut src = StreamIncrements::new(&model(), 0.01, RngStream::new(1, 0));
        assert_eq!(simulate_skeleton(&mut src, 0.01, 1.0, 1000).unwrap().len(), 101);
    }

    #[test]
    fn cap_is_enforced() {
        let mut stub = || 0.0;
        let err = simulate_skeleton(&mut stub, 1e-3, 1.0, 999).unwrap_err();
        assert!(matches!(err, Error::StepCapExceeded { steps: 1000, cap: 999 }));
    }

    #[test]
    fn same_stream_same_skeleton() {
        let run = || {
            let mut src = StreamIncrements::new(&model(), 1e-3, RngStream::new(9, 4));
            simulate_skeleton(&mut src, 1e-3, 0.5, 10_000).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn passage_read_off_directly() {
        let rec = detect_first_passage(&[0.0, 0.5, 1.2, 0.9], 1.0, 1.0, &[1.0]).unwrap();
        let p = rec.passage.unwrap();
        assert_eq!(p.time, 2.0);
        assert_eq!(p.bracket, 1.0);
        assert!((p.overshoot - 0.2).abs() < 1e-15);
        assert_eq!(rec.positions, vec![Some(0.5)]);
    }

    #[test]
    fn never_crossing_is_censored() {
        let rec = detect_first_passage(&[0.0, 0.5, 0.7], 1.0, 1.0, &[]).unwrap();
        assert!(rec.is_censored());
        assert!(rec.overshoot().is_none());
        assert_eq!(rec.sup_horizon, 0.7);
        assert_eq!(rec.terminal, Some(0.7));
    }

    #[test]
    fn checkpoint_at_or_after_passage_is_absent() {
        let rec = detect_first_passage(&[0.0, 0.5, 1.2, 0.9], 1.0, 1.0, &[0.0, 2.0, 3.0]).unwrap();
        assert_eq!(rec.positions, vec![Some(0.0), None, None]);
    }

    #[test]
    fn rejects_nonpositive_level_and_off_grid_checkpoint() {
        assert!(detect_first_passage(&[0.0, 1.0], 0.0, 1.0, &[]).is_err());
        assert!(detect_first_passage(&[0.0, 1.0], 1.0, 1.0, &[0.5]).is_err());
    }

    proptest! {
        // Observing the same path on a grid and on its refinement: the fine
        // grid sees every coarse point, so its supremum is at least as large
        // and its passage no later.
        #[test]
        fn refinement_never_delays_passage(
            incs in proptest::collection::vec(-1.0f64..1.0, 2..200),
            x in 0.05f64..3.0,
        ) {
            let mut fine = vec![0.0];
            for d in &incs {
                let last = *fine.last().unwrap();
                fine.push(last + d);
            }
            let coarse: Vec<f64> = fine.iter().step_by(2).copied().collect();
            let rf = detect_first_passage(&fine, x, 0.5, &[]).unwrap();
            let rc = detect_first_passage(&coarse, x, 1.0, &[]).unwrap();
            prop_assert!(rf.sup_horizon >= rc.sup_horizon);
            match (rf.passage_time(), rc.passage_time()) {
                (Some(tf), Some(tc)) => prop_assert!(tf <= tc),
                (None, Some(_)) => prop_assert!(false, "fine grid missed a coarse crossing"),
                _ => {}
            }
        }

        #[test]
        fn record_invariants(incs in proptest::collection::vec(-1.0f64..1.0, 1..100), x in 0.05f64..3.0) {
            let mut path = vec![0.0];
            for d in &incs {
                let last = *path.last().unwrap();
                path.push(last + d);
            }
            let cps: Vec<f64> = (0..path.len()).step_by(3).map(|k| k as f64).collect();
            let rec = detect_first_passage(&path, x, 1.0, &cps).unwrap();
            if let Some(p) = rec.passage {
                let k = p.time as usize;
                prop_assert!(path[k] >= x && p.overshoot >= 0.0);
                prop_assert!(path[..k].iter().all(|&v| v < x));
            }
            for v in rec.positions.iter().flatten() {
                prop_assert!(rec.sup_horizon >= *v);
            }
        }
    }
}
