//! Exact stable increments via the Chambers-Mallows-Stuck transform.

use std::f64::consts::PI;

use rand_distr::{Distribution, Gamma};
use wide::f64x4;

use crate::model::StableModel;
use crate::rng::RngStream;

/// Draws of `X_dt` for a fixed model and time step.
///
/// The exponent `c |l|^alpha (1 - i sgn(l) tan(pi alpha (2 rho - 1)/2))` is
/// matched to the classical `sigma^alpha |l|^alpha (1 - i beta sgn(l)
/// tan(pi alpha / 2))` with `beta = skew` and `sigma = scale_std`; by
/// self-similarity `X_dt` is `dt^(1/alpha)` times a unit-time draw.
///
/// Draws are produced four at a time; every batch consumes eight 64-bit
/// words from the stream, so a stream's output does not depend on how the
/// caller slices its requests into batches of four.
#[derive(Debug, Clone, Copy)]
pub struct StableIncrements {
    alpha: f64,
    inv_alpha: f64,
    // (1 - alpha) / alpha
    tail_power: f64,
    shift: f64,
    scale: f64,
}

pub const LANES: usize = 4;

impl StableIncrements {
    pub fn new(model: &StableModel, dt: f64) -> Self {
        let alpha = model.alpha();
        let skew = model.constants.skew;
        let tilt = skew * (PI * alpha / 2.0).tan();
        let shift = tilt.atan() / alpha;
        let cms_scale = (1.0 + tilt * tilt).powf(1.0 / (2.0 * alpha));
        StableIncrements {
            alpha,
            inv_alpha: 1.0 / alpha,
            tail_power: (1.0 - alpha) / alpha,
            shift,
            scale: model.constants.scale_std * cms_scale * dt.powf(1.0 / alpha),
        }
    }

    /// Four independent increments.
    #[inline]
    pub fn sample4(&self, rng: &mut RngStream) -> [f64; LANES] {
        let mut u = [0.0; LANES];
        let mut e = [0.0; LANES];
        for slot in u.iter_mut() {
            *slot = rng.open01();
        }
        for slot in e.iter_mut() {
            *slot = rng.open01();
        }
        let v = f64x4::splat(PI) * (f64x4::from(u) - f64x4::splat(0.5));
        let w = -f64x4::from(e).ln();
        let a1 = f64x4::splat(self.alpha) * (v + f64x4::splat(self.shift));
        let (sin_a1, cos_a1) = a1.sin_cos();
        let (sin_v, cos_v) = v.sin_cos();
        // cos(v - a1) from the sines and cosines above; it is >= 0 on the
        // admissible parameter range, up to rounding.
        let cos_diff = (cos_v * cos_a1 + sin_v * sin_a1).max(f64x4::splat(f64::MIN_POSITIVE));
        let log_mag = f64x4::splat(-self.inv_alpha) * cos_v.ln()
            + f64x4::splat(self.tail_power) * (cos_diff.ln() - w.ln());
        (f64x4::splat(self.scale) * sin_a1 * log_mag.exp()).to_array()
    }

    /// Fills `out` with independent increments.
    pub fn fill(&self, rng: &mut RngStream, out: &mut [f64]) {
        let mut chunks = out.chunks_exact_mut(LANES);
        for chunk in &mut chunks {
            chunk.copy_from_slice(&self.sample4(rng));
        }
        let rest = chunks.into_remainder();
        if !rest.is_empty() {
            let batch = self.sample4(rng);
            rest.copy_from_slice(&batch[..rest.len()]);
        }
    }

    /// One increment (a full batch is drawn and the other lanes discarded).
    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        self.sample4(rng)[0]
    }
}

/// One draw distributed as `X_dt`.
pub fn sample_increment(stream: &mut RngStream, model: &StableModel, dt: f64) -> f64 {
    StableIncrements::new(model, dt).sample(stream)
}

/// `n` draws of `1 / B` with `B ~ Beta(a, b)`, generated as
/// `1 + G_b / G_a` for independent gamma variables.
///
/// Mathematically every value exceeds 1; in floating point `1 + excess` can
/// round to exactly 1 when the excess is below 2^-53. Use
/// [`sample_inverse_beta_excess`] when the excess itself matters.
pub fn sample_inverse_beta(stream: &mut RngStream, a: f64, b: f64, n: usize) -> Vec<f64> {
    sample_inverse_beta_excess(stream, a, b, n)
        .into_iter()
        .map(|e| 1.0 + e)
        .collect()
}

/// `n` draws of `1/B - 1 = (1 - B)/B`, strictly positive.
pub fn sample_inverse_beta_excess(stream: &mut RngStream, a: f64, b: f64, n: usize) -> Vec<f64> {
    let (ga, gb) = gamma_pair(a, b);
    (0..n)
        .map(|_| loop {
            let x = ga.sample(stream);
            let y = gb.sample(stream);
            if x > 0.0 && y > 0.0 && x.is_finite() {
                break y / x;
            }
        })
        .collect()
}

/// `n` draws of `B ~ Beta(a, b)` built from the same gamma pair.
pub fn sample_beta(stream: &mut RngStream, a: f64, b: f64, n: usize) -> Vec<f64> {
    let (ga, gb) = gamma_pair(a, b);
    (0..n)
        .map(|_| loop {
            let x: f64 = ga.sample(stream);
            let y: f64 = gb.sample(stream);
            if x + y > 0.0 {
                break x / (x + y);
            }
        })
        .collect()
}

fn gamma_pair(a: f64, b: f64) -> (Gamma<f64>, Gamma<f64>) {
    assert!(a > 0.0 && b > 0.0, "beta shapes must be positive, got ({a}, {b})");
    (
        Gamma::new(a, 1.0).expect("positive shape"),
        Gamma::new(b, 1.0).expect("positive shape"),
    )
}
