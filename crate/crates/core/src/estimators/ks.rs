//! Kolmogorov-Smirnov distances.
//!
//! Censored observations can be passed as `f64::INFINITY`: they then sit
//! above every finite value in both samples, so the distance compares the
//! two laws on the observed range and their masses beyond it.

use crate::error::{Error, Result};

use super::sorted;

fn check(a: &[f64], name: &str) -> Result<()> {
    if a.is_empty() {
        return Err(Error::InsufficientData(format!("{name}: empty sample")));
    }
    if a.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidArgument(format!("{name}: NaN in sample")));
    }
    Ok(())
}

/// Two-sample distance `sup_z |F_a(z) - F_b(z)|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    check(a, "first sample")?;
    check(b, "second sample")?;
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let z = a[i].min(b[j]);
        while i < a.len() && a[i] == z {
            i += 1;
        }
        while j < b.len() && b[j] == z {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// One-sample distance to a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(a: &[f64], cdf: F) -> Result<f64> {
    check(a, "sample")?;
    let a = sorted(a);
    let n = a.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &v) in a.iter().enumerate() {
        let f = cdf(v);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(d)
}

/// Asymptotic two-sample critical value at level `alpha` (Kolmogorov
/// limit law).
pub fn ks_critical_value(n: usize, m: usize, alpha: f64) -> f64 {
    let c = (-0.5 * (alpha / 2.0).ln()).sqrt();
    c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use proptest::prelude::*;

    #[test]
    fn identical_samples_are_at_distance_zero() {
        let a = [0.3, 1.0, 1.0, 2.5];
        assert_eq!(ks_two_sample(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn disjoint_supports_are_at_distance_one() {
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[3.0, 4.0, 5.0]).unwrap(), 1.0);
    }

    #[test]
    fn uniform_against_identity_cdf() {
        let mut rng = RngStream::new(42, 0);
        let u: Vec<f64> = (0..100_000).map(|_| rng.open01()).collect();
        let d = ks_one_sample(&u, |z| z.clamp(0.0, 1.0)).unwrap();
        // 1% critical value 1.628 / sqrt(n)
        assert!(d < 1.628 / (1e5f64).sqrt(), "d = {d}");
    }

    #[test]
    fn censored_mass_counts() {
        let a = [1.0, f64::INFINITY];
        let b = [1.0, 2.0];
        assert!((ks_two_sample(&a, &b).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn empty_is_an_error() {
        assert!(matches!(ks_two_sample(&[], &[1.0]), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn critical_value_matches_tables() {
        // c(0.05) = 1.358
        assert!((ks_critical_value(100, 100, 0.05) - 1.358 * 0.02f64.sqrt()).abs() < 1e-3);
    }

    proptest! {
        #[test]
        fn distance_is_symmetric_and_bounded(
            a in proptest::collection::vec(-5.0f64..5.0, 1..50),
            b in proptest::collection::vec(-5.0f64..5.0, 1..50),
        ) {
            let d = ks_two_sample(&a, &b).unwrap();
            prop_assert!((0.0..=1.0).contains(&d));
            prop_assert_eq!(d, ks_two_sample(&b, &a).unwrap());
        }
    }
}
