//! Stable process parametrization, explicit constants and closed-form laws.
//!
//! The process has characteristic exponent
//!
//! ```text
//! psi(l) = c |l|^alpha (1 - i sgn(l) tan(pi alpha (2 rho - 1) / 2))
//! ```
//!
//! with `1 < alpha < 2`, positivity parameter `rho = P(X_1 > 0)` and
//! `alpha * rho < 1`, so that the process has positive jumps. Everything in
//! this module is deterministic.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, ParamViolation, Result};
use crate::quadrature;
use crate::special::gamma;

/// Slack used when comparing against the boundary `rho = 1 - 1/alpha` and
/// against `alpha * rho = 1`, so that values like `rho = 1/3` at `alpha = 1.5`
/// land on the intended side despite rounding.
const BOUNDARY_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableParams {
    pub alpha: f64,
    pub rho: f64,
    pub c: f64,
}

impl StableParams {
    /// Builds and validates a parameter triple.
    pub fn new(alpha: f64, rho: f64, c: f64) -> Result<Self> {
        StableParams { alpha, rho, c }.validated()
    }

    /// Returns `self` if every standing assumption holds.
    pub fn validated(self) -> Result<Self> {
        let StableParams { alpha, rho, c } = self;
        let fail = |violation| Error::InvalidParams {
            alpha,
            rho,
            c,
            violation,
        };
        if !(alpha.is_finite() && rho.is_finite() && c.is_finite()) {
            return Err(fail(ParamViolation::NotFinite));
        }
        if !(alpha > 1.0 && alpha < 2.0) {
            return Err(fail(ParamViolation::AlphaRange));
        }
        if alpha * rho >= 1.0 - BOUNDARY_SLACK {
            return Err(fail(ParamViolation::NoPositiveJumps));
        }
        if rho < 1.0 - 1.0 / alpha - BOUNDARY_SLACK {
            return Err(fail(ParamViolation::BelowSpectralBoundary));
        }
        if c <= 0.0 {
            return Err(fail(ParamViolation::ScaleNotPositive));
        }
        Ok(self)
    }

    /// True on the boundary `alpha (1 - rho) = 1`, i.e. no negative jumps.
    pub fn is_spectrally_positive(&self) -> bool {
        (self.alpha * (1.0 - self.rho) - 1.0).abs() <= BOUNDARY_SLACK
    }

    pub fn alpha_rho(&self) -> f64 {
        self.alpha * self.rho
    }

    /// `pi alpha (2 rho - 1) / 2`, the angle appearing in the exponent.
    fn skew_angle(&self) -> f64 {
        PI * self.alpha * (2.0 * self.rho - 1.0) / 2.0
    }

    /// Same process with `rho` replaced by `1 - rho` (the dual `-X`).
    fn dual(&self) -> StableParams {
        StableParams {
            rho: 1.0 - self.rho,
            ..*self
        }
    }

    /// `c |l|^alpha (1 - i sgn(l) tan(pi alpha (2 rho - 1) / 2))`.
    pub fn characteristic_exponent(&self, lambda: f64) -> Complex64 {
        if lambda == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let modulus = self.c * lambda.abs().powf(self.alpha);
        let tilt = self.skew_angle().tan();
        Complex64::new(modulus, -lambda.signum() * modulus * tilt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    pub c1: f64,
    pub k0: f64,
    pub k0_hat: f64,
    pub k_inf: f64,
    /// Skewness `beta` of the classical `(alpha, beta, sigma)` form.
    pub skew: f64,
    /// Scale `sigma = c^(1/alpha)` of the classical form.
    pub scale_std: f64,
}

fn k0_of(p: &StableParams, c1: f64) -> f64 {
    1.0 / (c1.powf(p.rho) * gamma(1.0 - p.rho) * gamma(1.0 + p.alpha * p.rho))
}

impl DerivedConstants {
    pub fn new(p: &StableParams) -> Self {
        let theta = p.skew_angle();
        let c1 = p.c * (1.0 / theta.cos()).abs();
        let k0 = k0_of(p, c1);
        let k0_hat = k0_of(&p.dual(), c1);
        let k_inf = c1 * gamma(p.alpha) * (PI * p.alpha_rho()).sin() / PI;
        let skew = if p.is_spectrally_positive() {
            1.0
        } else {
            // adding zero turns -0 into 0 in printed output
            (theta.tan() / (PI * p.alpha / 2.0).tan()).clamp(-1.0, 1.0) + 0.0
        };
        DerivedConstants {
            c1,
            k0,
            k0_hat,
            k_inf,
            skew,
            scale_std: p.c.powf(1.0 / p.alpha),
        }
    }
}

/// Parameters bundled with their constants; what the samplers and
/// estimators actually consume.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableModel {
    pub params: StableParams,
    pub constants: DerivedConstants,
}

impl StableModel {
    pub fn new(params: StableParams) -> Result<Self> {
        let params = params.validated()?;
        Ok(StableModel {
            params,
            constants: DerivedConstants::new(&params),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.params.alpha
    }

    pub fn rho(&self) -> f64 {
        self.params.rho
    }

    pub fn k0(&self) -> f64 {
        self.constants.k0
    }

    pub fn k_inf(&self) -> f64 {
        self.constants.k_inf
    }

    /// Returns a copy whose `k0` is multiplied by `factor`. Only the check
    /// battery's sensitivity hook uses this.
    pub fn with_k0_scaled(mut self, factor: f64) -> Self {
        self.constants.k0 *= factor;
        self
    }

    /// `psi(y; eps) = P(K_y <= eps)`, the probability that the overshoot
    /// above level `y` is at most `eps`.
    ///
    /// After the substitution `u = v^(1/(1 - alpha rho))` the integrand
    /// `1/((u eps + y) u^(alpha rho))` becomes smooth on `[0, 1]`.
    pub fn overshoot_cdf(&self, y: f64, eps: f64) -> Result<f64> {
        if !(y > 0.0) {
            return Err(Error::InvalidArgument(format!("level y must be > 0, got {y}")));
        }
        if !(eps >= 0.0) {
            return Err(Error::InvalidArgument(format!("eps must be >= 0, got {eps}")));
        }
        if eps == 0.0 {
            return Ok(0.0);
        }
        if eps.is_infinite() {
            return Ok(1.0);
        }
        let ar = self.params.alpha_rho();
        let g = 1.0 - ar;
        let expo = 1.0 / g;
        // Rescaled so the integrand is O(1): 1/(r v^expo + 1) with r = eps/y.
        let r = eps / y;
        let prefactor = (PI * ar).sin() / PI * r.powf(g) / g;
        let tol = 1e-10 / prefactor.max(1e-300);
        let f = |v: f64| 1.0 / (r * v.powf(expo) + 1.0);
        // the integrand drops from 1 to 0 around r v^expo = 1, a knee that
        // sharpens as alpha rho approaches 1
        let knee = r.powf(-1.0 / expo).min(1.0);
        let mut value = 0.0;
        let mut lo = 0.0;
        let w = 1.0 / expo;
        // cuts at distances 2^k / expo on both sides of the knee
        let offsets = [-64.0, -32.0, -16.0, -8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0];
        let cuts = offsets.iter().map(|k| knee * (1.0 + k * w)).chain([1.0]);
        for cut in cuts {
            let cut = cut.clamp(lo, 1.0);
            if cut > lo {
                value += quadrature::integrate(f, lo, cut, tol.min(1e-10), 200)?.value;
                lo = cut;
            }
        }
        Ok((prefactor * value).clamp(0.0, 1.0))
    }

    /// `h(x) = Gamma(rho) k0_hat x^(alpha (1 - rho))` and
    /// `h_hat(x) = Gamma(1 - rho) k0 x^(alpha rho)`.
    pub fn h_functions(&self, x: f64) -> Result<(f64, f64)> {
        if !(x > 0.0) {
            return Err(Error::InvalidArgument(format!("level x must be > 0, got {x}")));
        }
        let (a, r) = (self.params.alpha, self.params.rho);
        let h = gamma(r) * self.constants.k0_hat * x.powf(a * (1.0 - r));
        let h_hat = gamma(1.0 - r) * self.constants.k0 * x.powf(a * r);
        Ok((h, h_hat))
    }

    /// Value of the asymptotic formula `kind` at level `x` and argument `arg`.
    pub fn asymptote(&self, kind: AsymptoteKind, x: f64, arg: f64) -> Result<f64> {
        let (a, r) = (self.params.alpha, self.params.rho);
        let (k0, kinf) = (self.constants.k0, self.constants.k_inf);
        let t0_prefactor = kinf / k0 * (PI * r).sin() / (PI * r * r);
        let v = match kind {
            AsymptoteKind::SupLower => k0 * x.powf(a * r),
            AsymptoteKind::SupUpper => kinf * x.powf(-a),
            AsymptoteKind::TxSmall => kinf * x.powf(-a) * arg,
            AsymptoteKind::T0Small => {
                t0_prefactor / (1.0 + r) * x.powf(-a * (1.0 + r)) * arg.powf(1.0 + r)
            }
            AsymptoteKind::FtxSmall => kinf * x.powf(-a),
            AsymptoteKind::FtxLarge => r * k0 * x.powf(a * r) * arg.powf(-(1.0 + r)),
            AsymptoteKind::Ft0Small => t0_prefactor * x.powf(-a * (1.0 + r)) * arg.powf(r),
            AsymptoteKind::Ft0Large => return Err(Error::ExponentOnly(kind.tag())),
            AsymptoteKind::OvershootSmall => {
                let ar = a * r;
                (PI * ar).sin() / (PI * (1.0 - ar)) * (arg / x).powf(1.0 - ar)
            }
        };
        Ok(v)
    }

    /// Power of the argument in the asymptote `kind`.
    pub fn asymptote_exponent(&self, kind: AsymptoteKind) -> f64 {
        let (a, r) = (self.params.alpha, self.params.rho);
        match kind {
            AsymptoteKind::SupLower => a * r,
            AsymptoteKind::SupUpper => -a,
            AsymptoteKind::TxSmall => 1.0,
            AsymptoteKind::T0Small => 1.0 + r,
            AsymptoteKind::FtxSmall => 0.0,
            AsymptoteKind::FtxLarge => -(1.0 + r),
            AsymptoteKind::Ft0Small => r,
            AsymptoteKind::Ft0Large => -1.0 - 1.0 / a,
            AsymptoteKind::OvershootSmall => 1.0 - a * r,
        }
    }
}

/// The asymptotic regimes with explicit formulas.
///
/// For `SupLower`, `SupUpper` the level `x` is the variable and `arg` is
/// ignored; for the others `arg` is the time (or overshoot threshold for
/// `OvershootSmall`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AsymptoteKind {
    /// `P(S_1 <= x) ~ k0 x^(alpha rho)` as `x -> 0`.
    SupLower,
    /// `P(S_1 > x) ~ k_inf x^(-alpha)` as `x -> inf`.
    SupUpper,
    /// `P(T_x <= u) ~ k_inf x^(-alpha) u` as `u -> 0`.
    TxSmall,
    /// Small-time CDF of the zero-overshoot passage time.
    T0Small,
    /// `f_{T_x}(t) -> k_inf x^(-alpha)` as `t -> 0`.
    FtxSmall,
    /// `f_{T_x}(t) ~ rho k0 x^(alpha rho) t^(-(1 + rho))` as `t -> inf`.
    FtxLarge,
    /// Small-time density of the zero-overshoot passage time.
    Ft0Small,
    /// Large-time density of the zero-overshoot passage time; the constant
    /// is not explicit.
    Ft0Large,
    /// `P(K_x <= h)` as `h -> 0`.
    OvershootSmall,
}

impl AsymptoteKind {
    pub const ALL: [AsymptoteKind; 9] = [
        AsymptoteKind::SupLower,
        AsymptoteKind::SupUpper,
        AsymptoteKind::TxSmall,
        AsymptoteKind::T0Small,
        AsymptoteKind::FtxSmall,
        AsymptoteKind::FtxLarge,
        AsymptoteKind::Ft0Small,
        AsymptoteKind::Ft0Large,
        AsymptoteKind::OvershootSmall,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            AsymptoteKind::SupLower => "sup_lower",
            AsymptoteKind::SupUpper => "sup_upper",
            AsymptoteKind::TxSmall => "tx_small",
            AsymptoteKind::T0Small => "t0_small",
            AsymptoteKind::FtxSmall => "ftx_small",
            AsymptoteKind::FtxLarge => "ftx_large",
            AsymptoteKind::Ft0Small => "ft0_small",
            AsymptoteKind::Ft0Large => "ft0_large",
            AsymptoteKind::OvershootSmall => "overshoot_small",
        }
    }

    /// Whether a full value (not just an exponent) is available.
    pub fn has_value(&self) -> bool {
        !matches!(self, AsymptoteKind::Ft0Large)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::beta_reg;
    use proptest::prelude::*;

    fn sym() -> StableModel {
        StableModel::new(StableParams::new(1.5, 0.5, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn validation_examples() {
        assert!(StableParams::new(1.5, 0.5, 1.0).is_ok());
        let err = StableParams::new(1.5, 2.0 / 3.0, 1.0).unwrap_err();
        assert!(matches!(
            err,
            Error::InvalidParams {
                violation: ParamViolation::NoPositiveJumps,
                ..
            }
        ));
        let p = StableParams::new(1.5, 1.0 / 3.0, 1.0).unwrap();
        assert!(p.is_spectrally_positive());
        assert!(!StableParams::new(1.5, 0.5, 1.0).unwrap().is_spectrally_positive());
    }

    #[test]
    fn validation_names_each_violation() {
        let v = |a, r, c| match StableParams::new(a, r, c) {
            Err(Error::InvalidParams { violation, .. }) => violation,
            other => panic!("expected rejection, got {other:?}"),
        };
        assert_eq!(v(2.0, 0.4, 1.0), ParamViolation::AlphaRange);
        assert_eq!(v(1.0, 0.4, 1.0), ParamViolation::AlphaRange);
        assert_eq!(v(1.5, 0.2, 1.0), ParamViolation::BelowSpectralBoundary);
        assert_eq!(v(1.5, 0.5, 0.0), ParamViolation::ScaleNotPositive);
        assert_eq!(v(f64::NAN, 0.5, 1.0), ParamViolation::NotFinite);
    }

    // Multiprecision reference values (30 digits).
    #[test]
    fn constants_symmetric_case() {
        let k = sym().constants;
        assert!((k.c1 - 1.0).abs() < 1e-14);
        assert!((k.k0 - 0.613_875_081_472_583_1).abs() < 1e-12);
        assert!((k.k0_hat - k.k0).abs() < 1e-14);
        assert!((k.k_inf - 0.199_471_140_200_716_34).abs() < 1e-12);
        assert_eq!(k.skew, 0.0);
        assert!((k.scale_std - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constants_asymmetric_cases() {
        // (alpha, rho, c) -> (c1, k0, k0_hat, k_inf, skew)
        let cases = [
            (1.3, 0.6, 1.0, [1.089_615_864_648_705_3, 0.462_301_804_763_296_2, 0.731_471_243_382_752_3, 0.198_413_960_772_838_77, -0.220_491_351_204_728_52]),
            (1.8, 0.45, 1.0, [1.041_348_094_770_681_1, 0.650_466_219_357_007_2, 0.498_986_897_202_118_57, 0.173_530_357_978_138_07, 0.894_149_724_071_092_7]),
            (1.5, 1.0 / 3.0, 1.0, [std::f64::consts::SQRT_2, 0.742_381_091_241_938_2, 0.296_274_257_770_787_8, 0.398_942_280_401_432_7, 1.0]),
            (1.5, 0.6, 0.7, [0.785_628_366_344_052_6, 0.541_760_805_647_487_5, 0.827_675_982_652_364_3, 0.068_484_862_480_146_08, -0.509_525_449_494_428_8]),
        ];
        for (a, r, c, want) in cases {
            let k = StableModel::new(StableParams { alpha: a, rho: r, c }).unwrap().constants;
            let got = [k.c1, k.k0, k.k0_hat, k.k_inf, k.skew];
            for (g, w) in got.iter().zip(want) {
                assert!((g - w).abs() < 1e-11 * w.abs().max(1.0), "({a},{r},{c}): {g} vs {w}");
            }
        }
    }

    #[test]
    fn characteristic_exponent_examples() {
        let m = sym();
        let z = m.params.characteristic_exponent(2.0);
        assert!((z.re - 2f64.powf(1.5)).abs() < 1e-12 && z.im == 0.0);
        assert_eq!(m.params.characteristic_exponent(-2.0), z);
        assert_eq!(m.params.characteristic_exponent(0.0), Complex64::new(0.0, 0.0));
        let p = StableParams::new(1.5, 0.6, 1.0).unwrap();
        let z = p.characteristic_exponent(1.0);
        assert!((z.re - 1.0).abs() < 1e-14);
        assert!((z.im + 0.509_525_449_494_428_8).abs() < 1e-12);
    }

    #[test]
    fn overshoot_cdf_examples() {
        let m = sym();
        assert_eq!(m.overshoot_cdf(1.0, 0.0).unwrap(), 0.0);
        let cases = [
            (1.0, 0.1, 0.496_685_718_579_330_0),
            (1.0, 0.05, 0.421_590_283_819_992_99),
            (1.0, 0.2, 0.580_348_894_325_968_6),
            (1.0, 0.02, 0.337_233_781_882_625_27),
            (0.5, 0.3, 0.719_906_620_750_713_97),
            (1.0, 1e-4, 0.090_029_831_083_106_515),
            (1.0, 10.0, 0.948_784_378_776_597_97),
        ];
        for (y, e, want) in cases {
            let got = m.overshoot_cdf(y, e).unwrap();
            assert!((got - want).abs() < 1e-10, "psi({y};{e}) = {got}, want {want}");
        }
        let limit = m.asymptote(AsymptoteKind::OvershootSmall, 1.0, 1.0).unwrap();
        let ratio = m.overshoot_cdf(1.0, 1e-4).unwrap() / 1e-4f64.powf(0.25);
        assert!((ratio / limit - 1.0).abs() < 0.01);
        assert!((limit - 0.900_316_316_157_106).abs() < 1e-12);
    }

    #[test]
    fn overshoot_cdf_rejects_bad_arguments() {
        let m = sym();
        assert!(m.overshoot_cdf(0.0, 0.1).is_err());
        assert!(m.overshoot_cdf(1.0, -0.1).is_err());
    }

    #[test]
    fn asymptote_examples() {
        let m = sym();
        let k0 = m.k0();
        assert!((m.asymptote(AsymptoteKind::SupLower, 1.0, 1.0).unwrap() - k0).abs() < 1e-15);
        let t0 = m.asymptote(AsymptoteKind::T0Small, 1.0, 0.1).unwrap();
        assert!((t0 - 0.008_722_057_088_925_05).abs() < 1e-12);
        assert!(matches!(
            m.asymptote(AsymptoteKind::Ft0Large, 1.0, 1.0),
            Err(Error::ExponentOnly("ft0_large"))
        ));
        assert!((m.asymptote_exponent(AsymptoteKind::Ft0Large) - (-1.0 - 1.0 / 1.5)).abs() < 1e-15);
    }

    #[test]
    fn h_function_examples() {
        let m = sym();
        let (h, h_hat) = m.h_functions(1.0).unwrap();
        assert!((h_hat - 1.088_065_252_131_017_3).abs() < 1e-12);
        assert!((h - h_hat).abs() < 1e-14);
        let (_, h_hat2) = m.h_functions(2.0).unwrap();
        assert!((h_hat2 - 2f64.powf(0.75) * h_hat).abs() < 1e-12);
    }

    #[test]
    fn t0_small_vanishes_relative_to_tx_small() {
        let m = sym();
        let ratio = |u| {
            m.asymptote(AsymptoteKind::T0Small, 1.0, u).unwrap()
                / m.asymptote(AsymptoteKind::TxSmall, 1.0, u).unwrap()
        };
        let seq: Vec<f64> = [1e-1, 1e-2, 1e-3, 1e-4].iter().map(|&u| ratio(u)).collect();
        assert!(seq.windows(2).all(|w| w[1] < w[0]));
        // ratio ~ u^rho, so three decades shrink it by 10^(-3/2)
        assert!((seq[3] / seq[0] - 1e-3f64.sqrt()).abs() < 1e-12);
    }

    fn valid_params() -> impl Strategy<Value = StableParams> {
        (1.01f64..1.99, 0.0f64..1.0, 0.05f64..5.0).prop_map(|(a, frac, c)| {
            let lo = 1.0 - 1.0 / a;
            let hi = 1.0 / a;
            let rho = lo + frac * (hi - lo) * 0.999;
            StableParams { alpha: a, rho, c }
        })
    }

    proptest! {
        #[test]
        fn constants_positive_and_finite(p in valid_params()) {
            let k = StableModel::new(p).unwrap().constants;
            for v in [k.c1, k.k0, k.k0_hat, k.k_inf, k.scale_std] {
                prop_assert!(v.is_finite() && v > 0.0);
            }
            prop_assert!(k.skew.abs() <= 1.0);
        }

        #[test]
        fn exponent_real_part_nonnegative(p in valid_params(), l in -50.0f64..50.0) {
            prop_assert!(p.characteristic_exponent(l).re >= 0.0);
        }

        #[test]
        fn h_functions_scale_exactly(p in valid_params(), x in 0.1f64..10.0, s in 0.1f64..10.0) {
            let m = StableModel::new(p).unwrap();
            let (h1, hh1) = m.h_functions(x).unwrap();
            let (h2, hh2) = m.h_functions(s * x).unwrap();
            let (a, r) = (p.alpha, p.rho);
            prop_assert!((h2 / h1 / s.powf(a * (1.0 - r)) - 1.0).abs() < 1e-12);
            prop_assert!((hh2 / hh1 / s.powf(a * r) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn overshoot_cdf_matches_beta_law(p in valid_params(), y in 0.05f64..5.0, e in 1e-4f64..20.0) {
            // X_{T_y} = y / B with B ~ Beta(ar, 1 - ar), so
            // P(K_y <= e) = P(B >= y / (y + e)).
            let m = StableModel::new(p).unwrap();
            let ar = p.alpha_rho();
            let exact = 1.0 - beta_reg(ar, 1.0 - ar, y / (y + e));
            let got = m.overshoot_cdf(y, e).unwrap();
            prop_assert!((got - exact).abs() < 1e-8, "{} vs {}", got, exact);
        }

        #[test]
        fn overshoot_cdf_monotone_in_eps(e1 in 1e-6f64..5.0, e2 in 1e-6f64..5.0) {
            let m = sym();
            let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
            prop_assert!(m.overshoot_cdf(1.0, lo).unwrap() <= m.overshoot_cdf(1.0, hi).unwrap() + 1e-12);
        }
    }

    #[test]
    fn overshoot_ratio_converges_along_decreasing_eps() {
        let m = sym();
        let limit = m.asymptote(AsymptoteKind::OvershootSmall, 1.0, 1.0).unwrap();
        let gaps: Vec<f64> = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5]
            .iter()
            .map(|&e| (m.overshoot_cdf(1.0, e).unwrap() / e.powf(0.25) / limit - 1.0).abs())
            .collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    }
}
