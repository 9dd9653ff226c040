use std::path::PathBuf;

use thiserror::Error;

/// Reason a parameter triple is outside the admissible region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamViolation {
    AlphaRange,
    NoPositiveJumps,
    BelowSpectralBoundary,
    ScaleNotPositive,
    NotFinite,
}

impl std::fmt::Display for ParamViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let msg = match self {
            ParamViolation::AlphaRange => "alpha must lie in the open interval (1, 2)",
            ParamViolation::NoPositiveJumps => {
                "alpha*rho must be < 1 (the process must have positive jumps)"
            }
            ParamViolation::BelowSpectralBoundary => {
                "rho must be >= 1 - 1/alpha (spectrally positive boundary)"
            }
            ParamViolation::ScaleNotPositive => "scale c must be > 0",
            ParamViolation::NotFinite => "parameters must be finite numbers",
        };
        f.write_str(msg)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters (alpha={alpha}, rho={rho}, c={c}): {violation}")]
    InvalidParams {
        alpha: f64,
        rho: f64,
        c: f64,
        violation: ParamViolation,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quadrature did not converge: estimate {estimate}, error estimate {error}")]
    Quadrature { estimate: f64, error: f64 },

    #[error("skeleton would need {steps} steps, above the cap of {cap}")]
    StepCapExceeded { steps: usize, cap: usize },

    #[error("asymptote {0} is known only through its exponent")]
    ExponentOnly(&'static str),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("t = {t} is outside the reliable window (0, {limit}]")]
    OutsideWindow { t: f64, limit: f64 },

    #[error("checkpoint t = {0} was not recorded in the ensemble")]
    MissingCheckpoint(f64),

    #[error("ensembles cannot be merged: {0}")]
    Incompatible(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
