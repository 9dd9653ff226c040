//! Command implementations behind the `stable-passage` binary.

pub mod check;
pub mod commands;
pub mod config;

pub use check::*;
pub use commands::*;
pub use config::*;

use crate::error::Error;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_DATA: i32 = 4;

/// Process exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidParams { .. } | Error::InvalidArgument(_) | Error::Incompatible(_) => EXIT_INVALID,
        Error::Io { .. } | Error::Format { .. } | Error::Json(_) => EXIT_IO,
        Error::Quadrature { .. }
        | Error::StepCapExceeded { .. }
        | Error::ExponentOnly(_)
        | Error::InsufficientData(_)
        | Error::OutsideWindow { .. }
        | Error::MissingCheckpoint(_) => EXIT_DATA,
    }
}
