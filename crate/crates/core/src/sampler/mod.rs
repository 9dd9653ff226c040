//! Exact stable increments, path skeletons and passage ensembles.

mod ensemble;
mod increments;
mod io;
mod record;
mod skeleton;
mod walker;

pub use ensemble::*;
pub use io::*;
pub use increments::*;
pub use record::*;
pub use skeleton::*;
pub use walker::*;
