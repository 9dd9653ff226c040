pub mod cli;
pub mod error;
pub mod estimators;
pub mod model;
pub mod quadrature;
pub mod rng;
pub mod sampler;
pub mod special;
