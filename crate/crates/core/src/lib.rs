//! Phase-function density deconvolution for data with additive,
//! heteroscedastic measurement error of unknown distribution.

pub mod bandwidth;
pub mod cli;
pub mod density;
pub mod ecf;
pub mod error;
pub mod io;
pub mod metrics;
pub mod model;
pub mod phasefit;
pub mod pipeline;
pub mod quad;
pub mod study;
pub mod weights;

pub use error::{Error, Result};
