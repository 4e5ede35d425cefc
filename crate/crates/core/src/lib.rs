//! Numerical laboratory for ergodicity of time-changed symmetric stable processes.

pub mod claims;
#[cfg(feature = "cli")]
pub mod cli_io;
pub mod dirichlet_discrete;
pub mod ergodicity_mc;
pub mod error;
pub mod generator;
pub mod par;
pub mod quad;
pub mod simulate;
pub mod special_functions;
pub mod weights_rates;

pub use error::{ErgoError, ErrorClass, Result};
pub use special_functions::{SeriesResult, StableIndex};
