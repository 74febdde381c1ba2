//! Log-linear Birnbaum–Saunders regression: fitting, score tests with
//! Bartlett-type corrections, and Monte Carlo size/power studies.

pub mod corrections;
pub mod cumulants;
pub mod error;
pub mod harness;
pub mod inference;
pub mod model;
pub mod sinh_normal;
pub mod specfun;

pub use error::{Error, Result};

/// Matrix types used throughout the public API.
pub use nalgebra;
