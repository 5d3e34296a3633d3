//! Sparse functional time series: simulation, reconstruction from point
//! observations, invariance-principle diagnostics and open-ended CUSUM
//! change-point monitoring with Monte Carlo thresholds.

pub mod cli;
pub mod error;
pub mod experiment;
pub mod funcspace;
pub mod gausslimit;
pub mod linalg;
pub mod metrics;
pub mod monitor;
pub mod partialsum;
pub mod seed;
pub mod synth;

pub use error::{Error, Result};
pub use funcspace::{GridFunction, Interval};
