//! A numerical laboratory for the statistics of gaps between zeros of smooth
//! stationary Gaussian processes: exact FFT sampling, zero extraction, gap
//! survival and intensity curves, the rescaled gap point process, and the
//! splitting/clustering coefficients of gap events.

pub mod coefficients;
pub mod error;
pub mod exec;
pub mod gaussian;
pub mod kernels;
pub mod pointprocess;
pub mod rng;
pub mod scaling;
pub mod stats;
pub mod zeros;

pub use error::{Error, Result};
