//! Exact Gaussian linear algebra: covariance assembly, circulant-embedding
//! spectra, conditional (regression) structures, and small-dimension orthant
//! oracles.

mod conditional;
mod linalg;
mod orthant;
mod spectrum;

pub use conditional::{build_conditional_zero_model, ConditionalZeroModel};
pub use linalg::{cholesky, Lower};
pub use orthant::{mvn_positive_orthant_mc, orthant2};
pub use spectrum::{build_spectrum, sample_direct, CirculantSpectrum, ClampReport, PathSampler};

/// Relative jitter added to conditional covariance diagonals; smooth kernels
/// on fine grids are exactly singular at machine precision without it.
pub(crate) const JITTER_REL: f64 = 1e-10;

/// Default relative tolerance for clamping negative circulant eigenvalues.
pub const NEG_EIG_TOL: f64 = 1e-10;

/// Hard cap on the padded circulant size.
pub const PAD_CAP: usize = 1 << 26;
