//! Circulant embedding of the stationary covariance on a uniform grid and
//! the FFT path sampler built on it.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::linalg::cholesky;
use super::{JITTER_REL, PAD_CAP};
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::rng::stream;
use crate::zeros::{PathSample, SeedInfo};

/// Count and worst magnitude of negative eigenvalues clamped to zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct ClampReport {
    pub count: usize,
    pub magnitude: f64,
}

/// Eigen-decomposition of the circulant extension of the grid covariance.
///
/// Immutable after construction; share across worker threads via `Arc`.
pub struct CirculantSpectrum {
    pub n_grid: usize,
    pub spacing: f64,
    pub padded_size: usize,
    pub eigenvalues: Vec<f64>,
    pub clamp_report: ClampReport,
    scale: Vec<f64>, // sqrt(eig / m)
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for CirculantSpectrum {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CirculantSpectrum")
            .field("n_grid", &self.n_grid)
            .field("spacing", &self.spacing)
            .field("padded_size", &self.padded_size)
            .field("clamp_report", &self.clamp_report)
            .finish()
    }
}

/// Build the minimal power-of-two circulant embedding whose eigenvalues are
/// nonnegative up to `neg_tol` (relative to the largest eigenvalue), doubling
/// the padding until the tolerance holds. Negatives within tolerance are
/// clamped to zero.
pub fn build_spectrum(
    kernel: &Kernel,
    n_grid: usize,
    spacing: f64,
    neg_tol: f64,
) -> Result<CirculantSpectrum> {
    if n_grid < 2 {
        return Err(Error::Param(format!("n_grid must be >= 2, got {n_grid}")));
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::Param(format!("spacing must be positive, got {spacing}")));
    }
    if neg_tol < 0.0 {
        return Err(Error::Param("neg_tol must be >= 0".into()));
    }
    let mut planner = FftPlanner::<f64>::new();
    let mut m = (2 * (n_grid - 1)).next_power_of_two().max(2);
    let mut last_min = f64::NEG_INFINITY;
    while m <= PAD_CAP {
        // first row of the circulant: K(0), K(d), ..., K((m/2) d), ..., K(d)
        let mut buf: Vec<Complex<f64>> = (0..m)
            .map(|j| {
                let lag = j.min(m - j) as f64 * spacing;
                Complex::new(kernel.eval_raw(lag), 0.0)
            })
            .collect();
        let fft = planner.plan_fft_forward(m);
        fft.process(&mut buf);
        let mut eig: Vec<f64> = buf.iter().map(|c| c.re).collect();
        let max_eig = eig.iter().cloned().fold(f64::MIN, f64::max);
        let min_eig = eig.iter().cloned().fold(f64::MAX, f64::min);
        last_min = min_eig;
        if max_eig > 0.0 && min_eig >= -neg_tol * max_eig {
            let mut clamp = ClampReport::default();
            for e in eig.iter_mut() {
                if *e < 0.0 {
                    clamp.count += 1;
                    clamp.magnitude = clamp.magnitude.max(-*e);
                    *e = 0.0;
                }
            }
            let scale = eig.iter().map(|&e| (e / m as f64).sqrt()).collect();
            return Ok(CirculantSpectrum {
                n_grid,
                spacing,
                padded_size: m,
                eigenvalues: eig,
                clamp_report: clamp,
                scale,
                fft,
            });
        }
        m *= 2;
    }
    Err(Error::Embedding {
        min_eig: last_min,
        padded_size: m / 2,
        tol: neg_tol,
    })
}

/// Stateful sampler drawing exact stationary paths from a spectrum.
///
/// One FFT yields two independent paths (real and imaginary parts), so
/// consecutive calls alternate between a fresh transform and its cached
/// partner. Identical `(master_seed, stage, task)` reproduces every path.
pub struct PathSampler {
    spec: Arc<CirculantSpectrum>,
    origin: f64,
    rng: ChaCha8Rng,
    seed: SeedInfo,
    buf: Vec<Complex<f64>>,
    pending: Option<Vec<f64>>,
}

impl PathSampler {
    pub fn new(spec: Arc<CirculantSpectrum>, origin: f64, master_seed: u64, stage: u32, task: u64) -> Self {
        let m = spec.padded_size;
        PathSampler {
            spec,
            origin,
            rng: stream(master_seed, stage, task),
            seed: SeedInfo { master_seed, stage, task },
            buf: vec![Complex::default(); m],
            pending: None,
        }
    }

    /// Next path: `n_grid` values of a centred stationary Gaussian vector
    /// with covariance `K(|i-j| spacing)` exactly (up to eigenvalue clamping).
    pub fn sample(&mut self) -> PathSample {
        if let Some(values) = self.pending.take() {
            return PathSample {
                origin: self.origin,
                spacing: self.spec.spacing,
                values,
                seed: self.seed,
            };
        }
        for (k, slot) in self.buf.iter_mut().enumerate() {
            let a: f64 = self.rng.sample(StandardNormal);
            let b: f64 = self.rng.sample(StandardNormal);
            let s = self.spec.scale[k];
            *slot = Complex::new(a * s, b * s);
        }
        self.spec.fft.process(&mut self.buf);
        let n = self.spec.n_grid;
        let values: Vec<f64> = self.buf[..n].iter().map(|c| c.re).collect();
        self.pending = Some(self.buf[..n].iter().map(|c| c.im).collect());
        PathSample {
            origin: self.origin,
            spacing: self.spec.spacing,
            values,
            seed: self.seed,
        }
    }
}

/// Direct Cholesky path sampler; the exactness oracle for small grids.
pub fn sample_direct<R: Rng>(
    kernel: &Kernel,
    n_grid: usize,
    spacing: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let mut cov = vec![0.0; n_grid * n_grid];
    for i in 0..n_grid {
        for j in 0..n_grid {
            cov[i * n_grid + j] = kernel.eval_raw((i as f64 - j as f64) * spacing);
        }
    }
    let l = cholesky(&cov, n_grid, JITTER_REL * kernel.variance())?;
    let z: Vec<f64> = (0..n_grid).map(|_| rng.sample(StandardNormal)).collect();
    Ok(l.mul(&z))
}
