//! Dense Cholesky factorization for the small covariance matrices used by
//! the conditional model, orthant Monte Carlo, and test oracles.

use crate::error::{Error, Result};

/// Lower-triangular Cholesky factor, row-major.
#[derive(Debug, Clone)]
pub struct Lower {
    pub n: usize,
    data: Vec<f64>,
}

impl Lower {
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..i * self.n + i + 1]
    }

    /// `y = L z` for a full standard-normal vector `z`.
    pub fn mul(&self, z: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let row = self.row(i);
            let mut acc = 0.0;
            for (l, zj) in row.iter().zip(z.iter()) {
                acc += l * zj;
            }
            y[i] = acc;
        }
        y
    }
}

/// Factor a symmetric matrix (row-major, size `n*n`), adding `jitter` to the
/// diagonal. Fails with the offending pivot index when not positive definite.
pub fn cholesky(a: &[f64], n: usize, jitter: f64) -> Result<Lower> {
    assert_eq!(a.len(), n * n);
    let mut l = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            if i == j {
                sum += jitter;
            }
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(Error::NotSpd { index: i });
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Ok(Lower { n, data: l })
}
