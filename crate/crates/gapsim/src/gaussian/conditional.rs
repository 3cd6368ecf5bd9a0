//! Joint law of `(f'(0), f(grid))` conditional on `f(0) = 0`, sampled
//! sequentially through its Cholesky factor so survival indicators can stop
//! at the first sign change.
//!
//! Covariance conventions (stationary, centred):
//!   Cov[f'(0), f(x)]            = -K'(x)   (derivative in the lag)
//!   Cov[f(x), f(y) | f(0) = 0]  = K(x-y) - K(x) K(y) / K(0)
//!   Var[f'(0)]                  = -K''(0), unchanged by conditioning since
//!                                 f'(0) is uncorrelated with f(0).
//! The sign of the cross term is pinned by a finite-difference Monte Carlo
//! test against sampled paths.

use rand::Rng;
use rand_distr::StandardNormal;

use super::linalg::{cholesky, Lower};
use super::JITTER_REL;
use crate::error::{Error, Result};
use crate::kernels::Kernel;

#[derive(Debug)]
pub struct ConditionalZeroModel {
    grid: Vec<f64>,
    chol: Lower,
    k0: f64,
    lambda2: f64,
}

/// Build the conditional model on strictly increasing grid points in
/// `(0, r_max]`. Coordinate 0 of the factor is `f'(0)`; coordinates
/// `1..=m` are `f(grid[i])` in order.
pub fn build_conditional_zero_model(kernel: &Kernel, grid: &[f64]) -> Result<ConditionalZeroModel> {
    if grid.is_empty() {
        return Err(Error::Param("conditional grid is empty".into()));
    }
    let mut prev = 0.0;
    for &x in grid {
        if !(x > prev) {
            return Err(Error::NearSingular { left: prev, right: x });
        }
        prev = x;
    }
    let k0 = kernel.variance();
    let lambda2 = kernel.lambda2();
    let m = grid.len();
    let dim = m + 1;
    let mut cov = vec![0.0f64; dim * dim];
    cov[0] = lambda2;
    for (i, &x) in grid.iter().enumerate() {
        let c = -kernel.eval_d1(x)?;
        cov[i + 1] = c;
        cov[(i + 1) * dim] = c;
    }
    for i in 0..m {
        for j in 0..m {
            cov[(i + 1) * dim + (j + 1)] = kernel.eval_raw(grid[i] - grid[j])
                - kernel.eval_raw(grid[i]) * kernel.eval_raw(grid[j]) / k0;
        }
    }
    let chol = cholesky(&cov, dim, JITTER_REL * k0).map_err(|e| match e {
        Error::NotSpd { index } if index >= 1 => {
            let right = grid[index - 1];
            let left = if index >= 2 { grid[index - 2] } else { 0.0 };
            Error::NearSingular { left, right }
        }
        other => other,
    })?;
    Ok(ConditionalZeroModel {
        grid: grid.to_vec(),
        chol,
        k0,
        lambda2,
    })
}

impl ConditionalZeroModel {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn k0(&self) -> f64 {
        self.k0
    }

    pub fn lambda2(&self) -> f64 {
        self.lambda2
    }

    /// `(2 pi K(0))^{-1/2}`, the density of `f(0)` at zero.
    pub fn kac_rice_constant(&self) -> f64 {
        1.0 / (2.0 * std::f64::consts::PI * self.k0).sqrt()
    }

    /// Draw `(|f'(0)|, s)` where `s` is the number of leading grid values
    /// sharing one strict sign: the conditional path has no zero in
    /// `(0, grid[s-1]]`. Sampling stops at the first sign change.
    pub fn sample_survival<R: Rng>(&self, rng: &mut R) -> (f64, usize) {
        let dim = self.grid.len() + 1;
        let mut z = Vec::with_capacity(dim);
        z.push(rng.sample::<f64, _>(StandardNormal));
        let weight = (self.chol.at(0, 0) * z[0]).abs();
        let mut first_sign = 0i8;
        let mut survived = 0usize;
        for i in 1..dim {
            z.push(rng.sample::<f64, _>(StandardNormal));
            let row = self.chol.row(i);
            let mut acc = 0.0;
            for (l, zj) in row.iter().zip(z.iter()) {
                acc += l * zj;
            }
            let sign = if acc > 0.0 {
                1
            } else if acc < 0.0 {
                -1
            } else {
                0
            };
            if i == 1 {
                if sign == 0 {
                    break;
                }
                first_sign = sign;
            } else if sign != first_sign {
                break;
            }
            survived = i;
        }
        (weight, survived)
    }

    /// Full conditional draw `(f'(0), f(grid))`; used by validation tests.
    pub fn sample_values<R: Rng>(&self, rng: &mut R) -> (f64, Vec<f64>) {
        let dim = self.grid.len() + 1;
        let z: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let y = self.chol.mul(&z);
        (y[0], y[1..].to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stage, stream};

    #[test]
    fn conditional_moments_gaussian_kernel() {
        let k = Kernel::gaussian();
        let grid: Vec<f64> = (1..=8).map(|i| i as f64 * 0.5).collect();
        let model = build_conditional_zero_model(&k, &grid).unwrap();
        let mut rng = stream(3, stage::LAMBDA_CURVE, 0);
        let n = 200_000;
        let mut sum_w2 = 0.0;
        let mut sum_f = vec![0.0; grid.len()];
        let mut sum_f2 = vec![0.0; grid.len()];
        for _ in 0..n {
            let (d, f) = model.sample_values(&mut rng);
            sum_w2 += d * d;
            for (i, &v) in f.iter().enumerate() {
                sum_f[i] += v;
                sum_f2[i] += v * v;
            }
        }
        let nf = n as f64;
        // Var[f'(0) | f(0)=0] = -K''(0) = 1
        assert!((sum_w2 / nf - 1.0).abs() < 0.02, "var f' = {}", sum_w2 / nf);
        // Var[f(x) | f(0)=0] = K(0) - K(x)^2/K(0) = 1 - e^{-1} at x = 1
        let x = grid[1];
        let var = sum_f2[1] / nf;
        let target = 1.0 - k.eval_raw(x) * k.eval_raw(x);
        assert!((target - 0.632_121).abs() < 1e-6);
        assert!((var - target).abs() < 0.01, "var {var} vs {target}");
        let se = (target / nf).sqrt();
        assert!(
            (sum_f[1] / nf).abs() < 4.0 * se,
            "conditional mean not centred: {}",
            sum_f[1] / nf
        );
    }

    #[test]
    fn survival_counts_match_full_draw_law() {
        // mean |f'(0)| = sqrt(2 lambda2 / pi) regardless of the grid
        let k = Kernel::gaussian();
        let grid: Vec<f64> = (1..=20).map(|i| i as f64 * 0.2).collect();
        let model = build_conditional_zero_model(&k, &grid).unwrap();
        let mut rng = stream(5, stage::LAMBDA_CURVE, 1);
        let n = 100_000;
        let mut wsum = 0.0;
        let mut surv_all = 0u64;
        for _ in 0..n {
            let (w, s) = model.sample_survival(&mut rng);
            wsum += w;
            if s == grid.len() {
                surv_all += 1;
            }
        }
        let half_normal = (2.0 * k.lambda2() / std::f64::consts::PI).sqrt();
        let mean_w = wsum / n as f64;
        assert!((mean_w - half_normal).abs() < 0.01, "mean |f'| = {mean_w}");
        assert!(surv_all > 0, "some paths should stay one-signed over 4 units");
    }

    #[test]
    fn rejects_bad_grids() {
        let k = Kernel::gaussian();
        assert!(build_conditional_zero_model(&k, &[]).is_err());
        assert!(matches!(
            build_conditional_zero_model(&k, &[0.5, 0.5]),
            Err(Error::NearSingular { .. })
        ));
        assert!(matches!(
            build_conditional_zero_model(&k, &[-0.5, 0.5]),
            Err(Error::NearSingular { .. })
        ));
    }
}
