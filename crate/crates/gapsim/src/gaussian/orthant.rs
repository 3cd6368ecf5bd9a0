//! Orthant probabilities: the bivariate closed form and a brute-force
//! Monte Carlo oracle for small dimensions.

use rand::Rng;
use rand_distr::StandardNormal;

use super::linalg::cholesky;
use crate::error::{Error, Result};
use crate::stats::{wilson_interval, EstimateWithCi};

/// `P[X > 0, Y > 0]` for a standard bivariate normal with correlation `rho`:
/// `1/4 + arcsin(rho) / (2 pi)`.
pub fn orthant2(rho: f64) -> Result<f64> {
    if !rho.is_finite() || rho.abs() > 1.0 {
        return Err(Error::Range {
            query: rho,
            lo: -1.0,
            hi: 1.0,
        });
    }
    Ok(0.25 + rho.asin() / (2.0 * std::f64::consts::PI))
}

/// Unbiased Monte Carlo estimate of `P[all coordinates > 0]` for a centred
/// normal with the given covariance (row-major, dim <= 8), Wilson 95% CI.
pub fn mvn_positive_orthant_mc<R: Rng>(
    cov: &[f64],
    dim: usize,
    n_samples: u64,
    rng: &mut R,
) -> Result<EstimateWithCi> {
    if dim == 0 || dim > 8 {
        return Err(Error::Param(format!("dimension must be in 1..=8, got {dim}")));
    }
    if cov.len() != dim * dim {
        return Err(Error::Param("covariance size mismatch".into()));
    }
    if n_samples < 10_000 {
        return Err(Error::InsufficientData {
            need: 10_000,
            got: n_samples as usize,
        });
    }
    let l = cholesky(cov, dim, 0.0)?;
    let mut hits = 0u64;
    let mut z = vec![0.0f64; dim];
    for _ in 0..n_samples {
        for zj in z.iter_mut() {
            *zj = rng.sample(StandardNormal);
        }
        let x = l.mul(&z);
        if x.iter().all(|&v| v > 0.0) {
            hits += 1;
        }
    }
    wilson_interval(hits, n_samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stage, stream};

    #[test]
    fn orthant2_examples() {
        assert!((orthant2(0.0).unwrap() - 0.25).abs() < 1e-15);
        assert!((orthant2(1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((orthant2(0.5).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!((orthant2(-1.0).unwrap() - 0.0).abs() < 1e-15);
        assert!(orthant2(1.2).is_err());
        assert!(orthant2(f64::NAN).is_err());
    }

    #[test]
    fn mc_identity_2x2() {
        let mut rng = stream(11, stage::ORTHANT_MC, 0);
        let e = mvn_positive_orthant_mc(&[1.0, 0.0, 0.0, 1.0], 2, 40_000, &mut rng).unwrap();
        assert!(e.covers(0.25), "{e:?}");
    }

    #[test]
    fn mc_matches_closed_form_rho_half() {
        let mut rng = stream(11, stage::ORTHANT_MC, 1);
        let e = mvn_positive_orthant_mc(&[1.0, 0.5, 0.5, 1.0], 2, 60_000, &mut rng).unwrap();
        assert!(e.covers(1.0 / 3.0), "{e:?}");
    }

    #[test]
    fn mc_equicorrelated_3x3() {
        // For rho = 1/2 the trivariate positive orthant has probability
        // exactly 1/4: write X_i = (Z_i - Z_0)/sqrt(2) with Z iid, so
        // all X_i > 0 iff Z_0 is the minimum of four exchangeable variables.
        let cov = [1.0, 0.5, 0.5, 0.5, 1.0, 0.5, 0.5, 0.5, 1.0];
        let mut rng = stream(11, stage::ORTHANT_MC, 2);
        let e = mvn_positive_orthant_mc(&cov, 3, 80_000, &mut rng).unwrap();
        assert!(e.covers(0.25), "{e:?}");
    }

    #[test]
    fn mc_rejects_bad_inputs() {
        let mut rng = stream(11, stage::ORTHANT_MC, 3);
        assert!(mvn_positive_orthant_mc(&[1.0], 1, 100, &mut rng).is_err());
        // indefinite matrix -> SPD error
        let bad = [1.0, 2.0, 2.0, 1.0];
        assert!(matches!(
            mvn_positive_orthant_mc(&bad, 2, 20_000, &mut rng),
            Err(Error::NotSpd { .. })
        ));
    }
}
