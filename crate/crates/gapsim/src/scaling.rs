//! Estimation of the gap probability G(r), the gap intensity
//! lambda(r) = -G'(r), the scaling function theta(r) = -log lambda(r) with
//! its left-continuous inverse, and fits of the asymptotic laws.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exec::{chunk_tasks, run_tasks, task_len};
use crate::gaussian::{build_conditional_zero_model, build_spectrum, PathSampler, NEG_EIG_TOL};
use crate::kernels::{DecayClass, Kernel};
use crate::rng::{stage, stream};
use crate::stats::{
    batch_means, isotonic_nonincreasing, linear_fit, wilson_interval, CiMethod, EstimateWithCi,
};
use crate::zeros::first_crossing_cell;

/// Number of batches used for batch-means confidence intervals.
pub const N_BATCHES: usize = 32;

/// Survivor threshold below which tail estimates are considered unreliable
/// and excluded from tables and fits.
pub const MIN_SURVIVORS: u64 = 10;

/// Per-batch sufficient statistics for the survival curve of the first zero
/// after the origin: counts of paths whose first crossing cell is >= j.
#[derive(Debug, Clone)]
pub struct GapCurveBatches {
    pub r_grid: Vec<f64>,
    /// `surv[b][j]` = paths in batch b with no zero in [0, r_j].
    pub surv: Vec<Vec<u64>>,
    /// Same, restricted to paths positive at the origin.
    pub surv_pos: Vec<Vec<u64>>,
    pub batch_paths: Vec<u64>,
}

/// Survival-style estimates on a common r-grid.
#[derive(Debug, Clone)]
pub struct GapCurve {
    pub r_grid: Vec<f64>,
    /// `G(r_j)` with Wilson intervals.
    pub gap: Vec<EstimateWithCi>,
    /// One-sided persistence `P[f > 0 on [0, r_j]]` with Wilson intervals.
    pub persistence: Vec<EstimateWithCi>,
    pub n_paths: u64,
}

/// Estimate the whole survival curve G in one pass: each path contributes the
/// cell index of its first zero after the origin.
///
/// Paths are simulated on `[-pad, r_max]` with `pad = 5 / rice_intensity` so
/// the window start is in stationary regime relative to the detector.
pub fn estimate_g_curve_batches(
    kernel: &Kernel,
    r_max: f64,
    n_paths: u64,
    master_seed: u64,
    workers: usize,
    grid_factor: f64,
) -> Result<GapCurveBatches> {
    if !(r_max > 0.0) {
        return Err(Error::Param("r_max must be positive".into()));
    }
    if n_paths < 1_000 {
        return Err(Error::InsufficientData { need: 1_000, got: n_paths as usize });
    }
    let spacing = kernel.default_spacing(grid_factor);
    let m = (r_max / spacing).ceil() as usize;
    let pad_cells = (5.0 / kernel.rice_intensity() / spacing).ceil() as usize;
    let n_grid = pad_cells + m + 1;
    let spec = Arc::new(build_spectrum(kernel, n_grid, spacing, NEG_EIG_TOL)?);
    let origin = -(pad_cells as f64) * spacing;

    let (n_tasks, _) = chunk_tasks(n_paths);
    // hist[c] = paths whose first crossing cell (relative to 0) is c; the last
    // bucket collects paths with no crossing up to r_max.
    let per_task: Vec<(Vec<u64>, Vec<u64>)> = run_tasks(workers, n_tasks, |t| {
        let mut sampler = PathSampler::new(spec.clone(), origin, master_seed, stage::G_CURVE, t);
        let mut hist = vec![0u64; m + 1];
        let mut hist_pos = vec![0u64; m + 1];
        for _ in 0..task_len(t, n_paths) {
            let path = sampler.sample();
            let bucket = match first_crossing_cell(&path.values, pad_cells) {
                Some(c) => (c - pad_cells).min(m),
                None => m,
            };
            hist[bucket] += 1;
            if path.values[pad_cells] > 0.0 {
                hist_pos[bucket] += 1;
            }
        }
        (hist, hist_pos)
    });

    let r_grid: Vec<f64> = (0..=m).map(|j| j as f64 * spacing).collect();
    let mut surv = Vec::with_capacity(N_BATCHES);
    let mut surv_pos = Vec::with_capacity(N_BATCHES);
    let mut batch_paths = Vec::with_capacity(N_BATCHES);
    for b in 0..N_BATCHES {
        let mut hist = vec![0u64; m + 1];
        let mut hist_pos = vec![0u64; m + 1];
        let mut paths = 0u64;
        for t in (b as u64..n_tasks).step_by(N_BATCHES) {
            let (h, hp) = &per_task[t as usize];
            for j in 0..=m {
                hist[j] += h[j];
                hist_pos[j] += hp[j];
            }
            paths += task_len(t, n_paths);
        }
        // suffix sums: no zero in [0, r_j] iff first crossing cell >= j
        let mut s = vec![0u64; m + 1];
        let mut sp = vec![0u64; m + 1];
        let mut acc = 0u64;
        let mut accp = 0u64;
        for j in (0..=m).rev() {
            acc += hist[j];
            accp += hist_pos[j];
            s[j] = acc;
            sp[j] = accp;
        }
        surv.push(s);
        surv_pos.push(sp);
        batch_paths.push(paths);
    }
    Ok(GapCurveBatches { r_grid, surv, surv_pos, batch_paths })
}

impl GapCurveBatches {
    /// Assemble Wilson-interval curves from a subset of batches.
    pub fn curve(&self, batches: &[usize]) -> Result<GapCurve> {
        let m = self.r_grid.len();
        let mut n_paths = 0u64;
        let mut s = vec![0u64; m];
        let mut sp = vec![0u64; m];
        for &b in batches {
            n_paths += self.batch_paths[b];
            for j in 0..m {
                s[j] += self.surv[b][j];
                sp[j] += self.surv_pos[b][j];
            }
        }
        let gap = s.iter().map(|&c| wilson_interval(c, n_paths)).collect::<Result<Vec<_>>>()?;
        let persistence =
            sp.iter().map(|&c| wilson_interval(c, n_paths)).collect::<Result<Vec<_>>>()?;
        Ok(GapCurve { r_grid: self.r_grid.clone(), gap, persistence, n_paths })
    }

    pub fn full_curve(&self) -> Result<GapCurve> {
        self.curve(&(0..N_BATCHES).collect::<Vec<_>>())
    }
}

/// Per-batch sufficient statistics for the Kac-Rice intensity curve.
#[derive(Debug, Clone)]
pub struct LambdaCurveBatches {
    pub r_grid: Vec<f64>,
    /// `wsum[b][j]` = sum over draws in batch b of |f'(0)| 1{no zero in (0, r_j]}.
    pub wsum: Vec<Vec<f64>>,
    /// Survivor counts per batch and r index.
    pub survivors: Vec<Vec<u64>>,
    pub batch_draws: Vec<u64>,
    pub kac_rice_constant: f64,
}

/// Intensity estimates with batch-means intervals.
#[derive(Debug, Clone)]
pub struct LambdaCurve {
    pub r_grid: Vec<f64>,
    pub lambda: Vec<EstimateWithCi>,
    pub survivors: Vec<u64>,
    pub n_draws: u64,
}

/// One-pass estimator of `lambda(r) = (2 pi K(0))^{-1/2} E[|f'(0)| 1{no zero
/// in (0,r]} | f(0) = 0]` on the grid `r_j = j * spacing`.
pub fn estimate_lambda_curve_batches(
    kernel: &Kernel,
    r_max: f64,
    n_draws: u64,
    master_seed: u64,
    workers: usize,
    grid_factor: f64,
) -> Result<LambdaCurveBatches> {
    if !(r_max > 0.0) {
        return Err(Error::Param("r_max must be positive".into()));
    }
    if n_draws < 1_000 {
        return Err(Error::InsufficientData { need: 1_000, got: n_draws as usize });
    }
    let spacing = kernel.default_spacing(grid_factor);
    let m = (r_max / spacing).ceil() as usize;
    let grid: Vec<f64> = (1..=m).map(|j| j as f64 * spacing).collect();
    let model = Arc::new(build_conditional_zero_model(kernel, &grid)?);

    let (n_tasks, _) = chunk_tasks(n_draws);
    let per_task: Vec<(Vec<f64>, Vec<u64>)> = run_tasks(workers, n_tasks, |t| {
        let mut rng = stream(master_seed, stage::LAMBDA_CURVE, t);
        // Index s = number of grid points survived, in 0..=m.
        let mut wsum = vec![0.0f64; m + 1];
        let mut count = vec![0u64; m + 1];
        for _ in 0..task_len(t, n_draws) {
            let (w, s) = model.sample_survival(&mut rng);
            wsum[s] += w;
            count[s] += 1;
        }
        (wsum, count)
    });

    let r_grid: Vec<f64> = (0..=m).map(|j| j as f64 * spacing).collect();
    let mut wsum_b = Vec::with_capacity(N_BATCHES);
    let mut surv_b = Vec::with_capacity(N_BATCHES);
    let mut batch_draws = Vec::with_capacity(N_BATCHES);
    for b in 0..N_BATCHES {
        let mut wh = vec![0.0f64; m + 1];
        let mut ch = vec![0u64; m + 1];
        let mut draws = 0u64;
        for t in (b as u64..n_tasks).step_by(N_BATCHES) {
            let (w, c) = &per_task[t as usize];
            for j in 0..=m {
                wh[j] += w[j];
                ch[j] += c[j];
            }
            draws += task_len(t, n_draws);
        }
        // suffix sums over survival length: survived s >= j means no zero in (0, r_j]
        let mut ws = vec![0.0f64; m + 1];
        let mut cs = vec![0u64; m + 1];
        let mut accw = 0.0;
        let mut accc = 0u64;
        for j in (0..=m).rev() {
            accw += wh[j];
            accc += ch[j];
            ws[j] = accw;
            cs[j] = accc;
        }
        wsum_b.push(ws);
        surv_b.push(cs);
        batch_draws.push(draws);
    }
    Ok(LambdaCurveBatches {
        r_grid,
        wsum: wsum_b,
        survivors: surv_b,
        batch_draws,
        kac_rice_constant: model.kac_rice_constant(),
    })
}

impl LambdaCurveBatches {
    /// Assemble the intensity curve from a subset of batches; the CI at each
    /// r comes from the spread of the per-batch means. Batches left empty by
    /// a small task count are skipped.
    pub fn curve(&self, batches: &[usize]) -> Result<LambdaCurve> {
        let batches: Vec<usize> = batches
            .iter()
            .copied()
            .filter(|&b| self.batch_draws[b] > 0)
            .collect();
        if batches.len() < 2 {
            return Err(Error::InsufficientData { need: 2, got: batches.len() });
        }
        let m = self.r_grid.len();
        let c = self.kac_rice_constant;
        let mut lambda = Vec::with_capacity(m);
        let mut survivors = vec![0u64; m];
        let n_draws: u64 = batches.iter().map(|&b| self.batch_draws[b]).sum();
        for j in 0..m {
            let vals: Vec<f64> = batches
                .iter()
                .map(|&b| c * self.wsum[b][j] / self.batch_draws[b] as f64)
                .collect();
            let mut est = batch_means(&vals)?;
            // overall mean, weighted by batch size
            let total: f64 = batches.iter().map(|&b| self.wsum[b][j]).sum();
            est.value = c * total / n_draws as f64;
            est.lo = est.lo.max(0.0);
            est.n = n_draws;
            lambda.push(est);
            survivors[j] = batches.iter().map(|&b| self.survivors[b][j]).sum();
        }
        Ok(LambdaCurve { r_grid: self.r_grid.clone(), lambda, survivors, n_draws })
    }

    pub fn full_curve(&self) -> Result<LambdaCurve> {
        self.curve(&(0..N_BATCHES).collect::<Vec<_>>())
    }
}

/// The assembled scaling table: G and lambda on a common r-grid, the
/// isotonic-corrected theta, and monotone inversion.
#[derive(Debug, Clone)]
pub struct ScalingTable {
    pub r_grid: Vec<f64>,
    pub gap: Vec<EstimateWithCi>,
    pub persistence: Vec<EstimateWithCi>,
    pub lambda: Vec<EstimateWithCi>,
    /// `-log lambda_iso`, nondecreasing, defined on the reliable prefix.
    pub theta: Vec<f64>,
    pub reliable_len: usize,
    /// Largest isotonic adjustment in units of the local CI half-width.
    pub max_iso_shift: f64,
    pub n_g_paths: u64,
    pub n_lambda_draws: u64,
}

/// Build the table from matching curves. The reliable prefix ends where the
/// intensity estimator drops below [`MIN_SURVIVORS`] surviving draws.
pub fn build_table(g: &GapCurve, l: &LambdaCurve) -> Result<ScalingTable> {
    if g.r_grid.len() != l.r_grid.len()
        || g.r_grid
            .iter()
            .zip(&l.r_grid)
            .any(|(a, b)| (a - b).abs() > 1e-12)
    {
        return Err(Error::Param("G and lambda curves use different grids".into()));
    }
    let m = g.r_grid.len();
    let raw: Vec<f64> = l.lambda.iter().map(|e| e.value).collect();
    let weights = vec![1.0; m];
    let iso = isotonic_nonincreasing(&raw, &weights);
    let mut max_shift = 0.0f64;
    for j in 0..m {
        let hw = l.lambda[j].half_width();
        if hw > 0.0 {
            max_shift = max_shift.max((iso[j] - raw[j]).abs() / hw);
        }
    }
    let mut reliable_len = 0usize;
    for j in 0..m {
        if l.survivors[j] >= MIN_SURVIVORS && iso[j] > 0.0 {
            reliable_len = j + 1;
        } else {
            break;
        }
    }
    if reliable_len < 2 {
        return Err(Error::InsufficientData { need: 2, got: reliable_len });
    }
    let mut theta: Vec<f64> = iso[..reliable_len].iter().map(|&v| -v.ln()).collect();
    for j in 1..reliable_len {
        if theta[j] < theta[j - 1] {
            theta[j] = theta[j - 1];
        }
    }
    Ok(ScalingTable {
        r_grid: g.r_grid.clone(),
        gap: g.gap.clone(),
        persistence: g.persistence.clone(),
        lambda: l.lambda.clone(),
        theta,
        reliable_len,
        max_iso_shift: max_shift,
        n_g_paths: g.n_paths,
        n_lambda_draws: l.n_draws,
    })
}

impl ScalingTable {
    /// Table for tests and toy injections: trusts the given theta values.
    pub fn from_theta(r_grid: Vec<f64>, theta: Vec<f64>) -> Self {
        assert_eq!(r_grid.len(), theta.len());
        assert!(!r_grid.is_empty());
        let reliable_len = theta.len();
        let dummy = EstimateWithCi { value: f64::NAN, lo: f64::NAN, hi: f64::NAN, n: 0, method: CiMethod::Wilson };
        ScalingTable {
            r_grid,
            gap: vec![dummy; reliable_len],
            persistence: vec![dummy; reliable_len],
            lambda: vec![dummy; reliable_len],
            theta,
            reliable_len,
            max_iso_shift: 0.0,
            n_g_paths: 0,
            n_lambda_draws: 0,
        }
    }

    /// Valid argument range of `theta`.
    pub fn r_range(&self) -> (f64, f64) {
        (self.r_grid[0], self.r_grid[self.reliable_len - 1])
    }

    /// Value range of `theta` (its nondecreasing envelope).
    pub fn theta_range(&self) -> (f64, f64) {
        (self.theta[0], self.theta[self.reliable_len - 1])
    }

    /// Piecewise-linear interpolation of the isotonic theta.
    pub fn theta(&self, r: f64) -> Result<f64> {
        let (lo, hi) = self.r_range();
        if !(r >= lo && r <= hi) {
            return Err(Error::Range { query: r, lo, hi });
        }
        let grid = &self.r_grid[..self.reliable_len];
        let j = grid.partition_point(|&x| x < r).clamp(1, self.reliable_len - 1);
        let (r0, r1) = (grid[j - 1], grid[j]);
        let frac = if r1 > r0 { ((r - r0) / (r1 - r0)).clamp(0.0, 1.0) } else { 1.0 };
        Ok(self.theta[j - 1] * (1.0 - frac) + self.theta[j] * frac)
    }

    /// Left-continuous inverse of the interpolated theta: the smallest `r`
    /// with `theta(r) >= s`. Flat (tied) segments resolve to their left edge.
    pub fn theta_inverse(&self, s: f64) -> Result<f64> {
        let (tlo, thi) = self.theta_range();
        if !(s >= tlo && s <= thi) {
            return Err(Error::Range { query: s, lo: tlo, hi: thi });
        }
        let th = &self.theta[..self.reliable_len];
        let j = th.partition_point(|&t| t < s); // first index with theta >= s
        if j == 0 {
            return Ok(self.r_grid[0]);
        }
        if th[j] == s {
            return Ok(self.r_grid[j]);
        }
        let frac = (s - th[j - 1]) / (th[j] - th[j - 1]);
        Ok(self.r_grid[j - 1] + frac * (self.r_grid[j] - self.r_grid[j - 1]))
    }

    /// `t_R(s) = theta^{-1}(s + log R)`.
    pub fn t_r(&self, s: f64, window: f64) -> Result<f64> {
        self.theta_inverse(s + window.ln())
    }

    /// Index of the last grid point usable for fits: inside the reliable
    /// prefix and with the gap estimate above the deep-tail cutoff.
    pub fn last_fit_index(&self) -> usize {
        if self.n_g_paths == 0 {
            // injected table with no Monte Carlo provenance
            return self.reliable_len - 1;
        }
        let cutoff = 10.0 / self.n_g_paths as f64;
        let mut last = 0;
        for j in 0..self.reliable_len {
            if self.gap[j].value >= cutoff {
                last = j;
            }
        }
        last
    }
}

/// Rough scale of the largest gap in a window of length `window`: the gap
/// size whose theta value is `log window`. Read from the table when in range,
/// otherwise extrapolated along the fitted asymptote. Used to size simulation
/// horizons, not for inference.
pub fn predicted_largest_gap(table: &ScalingTable, kernel: &Kernel, window: f64) -> Result<f64> {
    let target = window.ln();
    let (tlo, thi) = table.theta_range();
    if target >= tlo && target <= thi {
        return table.theta_inverse(target);
    }
    if target < tlo {
        return Ok(table.r_range().0.max(1.0 / kernel.rice_intensity()));
    }
    let fit = fit_theta_asymptotics(table, kernel)?;
    let regressor = |r: f64| -> f64 {
        if fit.anomalous {
            match kernel.decay_class() {
                DecayClass::Poly(a) => r.powf(a) * r.ln(),
                DecayClass::SuperPoly => r,
            }
        } else {
            r
        }
    };
    if fit.zeta_hat <= 0.0 {
        return Err(Error::Param("non-positive fitted slope; cannot extrapolate horizon".into()));
    }
    // bisect intercept + zeta * x(r) = log window
    let mut lo = table.r_range().1;
    let mut hi = lo * 2.0;
    while fit.intercept + fit.zeta_hat * regressor(hi) < target {
        hi *= 2.0;
        if hi > 1e9 {
            return Err(Error::Param("horizon extrapolation diverged".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if fit.intercept + fit.zeta_hat * regressor(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Result of fitting the asymptotic law of theta.
#[derive(Debug, Clone, Copy)]
pub struct ThetaFit {
    pub zeta_hat: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub residual_trend: f64,
    pub n_points: usize,
    /// True when the regressor was `r^alpha log r` rather than `r`.
    pub anomalous: bool,
}

/// Least-squares fit of the theta asymptotics over the top half of the
/// usable r-range: slope of `theta` against `r` (super-polynomial decay or
/// `alpha > 1`) or against `r^alpha log r` (`alpha < 1`).
pub fn fit_theta_asymptotics(table: &ScalingTable, kernel: &Kernel) -> Result<ThetaFit> {
    let last = table.last_fit_index().min(table.reliable_len - 1);
    let r_hi = table.r_grid[last];
    let r_lo = 0.5 * r_hi;
    let anomalous = matches!(kernel.decay_class(), DecayClass::Poly(a) if a < 1.0);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for j in 0..=last {
        let r = table.r_grid[j];
        if r < r_lo || (anomalous && r <= 1.0) {
            continue;
        }
        let x = match kernel.decay_class() {
            DecayClass::Poly(a) if a < 1.0 => r.powf(a) * r.ln(),
            _ => r,
        };
        xs.push(x);
        ys.push(table.theta[j]);
    }
    if xs.len() < 5 {
        return Err(Error::InsufficientData { need: 5, got: xs.len() });
    }
    let fit = linear_fit(&xs, &ys)?;
    Ok(ThetaFit {
        zeta_hat: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        residual_trend: fit.residual_trend,
        n_points: fit.n,
        anomalous,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_table(theta_of_r: impl Fn(f64) -> f64, r_max: f64, n: usize) -> ScalingTable {
        let r_grid: Vec<f64> = (0..=n).map(|j| r_max * j as f64 / n as f64).collect();
        let theta = r_grid.iter().map(|&r| theta_of_r(r)).collect();
        ScalingTable::from_theta(r_grid, theta)
    }

    #[test]
    fn toy_linear_inversion() {
        let table = toy_table(|r| r, 10.0, 100);
        let big_r = 7.0f64;
        for s in [0.1, 0.5, 2.0] {
            let t = table.t_r(s, big_r).unwrap();
            assert!((t - (s + big_r.ln())).abs() < 1e-12);
        }
    }

    #[test]
    fn theta_inverse_is_right_inverse() {
        let table = toy_table(|r| 0.3 * r + 0.05 * r * r, 8.0, 64);
        for s in [0.1, 0.7, 1.9, 3.1] {
            let r = table.theta_inverse(s).unwrap();
            assert!((table.theta(r).unwrap() - s).abs() < 1e-10);
        }
    }

    #[test]
    fn flat_segment_inverts_to_left_edge() {
        let r_grid = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        let theta = vec![0.0, 1.0, 1.0, 1.0, 2.0];
        let table = ScalingTable::from_theta(r_grid, theta);
        assert_eq!(table.theta_inverse(1.0).unwrap(), 1.0);
        assert!((table.theta_inverse(1.5).unwrap() - 3.5).abs() < 1e-12);
    }

    #[test]
    fn range_errors_carry_interval() {
        let table = toy_table(|r| r, 5.0, 10);
        match table.theta(7.0) {
            Err(Error::Range { lo, hi, .. }) => {
                assert_eq!(lo, 0.0);
                assert_eq!(hi, 5.0);
            }
            other => panic!("expected range error, got {other:?}"),
        }
        assert!(table.theta_inverse(9.0).is_err());
    }

    #[test]
    fn fit_recovers_injected_linear_theta() {
        let table = toy_table(|r| 2.0 * r, 20.0, 200);
        let fit = fit_theta_asymptotics(&table, &Kernel::gaussian()).unwrap();
        assert!((fit.zeta_hat - 2.0).abs() < 1e-9);
        assert!((fit.r_squared - 1.0).abs() < 1e-9);
        assert!(!fit.anomalous);
    }

    #[test]
    fn fit_recovers_injected_anomalous_theta() {
        let table = toy_table(|r| 0.8 * r.sqrt() * r.max(1e-9).ln(), 20.0, 200);
        let kernel = Kernel::cauchy(0.5).unwrap();
        let fit = fit_theta_asymptotics(&table, &kernel).unwrap();
        assert!((fit.zeta_hat - 0.8).abs() < 1e-9, "zeta_hat = {}", fit.zeta_hat);
        assert!(fit.anomalous);
    }

    #[test]
    fn fit_needs_enough_points() {
        let table = toy_table(|r| r, 1.0, 3);
        assert!(matches!(
            fit_theta_asymptotics(&table, &Kernel::gaussian()),
            Err(Error::InsufficientData { .. })
        ));
    }
}
