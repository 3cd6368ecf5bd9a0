//! The rescaled gap point process over a window `[0, R]` and the statistical
//! battery run against its Poisson limit: factorial moments, Gumbel and
//! uniform goodness-of-fit for the largest gap, and first-order scaling.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exec::run_tasks;
use crate::gaussian::{build_spectrum, PathSampler, NEG_EIG_TOL};
use crate::kernels::{DecayClass, Kernel};
use crate::rng::stage;
use crate::scaling::{predicted_largest_gap, ScalingTable};
use crate::stats::{
    batch_means, falling_factorial_mean, ks_statistic, median_iqr, pearson_corr, EstimateWithCi,
};
use crate::zeros::{find_zeros, largest_gap, SeedInfo, ZeroSet};

/// One atom `(u, v)`: rescaled location `u = z_i / R` and rescaled gap size
/// `v = theta(z_{i+1} - z_i) - log R`. Gaps whose size exceeds the estimable
/// theta range carry `v = +inf` (sentinel), never silently dropped.
#[derive(Debug, Clone, Copy)]
pub struct Atom {
    pub u: f64,
    pub v: f64,
}

/// The atoms of the rescaled gap process in one window.
#[derive(Debug, Clone)]
pub struct AtomSet {
    pub window: f64,
    pub atoms: Vec<Atom>,
    pub sentinel_count: usize,
}

/// Largest-gap record of one run.
#[derive(Debug, Clone, Copy)]
pub struct ExtremeSample {
    pub l_r: f64,
    pub z_r: f64,
    pub window: f64,
    pub seed: SeedInfo,
}

/// Build the atom set from a zero set covering `[0, R]` plus horizon.
/// Every zero in the window needs a recorded successor.
pub fn build_psi(zs: &ZeroSet, window: f64, table: &ScalingTable) -> Result<AtomSet> {
    let mut gaps = Vec::new();
    for (i, &z) in zs.zeros.iter().enumerate() {
        if z < 0.0 || z > window {
            continue;
        }
        let next = *zs.zeros.get(i + 1).ok_or(Error::HorizonExhausted {
            last_zero: z,
            window,
        })?;
        gaps.push((z, next - z));
    }
    atoms_from_gaps(&gaps, window, table)
}

/// Atom set from `(left zero, gap length)` records with left endpoints in
/// `[0, R]`; lets one set of gap records be rescored under several tables.
pub fn atoms_from_gaps(gaps: &[(f64, f64)], window: f64, table: &ScalingTable) -> Result<AtomSet> {
    let log_r = window.ln();
    let (_, r_hi) = table.r_range();
    let mut atoms = Vec::with_capacity(gaps.len());
    let mut sentinel_count = 0usize;
    for &(z, gap) in gaps {
        let v = if gap > r_hi {
            sentinel_count += 1;
            f64::INFINITY
        } else {
            table.theta(gap)? - log_r
        };
        atoms.push(Atom { u: z / window, v });
    }
    Ok(AtomSet {
        window,
        atoms,
        sentinel_count,
    })
}

/// Number of atoms with `u` in the closed interval `i` and `v` in the
/// size window `a = (lo, hi)`, interpreted as `[lo, hi)` on the reals with
/// `hi = inf` additionally admitting the `+inf` sentinels.
pub fn count(set: &AtomSet, i: (f64, f64), a: (f64, f64)) -> u64 {
    set.atoms
        .iter()
        .filter(|atom| {
            if atom.u < i.0 || atom.u > i.1 {
                return false;
            }
            if atom.v.is_infinite() && atom.v > 0.0 {
                return a.1 == f64::INFINITY;
            }
            atom.v >= a.0 && atom.v < a.1
        })
        .count() as u64
}

/// Everything recorded from one window simulation.
#[derive(Debug, Clone)]
pub struct WindowRun {
    pub run_id: u64,
    pub atoms: AtomSet,
    pub extreme: ExtremeSample,
    /// Zeros with left endpoint in `[0, R]`.
    pub n_zeros: u64,
    /// Gap records `(left zero, length)` for optional dumps.
    pub gaps: Vec<(f64, f64)>,
}

/// Simulate `n_runs` independent windows `[0, R]` and collect the rescaled
/// gap process and the largest-gap record of each.
///
/// Paths extend over `[0, R + H]` with `H` ten times the predicted largest
/// gap; a run whose last window zero still lacks a successor is re-simulated
/// once from a fresh stream with the horizon doubled.
pub fn simulate_window_runs(
    kernel: &Kernel,
    table: &ScalingTable,
    window: f64,
    n_runs: u64,
    master_seed: u64,
    task_offset: u64,
    workers: usize,
    grid_factor: f64,
) -> Result<Vec<WindowRun>> {
    if !(window > 1.0) {
        return Err(Error::Param("window must exceed 1".into()));
    }
    let spacing = kernel.default_spacing(grid_factor);
    let horizon = 10.0 * predicted_largest_gap(table, kernel, window)?;
    let refine_tol = spacing * 1e-6;

    let build = |h: f64| -> Result<Arc<crate::gaussian::CirculantSpectrum>> {
        let n_grid = ((window + h) / spacing).ceil() as usize + 2;
        Ok(Arc::new(build_spectrum(kernel, n_grid, spacing, NEG_EIG_TOL)?))
    };
    let spec = build(horizon)?;

    let simulate = |spec: &Arc<crate::gaussian::CirculantSpectrum>,
                    seed_stage: u32,
                    run: u64|
     -> Result<WindowRun> {
        let mut sampler =
            PathSampler::new(spec.clone(), 0.0, master_seed, seed_stage, task_offset + run);
        let path = sampler.sample();
        let seed = path.seed;
        let zs = find_zeros(&path, refine_tol)?;
        let (l_r, z_r) = largest_gap(&zs, window)?;
        let atoms = build_psi(&zs, window, table)?;
        let gaps: Vec<(f64, f64)> = zs
            .zeros
            .windows(2)
            .filter(|w| w[0] >= 0.0 && w[0] <= window)
            .map(|w| (w[0], w[1] - w[0]))
            .collect();
        Ok(WindowRun {
            run_id: run,
            atoms,
            extreme: ExtremeSample { l_r, z_r, window, seed },
            n_zeros: gaps.len() as u64,
            gaps,
        })
    };

    let first_pass: Vec<Result<WindowRun>> =
        run_tasks(workers, n_runs, |run| simulate(&spec, stage::WINDOW_RUNS, run));

    let mut runs = Vec::with_capacity(n_runs as usize);
    let mut retry_spec: Option<Arc<crate::gaussian::CirculantSpectrum>> = None;
    for (run, outcome) in first_pass.into_iter().enumerate() {
        match outcome {
            Ok(r) => runs.push(r),
            Err(Error::HorizonExhausted { .. }) => {
                if retry_spec.is_none() {
                    retry_spec = Some(build(2.0 * horizon)?);
                }
                let spec2 = retry_spec.as_ref().unwrap();
                runs.push(simulate(spec2, stage::WINDOW_RETRY, run as u64)?);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(runs)
}

/// Largest-gap records only, for trend studies over many windows where
/// holding every run's atoms would be wasteful. Identical path laws,
/// horizons, and retry semantics as [`simulate_window_runs`].
pub fn simulate_window_extremes(
    kernel: &Kernel,
    table: &ScalingTable,
    window: f64,
    n_runs: u64,
    master_seed: u64,
    task_offset: u64,
    workers: usize,
    grid_factor: f64,
) -> Result<Vec<ExtremeSample>> {
    if !(window > 1.0) {
        return Err(Error::Param("window must exceed 1".into()));
    }
    let spacing = kernel.default_spacing(grid_factor);
    let horizon = 10.0 * predicted_largest_gap(table, kernel, window)?;
    let refine_tol = spacing * 1e-6;
    let build = |h: f64| -> Result<Arc<crate::gaussian::CirculantSpectrum>> {
        let n_grid = ((window + h) / spacing).ceil() as usize + 2;
        Ok(Arc::new(build_spectrum(kernel, n_grid, spacing, NEG_EIG_TOL)?))
    };
    let spec = build(horizon)?;
    let simulate = |spec: &Arc<crate::gaussian::CirculantSpectrum>,
                    seed_stage: u32,
                    run: u64|
     -> Result<ExtremeSample> {
        let mut sampler =
            PathSampler::new(spec.clone(), 0.0, master_seed, seed_stage, task_offset + run);
        let path = sampler.sample();
        let seed = path.seed;
        let zs = find_zeros(&path, refine_tol)?;
        let (l_r, z_r) = largest_gap(&zs, window)?;
        Ok(ExtremeSample { l_r, z_r, window, seed })
    };
    let first_pass: Vec<Result<ExtremeSample>> =
        run_tasks(workers, n_runs, |run| simulate(&spec, stage::WINDOW_RUNS, run));
    let mut out = Vec::with_capacity(n_runs as usize);
    let mut retry_spec: Option<Arc<crate::gaussian::CirculantSpectrum>> = None;
    for (run, outcome) in first_pass.into_iter().enumerate() {
        match outcome {
            Ok(e) => out.push(e),
            Err(Error::HorizonExhausted { .. }) => {
                if retry_spec.is_none() {
                    retry_spec = Some(build(2.0 * horizon)?);
                }
                let spec2 = retry_spec.as_ref().unwrap();
                out.push(simulate(spec2, stage::WINDOW_RETRY, run as u64)?);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct FactorialMomentResult {
    pub k: u32,
    pub m_hat: EstimateWithCi,
    pub poisson_target: f64,
}

/// Empirical k-th factorial moment of the counts `N(I x A)` across
/// independent runs, against the Poisson target `(|I| (e^{-a} - e^{-b}))^k`.
pub fn factorial_moment_test(
    runs: &[AtomSet],
    k: u32,
    i: (f64, f64),
    a: (f64, f64),
) -> Result<FactorialMomentResult> {
    if runs.len() < 100 {
        return Err(Error::InsufficientData {
            need: 100,
            got: runs.len(),
        });
    }
    if k == 0 || k > 3 {
        return Err(Error::Param(format!("factorial moment order must be 1..=3, got {k}")));
    }
    let counts: Vec<u64> = runs.iter().map(|set| count(set, i, a)).collect();
    let value = falling_factorial_mean(&counts, k);
    // batch means over run order
    let n_batches = 32.min(runs.len() / 4).max(2);
    let mut batch_vals = Vec::with_capacity(n_batches);
    for b in 0..n_batches {
        let slice: Vec<u64> = counts
            .iter()
            .copied()
            .skip(b)
            .step_by(n_batches)
            .collect();
        batch_vals.push(falling_factorial_mean(&slice, k));
    }
    let mut m_hat = batch_means(&batch_vals)?;
    m_hat.value = value;
    m_hat.lo = m_hat.lo.max(0.0);
    m_hat.n = runs.len() as u64;
    let width = (i.1 - i.0).clamp(0.0, 1.0);
    let e_hi = if a.1 == f64::INFINITY { 0.0 } else { (-a.1).exp() };
    let target = (width * ((-a.0).exp() - e_hi)).powi(k as i32);
    Ok(FactorialMomentResult {
        k,
        m_hat,
        poisson_target: target,
    })
}

/// Standard Gumbel CDF `exp(-e^{-x})`.
pub fn gumbel_cdf(x: f64) -> f64 {
    (-(-x).exp()).exp()
}

#[derive(Debug, Clone)]
pub struct GumbelUniformReport {
    pub ks_gumbel_d: f64,
    pub ks_gumbel_p: f64,
    pub ks_uniform_d: f64,
    pub ks_uniform_p: f64,
    /// Correlation between rescaled locations and rescaled sizes.
    pub corr_location_size: f64,
    pub n_used: usize,
    /// Runs with no zero in the window, excluded by convention.
    pub excluded_no_zeros: usize,
    /// Runs whose largest gap exceeds the theta table range, excluded
    /// (reported, never silently dropped).
    pub excluded_out_of_range: usize,
}

/// Goodness-of-fit of `(Z_R / R, theta(L_R) - log R)` against independent
/// uniform and Gumbel laws.
pub fn gumbel_uniform_tests(
    extremes: &[ExtremeSample],
    table: &ScalingTable,
) -> Result<GumbelUniformReport> {
    if extremes.len() < 200 {
        return Err(Error::InsufficientData {
            need: 200,
            got: extremes.len(),
        });
    }
    let window = extremes[0].window;
    if extremes.iter().any(|e| e.window != window) {
        return Err(Error::Param("extreme samples mix different window lengths".into()));
    }
    let log_r = window.ln();
    let (_, r_hi) = table.r_range();
    let mut xs = Vec::with_capacity(extremes.len());
    let mut us = Vec::with_capacity(extremes.len());
    let mut excluded_no_zeros = 0usize;
    let mut excluded_out_of_range = 0usize;
    for e in extremes {
        if e.l_r == 0.0 {
            excluded_no_zeros += 1;
            continue;
        }
        if e.l_r > r_hi {
            excluded_out_of_range += 1;
            continue;
        }
        xs.push(table.theta(e.l_r)? - log_r);
        us.push(e.z_r / e.window);
    }
    let corr = pearson_corr(&us, &xs);
    let mut xs_sorted = xs.clone();
    xs_sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut us_sorted = us.clone();
    us_sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let (dg, pg) = ks_statistic(&xs_sorted, gumbel_cdf)?;
    let (du, pu) = ks_statistic(&us_sorted, |x| x.clamp(0.0, 1.0))?;
    Ok(GumbelUniformReport {
        ks_gumbel_d: dg,
        ks_gumbel_p: pg,
        ks_uniform_d: du,
        ks_uniform_p: pu,
        corr_location_size: corr,
        n_used: xs.len(),
        excluded_no_zeros,
        excluded_out_of_range,
    })
}

/// One row of the first-order scaling check at a fixed window length.
#[derive(Debug, Clone, Copy)]
pub struct ScalingLawRow {
    pub window: f64,
    /// Median of the normalized largest-gap statistic.
    pub median_stat: f64,
    pub iqr: f64,
    /// Predicted limit of the statistic.
    pub target: f64,
    pub n_runs: usize,
}

/// Normalized largest-gap statistic per run and its predicted limit:
/// `L_R / log R -> 1/zeta` for super-polynomial decay and `alpha > 1`;
/// `L_R (log log R / log R)^{1/alpha} -> (alpha/zeta)^{1/alpha}` for
/// `alpha < 1`. Falls back to a fitted `zeta_hat` when no closed form exists.
pub fn scaling_law_check(
    groups: &[(f64, Vec<ExtremeSample>)],
    kernel: &Kernel,
    zeta_fallback: Option<f64>,
) -> Result<Vec<ScalingLawRow>> {
    if groups.len() < 2 {
        return Err(Error::InsufficientData {
            need: 2,
            got: groups.len(),
        });
    }
    let zeta = match kernel.zeta_predicted()? {
        Some(z) => z,
        None => zeta_fallback.ok_or_else(|| {
            Error::Param("no closed-form zeta; pass the fitted value".into())
        })?,
    };
    let mut rows = Vec::with_capacity(groups.len());
    for (window, extremes) in groups {
        if extremes.len() < 100 {
            return Err(Error::InsufficientData {
                need: 100,
                got: extremes.len(),
            });
        }
        let log_r = window.ln();
        let (stats, target): (Vec<f64>, f64) = match kernel.decay_class() {
            DecayClass::Poly(alpha) if alpha < 1.0 => {
                let norm = (log_r.ln() / log_r).powf(1.0 / alpha);
                (
                    extremes.iter().map(|e| e.l_r * norm).collect(),
                    (alpha / zeta).powf(1.0 / alpha),
                )
            }
            _ => (
                extremes.iter().map(|e| e.l_r / log_r).collect(),
                1.0 / zeta,
            ),
        };
        let (median_stat, iqr) = median_iqr(&stats);
        rows.push(ScalingLawRow {
            window: *window,
            median_stat,
            iqr,
            target,
            n_runs: extremes.len(),
        });
    }
    rows.sort_by(|a, b| a.window.partial_cmp(&b.window).unwrap());
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_theta_table() -> ScalingTable {
        // theta(r) = r on [0, 10]
        let r_grid: Vec<f64> = (0..=100).map(|j| 0.1 * j as f64).collect();
        let theta = r_grid.clone();
        ScalingTable::from_theta(r_grid, theta)
    }

    fn zeroset(zeros: Vec<f64>) -> ZeroSet {
        ZeroSet {
            domain: (0.0, zeros.last().copied().unwrap_or(1.0) + 1.0),
            zeros,
            refine_tol: 1e-9,
        }
    }

    #[test]
    fn build_psi_toy_example() {
        let table = toy_theta_table();
        let zs = zeroset(vec![0.2, 1.0, 4.0, 4.5, 6.0]);
        let set = build_psi(&zs, 4.0, &table).unwrap();
        let ln4 = 4.0f64.ln();
        assert_eq!(set.atoms.len(), 3);
        assert!((set.atoms[0].u - 0.05).abs() < 1e-12);
        assert!((set.atoms[0].v - (0.8 - ln4)).abs() < 1e-9);
        assert!((set.atoms[1].u - 0.25).abs() < 1e-12);
        assert!((set.atoms[1].v - (3.0 - ln4)).abs() < 1e-9);
        assert!((set.atoms[2].u - 1.0).abs() < 1e-12);
        assert!((set.atoms[2].v - (0.5 - ln4)).abs() < 1e-9);
        assert_eq!(set.sentinel_count, 0);
    }

    #[test]
    fn build_psi_empty_and_sentinel() {
        let table = toy_theta_table();
        let empty = zeroset(vec![5.0, 6.0]);
        let set = build_psi(&empty, 4.0, &table).unwrap();
        assert!(set.atoms.is_empty());

        // gap of 11 exceeds the theta range [0, 10]
        let with_giant = zeroset(vec![1.0, 12.0, 12.5]);
        let set = build_psi(&with_giant, 4.0, &table).unwrap();
        assert_eq!(set.sentinel_count, 1);
        assert!(set.atoms[0].v.is_infinite());
    }

    #[test]
    fn count_examples() {
        let table = toy_theta_table();
        let zs = zeroset(vec![0.2, 1.0, 4.0, 4.5, 6.0]);
        let set = build_psi(&zs, 4.0, &table).unwrap();
        assert_eq!(count(&set, (0.0, 1.0), (f64::NEG_INFINITY, f64::INFINITY)), 3);
        assert_eq!(count(&set, (0.0, 1.0), (0.5, 0.5)), 0);
        // atoms with v >= 0 are gaps >= log 4; only the 3.0 gap qualifies
        assert_eq!(count(&set, (0.0, 0.5), (0.0, f64::INFINITY)), 1);
    }

    #[test]
    fn count_additive_over_disjoint_size_windows() {
        let table = toy_theta_table();
        let zs = zeroset(vec![0.2, 1.0, 4.0, 4.5, 6.0, 15.0, 15.5]);
        let set = build_psi(&zs, 4.0, &table).unwrap();
        let all = (0.0, 1.0);
        let total = count(&set, all, (f64::NEG_INFINITY, f64::INFINITY));
        let a = count(&set, all, (f64::NEG_INFINITY, 0.0));
        let b = count(&set, all, (0.0, 1.5));
        let c = count(&set, all, (1.5, f64::INFINITY));
        assert_eq!(a + b + c, total);
    }

    #[test]
    fn max_atom_matches_largest_gap() {
        let table = toy_theta_table();
        let zs = zeroset(vec![0.2, 1.0, 4.0, 4.5, 6.0]);
        let window = 4.0;
        let set = build_psi(&zs, window, &table).unwrap();
        let (l_r, _z_r) = crate::zeros::largest_gap(&zs, window).unwrap();
        let max_v = set.atoms.iter().map(|a| a.v).fold(f64::NEG_INFINITY, f64::max);
        let expect = table.theta(l_r).unwrap() - window.ln();
        assert!((max_v - expect).abs() < 1e-9);
    }

    #[test]
    fn factorial_moments_of_injected_poisson() {
        // Counts injected from a seeded Poisson(0.7) sampler via inversion.
        use rand::Rng;
        let mut rng = crate::rng::stream(0, 99, 0);
        let mu = 0.7f64;
        let n = 4000;
        let mut runs = Vec::with_capacity(n);
        for _ in 0..n {
            let u: f64 = rng.gen();
            let mut cdf = (-mu).exp();
            let mut pmf = cdf;
            let mut k = 0u64;
            while u > cdf && k < 100 {
                k += 1;
                pmf *= mu / k as f64;
                cdf += pmf;
            }
            let atoms = (0..k).map(|i| Atom { u: (i as f64 + 0.5) / (k as f64 + 1.0), v: 0.5 }).collect();
            runs.push(AtomSet { window: 10.0, atoms, sentinel_count: 0 });
        }
        let r1 = factorial_moment_test(&runs, 1, (0.0, 1.0), (0.0, f64::INFINITY)).unwrap();
        assert!(r1.m_hat.covers(mu), "{:?}", r1);
        let r2 = factorial_moment_test(&runs, 2, (0.0, 1.0), (0.0, f64::INFINITY)).unwrap();
        assert!(r2.m_hat.covers(mu * mu), "{:?}", r2);
        assert!((r2.m_hat.value - 0.49).abs() < 0.08);
        // target arithmetic: a = 0, I = [0,1] -> e^0 = 1
        assert!((r1.poisson_target - 1.0).abs() < 1e-15);
    }

    #[test]
    fn factorial_moment_zero_counts() {
        let runs: Vec<AtomSet> = (0..200)
            .map(|_| AtomSet { window: 5.0, atoms: vec![], sentinel_count: 0 })
            .collect();
        for k in 1..=3 {
            let r = factorial_moment_test(&runs, k, (0.0, 1.0), (0.0, f64::INFINITY)).unwrap();
            assert_eq!(r.m_hat.value, 0.0);
        }
        assert!(factorial_moment_test(&runs[..50], 1, (0.0, 1.0), (0.0, f64::INFINITY)).is_err());
    }

    #[test]
    fn gumbel_cdf_value() {
        assert!((gumbel_cdf(0.0) - (-1.0f64).exp()).abs() < 1e-15);
        assert!((gumbel_cdf(0.0) - 0.367_879).abs() < 1e-6);
    }

    #[test]
    fn gumbel_uniform_on_injected_exact_samples() {
        // Inverse-CDF construction: x = -log(-log u) is exactly Gumbel.
        use rand::Rng;
        let mut rng = crate::rng::stream(13, 98, 0);
        let table = toy_theta_table();
        let window = 20.0f64; // log R ~ 3.0
        let n = 400;
        let mut extremes = Vec::with_capacity(n);
        for _ in 0..n {
            let u: f64 = rng.gen();
            let x = -(-(u.ln())).ln(); // Gumbel
            // invert the toy theta: L = x + log R
            let l = (x + window.ln()).clamp(0.05, 9.9);
            let loc: f64 = rng.gen::<f64>() * window;
            extremes.push(ExtremeSample {
                l_r: l,
                z_r: loc,
                window,
                seed: SeedInfo { master_seed: 0, stage: 0, task: 0 },
            });
        }
        let report = gumbel_uniform_tests(&extremes, &table).unwrap();
        assert!(report.ks_gumbel_p > 0.01, "{report:?}");
        assert!(report.ks_uniform_p > 0.01, "{report:?}");
        assert!(report.corr_location_size.abs() < 0.15, "{report:?}");
        assert_eq!(report.excluded_no_zeros, 0);
    }

    #[test]
    fn gumbel_tests_exclude_empty_runs() {
        let table = toy_theta_table();
        let mut extremes = vec![
            ExtremeSample {
                l_r: 0.0,
                z_r: 0.0,
                window: 20.0,
                seed: SeedInfo { master_seed: 0, stage: 0, task: 0 }
            };
            250
        ];
        for (i, e) in extremes.iter_mut().enumerate().skip(10) {
            e.l_r = 2.0 + (i % 50) as f64 * 0.1;
            e.z_r = (i % 97) as f64 / 97.0 * 20.0;
        }
        let report = gumbel_uniform_tests(&extremes, &table).unwrap();
        assert_eq!(report.excluded_no_zeros, 10);
        assert_eq!(report.n_used, 240);
    }

    #[test]
    fn scaling_law_injected_exact_ratio() {
        // L_R = (1/zeta) log R exactly -> ratio identically 1/zeta... the
        // normalized statistic L_R / log R equals the target for every R.
        let kernel = Kernel::gaussian();
        let zeta_hat = 0.4;
        let seed = SeedInfo { master_seed: 0, stage: 0, task: 0 };
        let groups: Vec<(f64, Vec<ExtremeSample>)> = [500.0, 2000.0]
            .iter()
            .map(|&window: &f64| {
                let l = window.ln() / zeta_hat;
                (
                    window,
                    (0..150)
                        .map(|_| ExtremeSample { l_r: l, z_r: 0.0, window, seed })
                        .collect(),
                )
            })
            .collect();
        let rows = scaling_law_check(&groups, &kernel, Some(zeta_hat)).unwrap();
        for row in rows {
            assert!((row.median_stat - row.target).abs() < 1e-12);
            assert_eq!(row.iqr, 0.0);
        }
    }

    #[test]
    fn scaling_law_anomalous_target_value() {
        let kernel = Kernel::cauchy(0.5).unwrap();
        let zeta = kernel.zeta_predicted().unwrap().unwrap();
        let target = (0.5f64 / zeta).powf(2.0);
        assert!((target - 0.392_700).abs() < 1e-6);
        let seed = SeedInfo { master_seed: 0, stage: 0, task: 0 };
        let groups: Vec<(f64, Vec<ExtremeSample>)> = [500.0, 2000.0]
            .iter()
            .map(|&window: &f64| {
                (
                    window,
                    (0..120)
                        .map(|_| ExtremeSample { l_r: 5.0, z_r: 1.0, window, seed })
                        .collect(),
                )
            })
            .collect();
        let rows = scaling_law_check(&groups, &kernel, None).unwrap();
        assert!((rows[0].target - target).abs() < 1e-12);
    }
}
