//! Empirical splitting and clustering coefficients of gap events.
//!
//! Both coefficients are suprema over infinite interval families; the
//! estimators here probe fixed finite families on shared paths and report
//! lower bounds, with common-random-number variance cancellation in the
//! ratios.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exec::{chunk_tasks, run_tasks, task_len};
use crate::gaussian::{build_spectrum, PathSampler, NEG_EIG_TOL};
use crate::kernels::Kernel;
use crate::rng::stage;
use crate::stats::{wilson_interval, CiMethod, EstimateWithCi, Z95};
use crate::zeros::{find_zeros, ZeroSet};

/// `k >= 2` disjoint closed intervals, each of length at most `r`, pairwise
/// separated by at least `s`; validated on construction.
#[derive(Debug, Clone)]
pub struct IntervalConfig {
    intervals: Vec<(f64, f64)>,
    pub max_len: f64,
    pub min_sep: f64,
}

impl IntervalConfig {
    pub fn new(mut intervals: Vec<(f64, f64)>, r: f64, s: f64) -> Result<Self> {
        if intervals.len() < 2 {
            return Err(Error::Intervals(format!(
                "need k >= 2 intervals, got {}",
                intervals.len()
            )));
        }
        intervals.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for &(a, b) in &intervals {
            if !(b > a) {
                return Err(Error::Intervals(format!("degenerate interval [{a}, {b}]")));
            }
            if b - a > r + 1e-12 {
                return Err(Error::Intervals(format!(
                    "interval [{a}, {b}] longer than r = {r}"
                )));
            }
        }
        for w in intervals.windows(2) {
            let gap = w[1].0 - w[0].1;
            if gap < s - 1e-12 {
                return Err(Error::Intervals(format!(
                    "intervals {:?} and {:?} separated by {gap} < s = {s}",
                    w[0], w[1]
                )));
            }
        }
        Ok(IntervalConfig {
            intervals,
            max_len: r,
            min_sep: s,
        })
    }

    /// Evenly spaced family: `k` intervals of length `r` separated by `s`.
    pub fn evenly_spaced(k: usize, r: f64, s: f64) -> Result<Self> {
        let intervals = (0..k)
            .map(|i| {
                let lo = i as f64 * (r + s);
                (lo, lo + r)
            })
            .collect();
        IntervalConfig::new(intervals, r, s)
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn k(&self) -> usize {
        self.intervals.len()
    }

    pub fn hull(&self) -> (f64, f64) {
        (self.intervals[0].0, self.intervals.last().unwrap().1)
    }
}

/// The joint/product ratio of gap-event probabilities with a delta-method CI.
#[derive(Debug, Clone)]
pub struct RatioEstimate {
    pub ratio: f64,
    pub lo: f64,
    pub hi: f64,
    pub joint_count: u64,
    pub marginal_counts: Vec<u64>,
    pub n_paths: u64,
}

impl RatioEstimate {
    /// `|ratio - 1|` with the interval it inherits from the ratio CI.
    pub fn abs_deviation(&self) -> (f64, f64, f64) {
        let dev = (self.ratio - 1.0).abs();
        let (lo, hi) = if self.lo > 1.0 {
            (self.lo - 1.0, self.hi - 1.0)
        } else if self.hi < 1.0 {
            (1.0 - self.hi, 1.0 - self.lo)
        } else {
            (0.0, (self.hi - 1.0).max(1.0 - self.lo))
        };
        (dev, lo, hi)
    }
}

fn no_zero_in(zs: &ZeroSet, interval: (f64, f64)) -> bool {
    let idx = zs.zeros.partition_point(|&z| z < interval.0);
    match zs.zeros.get(idx) {
        Some(&z) => z > interval.1,
        None => true,
    }
}

/// Pattern counts of the per-interval gap indicators over `n` shared paths:
/// `counts[mask]` with bit `i` set when interval `i` had no zero.
fn pattern_counts(
    kernel: &Kernel,
    config: &IntervalConfig,
    n_paths: u64,
    master_seed: u64,
    seed_stage: u32,
    workers: usize,
    grid_factor: f64,
) -> Result<Vec<u64>> {
    let k = config.k();
    if k > 16 {
        return Err(Error::Intervals("more than 16 intervals".into()));
    }
    let spacing = kernel.default_spacing(grid_factor);
    let (hull_lo, hull_hi) = config.hull();
    let n_grid = ((hull_hi - hull_lo) / spacing).ceil() as usize + 2;
    let spec = Arc::new(build_spectrum(kernel, n_grid, spacing, NEG_EIG_TOL)?);
    let refine_tol = spacing * 1e-6;
    let intervals = config.intervals().to_vec();

    let (n_tasks, _) = chunk_tasks(n_paths);
    let per_task: Vec<Vec<u64>> = run_tasks(workers, n_tasks, |t| {
        let mut sampler = PathSampler::new(spec.clone(), hull_lo, master_seed, seed_stage, t);
        let mut counts = vec![0u64; 1 << k];
        for _ in 0..task_len(t, n_paths) {
            let path = sampler.sample();
            let zs = find_zeros(&path, refine_tol).expect("refine_tol in (0, spacing)");
            let mut mask = 0usize;
            for (i, &iv) in intervals.iter().enumerate() {
                if no_zero_in(&zs, iv) {
                    mask |= 1 << i;
                }
            }
            counts[mask] += 1;
        }
        counts
    });
    let mut counts = vec![0u64; 1 << k];
    for task in &per_task {
        for (c, t) in counts.iter_mut().zip(task) {
            *c += t;
        }
    }
    Ok(counts)
}

/// Ratio estimator from pattern counts; exact algebraic identity
/// `ratio = joint * n^{k-1} / prod(marginals)`, CI by the delta method on
/// `log ratio` using the empirical covariance of the indicators.
pub fn ratio_from_pattern_counts(counts: &[u64], k: usize) -> Result<RatioEstimate> {
    assert_eq!(counts.len(), 1 << k);
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return Err(Error::InsufficientData { need: 1, got: 0 });
    }
    let full = (1usize << k) - 1;
    let joint = counts[full];
    let mut marginals = vec![0u64; k];
    for (mask, &c) in counts.iter().enumerate() {
        for (i, m) in marginals.iter_mut().enumerate() {
            if mask & (1 << i) != 0 {
                *m += c;
            }
        }
    }
    for (i, &m) in marginals.iter().enumerate() {
        if m == 0 {
            return Err(Error::UndefinedRatio { interval: i });
        }
    }
    let nf = n as f64;
    let p_joint = joint as f64 / nf;
    let p: Vec<f64> = marginals.iter().map(|&m| m as f64 / nf).collect();
    let prod: f64 = p.iter().product();
    let ratio = p_joint / prod;
    if joint == 0 {
        // one-sided: bound the joint probability by its Wilson upper limit
        let hi = wilson_interval(0, n)?.hi / prod;
        return Ok(RatioEstimate {
            ratio: 0.0,
            lo: 0.0,
            hi,
            joint_count: joint,
            marginal_counts: marginals,
            n_paths: n,
        });
    }
    // influence of one path on log ratio: J/pJ - sum_i M_i/p_i
    let shift = 1.0 - k as f64; // its mean
    let mut var = 0.0;
    for (mask, &c) in counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let mut psi = if mask == full { 1.0 / p_joint } else { 0.0 };
        for (i, pi) in p.iter().enumerate() {
            if mask & (1 << i) != 0 {
                psi -= 1.0 / pi;
            }
        }
        var += (c as f64 / nf) * (psi - shift) * (psi - shift);
    }
    let se_log = (var / nf).sqrt();
    Ok(RatioEstimate {
        ratio,
        lo: ratio * (-Z95 * se_log).exp(),
        hi: ratio * (Z95 * se_log).exp(),
        joint_count: joint,
        marginal_counts: marginals,
        n_paths: n,
    })
}

/// Monte Carlo estimate of `P[joint gap events] / prod P[gap event]` for one
/// interval configuration, on shared paths.
pub fn splitting_ratio(
    kernel: &Kernel,
    config: &IntervalConfig,
    n_paths: u64,
    master_seed: u64,
    workers: usize,
    grid_factor: f64,
) -> Result<RatioEstimate> {
    let counts = pattern_counts(
        kernel,
        config,
        n_paths,
        master_seed,
        stage::SPLITTING,
        workers,
        grid_factor,
    )?;
    ratio_from_pattern_counts(&counts, config.k())
}

/// One row of the separation scan.
#[derive(Debug, Clone)]
pub struct DecayRow {
    pub s: f64,
    pub estimate: RatioEstimate,
    /// `sup_{x >= s} |K(x)|`, the comparison curve.
    pub kbar: f64,
}

/// `|ratio - 1|` against increasing separation `s`, side by side with the
/// covariance tail for qualitative comparison.
///
/// All scan rows are evaluated on one shared path family covering the widest
/// configuration: heavy-tailed kernels force large circulant paddings even
/// for short grids, so reusing paths across rows is close to free, and the
/// common random numbers tighten the row-to-row comparison.
pub fn splitting_decay_scan(
    kernel: &Kernel,
    r: f64,
    s_list: &[f64],
    k: usize,
    n_paths: u64,
    master_seed: u64,
    workers: usize,
    grid_factor: f64,
) -> Result<Vec<DecayRow>> {
    if s_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Param("s_list must be strictly increasing".into()));
    }
    let configs: Vec<IntervalConfig> = s_list
        .iter()
        .map(|&s| IntervalConfig::evenly_spaced(k, r, s))
        .collect::<Result<Vec<_>>>()?;
    if configs.is_empty() {
        return Err(Error::Param("empty s_list".into()));
    }
    if k > 16 {
        return Err(Error::Intervals("more than 16 intervals".into()));
    }
    let spacing = kernel.default_spacing(grid_factor);
    let hull_hi = configs.last().unwrap().hull().1;
    let n_grid = (hull_hi / spacing).ceil() as usize + 2;
    let spec = Arc::new(build_spectrum(kernel, n_grid, spacing, NEG_EIG_TOL)?);
    let refine_tol = spacing * 1e-6;
    let interval_sets: Vec<Vec<(f64, f64)>> =
        configs.iter().map(|c| c.intervals().to_vec()).collect();

    let (n_tasks, _) = chunk_tasks(n_paths);
    let per_task: Vec<Vec<Vec<u64>>> = run_tasks(workers, n_tasks, |t| {
        let mut sampler = PathSampler::new(spec.clone(), 0.0, master_seed, stage::SPLITTING, t);
        let mut counts = vec![vec![0u64; 1 << k]; interval_sets.len()];
        for _ in 0..task_len(t, n_paths) {
            let path = sampler.sample();
            let zs = find_zeros(&path, refine_tol).expect("refine_tol in (0, spacing)");
            for (row, set) in interval_sets.iter().enumerate() {
                let mut mask = 0usize;
                for (i, &iv) in set.iter().enumerate() {
                    if no_zero_in(&zs, iv) {
                        mask |= 1 << i;
                    }
                }
                counts[row][mask] += 1;
            }
        }
        counts
    });

    let mut rows = Vec::with_capacity(s_list.len());
    for (row, &s) in s_list.iter().enumerate() {
        let mut counts = vec![0u64; 1 << k];
        for task in &per_task {
            for (c, t) in counts.iter_mut().zip(&task[row]) {
                *c += t;
            }
        }
        rows.push(DecayRow {
            s,
            estimate: ratio_from_pattern_counts(&counts, k)?,
            kbar: kernel.kbar(s),
        });
    }
    Ok(rows)
}

/// One probe pair of the clustering family.
#[derive(Debug, Clone)]
pub struct ClusterProbe {
    pub id: &'static str,
    pub first: (f64, f64),
    pub second: (f64, f64),
    pub joint: EstimateWithCi,
}

/// Clustering report at one interval length `r`.
#[derive(Debug, Clone)]
pub struct ClusteringReport {
    pub r: f64,
    pub probes: Vec<ClusterProbe>,
    /// Max of the probe joint probabilities: a lower bound on the supremal
    /// clustering coefficient.
    pub phi_hat: EstimateWithCi,
    pub phi_probe_id: &'static str,
    pub g_r: EstimateWithCi,
    pub g_2r: EstimateWithCi,
    /// `log phi_hat / log G_hat(r)` with a delta-method CI.
    pub kappa: EstimateWithCi,
}

/// Estimate the joint gap probability for a fixed probe family: the touching
/// pair `([0,r], [r,2r])` and separated pairs at distances `r/2`, `r`, `2r`;
/// all events counted on the same paths over `[0, 4r]`.
pub fn clustering_estimate(
    kernel: &Kernel,
    r: f64,
    n_paths: u64,
    master_seed: u64,
    workers: usize,
    grid_factor: f64,
) -> Result<ClusteringReport> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::Param("r must be finite and nonnegative".into()));
    }
    if n_paths < 10_000 {
        return Err(Error::InsufficientData { need: 10_000, got: n_paths as usize });
    }
    let probes: [(&'static str, (f64, f64), (f64, f64)); 4] = [
        ("touching", (0.0, r), (r, 2.0 * r)),
        ("sep_half_r", (0.0, r), (1.5 * r, 2.5 * r)),
        ("sep_r", (0.0, r), (2.0 * r, 3.0 * r)),
        ("sep_2r", (0.0, r), (3.0 * r, 4.0 * r)),
    ];
    let spacing = kernel.default_spacing(grid_factor);
    let n_grid = ((4.0 * r / spacing).ceil() as usize + 2).max(2);
    let spec = Arc::new(build_spectrum(kernel, n_grid, spacing, NEG_EIG_TOL)?);
    let refine_tol = spacing * 1e-6;

    // counts: per probe joint, G(r), G(2r), and probe & G(r) co-occurrence
    #[derive(Clone, Default)]
    struct Acc {
        probe: [u64; 4],
        probe_and_gr: [u64; 4],
        g_r: u64,
        g_2r: u64,
        n: u64,
    }
    let (n_tasks, _) = chunk_tasks(n_paths);
    let per_task: Vec<Acc> = run_tasks(workers, n_tasks, |t| {
        let mut sampler = PathSampler::new(spec.clone(), 0.0, master_seed, stage::CLUSTERING, t);
        let mut acc = Acc::default();
        for _ in 0..task_len(t, n_paths) {
            let path = sampler.sample();
            let zs = find_zeros(&path, refine_tol).expect("refine_tol in (0, spacing)");
            let gr = no_zero_in(&zs, (0.0, r));
            let g2r = gr && no_zero_in(&zs, (r, 2.0 * r));
            acc.g_r += gr as u64;
            acc.g_2r += g2r as u64;
            for (i, &(_, a, b)) in probes.iter().enumerate() {
                let hit = no_zero_in(&zs, a) && no_zero_in(&zs, b);
                acc.probe[i] += hit as u64;
                acc.probe_and_gr[i] += (hit && gr) as u64;
            }
            acc.n += 1;
        }
        acc
    });
    let mut total = Acc::default();
    for a in &per_task {
        for i in 0..4 {
            total.probe[i] += a.probe[i];
            total.probe_and_gr[i] += a.probe_and_gr[i];
        }
        total.g_r += a.g_r;
        total.g_2r += a.g_2r;
        total.n += a.n;
    }

    let n = total.n;
    let probe_cis: Vec<EstimateWithCi> = total
        .probe
        .iter()
        .map(|&c| wilson_interval(c, n))
        .collect::<Result<Vec<_>>>()?;
    let g_r = wilson_interval(total.g_r, n)?;
    let g_2r = wilson_interval(total.g_2r, n)?;
    let best = (0..4)
        .max_by(|&a, &b| total.probe[a].cmp(&total.probe[b]))
        .unwrap();
    let phi_hat = probe_cis[best];

    // kappa = log phi / log G(r) by the delta method with the empirical
    // covariance of the two indicators (phi's probe and the G(r) event).
    let kappa = {
        let p_phi = phi_hat.value;
        let p_g = g_r.value;
        if p_phi <= 0.0 || p_g <= 0.0 || p_g >= 1.0 {
            EstimateWithCi { value: f64::NAN, lo: f64::NAN, hi: f64::NAN, n, method: CiMethod::Delta }
        } else {
            let value = p_phi.ln() / p_g.ln();
            let nf = n as f64;
            let var_phi = p_phi * (1.0 - p_phi) / nf;
            let var_g = p_g * (1.0 - p_g) / nf;
            let p_both = total.probe_and_gr[best] as f64 / nf;
            let cov = (p_both - p_phi * p_g) / nf;
            let d_phi = 1.0 / (p_phi * p_g.ln());
            let d_g = -p_phi.ln() / (p_g * p_g.ln() * p_g.ln());
            let var = d_phi * d_phi * var_phi + d_g * d_g * var_g + 2.0 * d_phi * d_g * cov;
            let half = Z95 * var.max(0.0).sqrt();
            EstimateWithCi { value, lo: value - half, hi: value + half, n, method: CiMethod::Delta }
        }
    };

    Ok(ClusteringReport {
        r,
        probes: probes
            .iter()
            .zip(probe_cis)
            .map(|(&(id, a, b), ci)| ClusterProbe { id, first: a, second: b, joint: ci })
            .collect(),
        phi_hat,
        phi_probe_id: probes[best].0,
        g_r,
        g_2r,
        kappa,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_config_validation() {
        assert!(IntervalConfig::new(vec![(0.0, 1.0)], 1.0, 1.0).is_err());
        assert!(IntervalConfig::new(vec![(0.0, 1.0), (1.5, 2.5)], 1.0, 1.0).is_err());
        assert!(IntervalConfig::new(vec![(0.0, 1.0), (0.5, 1.5)], 1.0, 0.1).is_err());
        assert!(IntervalConfig::new(vec![(0.0, 3.0), (4.0, 5.0)], 2.0, 1.0).is_err());
        assert!(IntervalConfig::new(vec![(0.0, 1.0), (1.0, 1.0)], 1.0, 0.0).is_err());
        let ok = IntervalConfig::evenly_spaced(3, 2.0, 5.0).unwrap();
        assert_eq!(ok.k(), 3);
        assert_eq!(ok.hull(), (0.0, 16.0));
    }

    #[test]
    fn ratio_identity_on_synthetic_counts() {
        // two indicators: counts by mask (00, 01, 10, 11)
        let counts = vec![40u64, 25, 20, 15];
        let est = ratio_from_pattern_counts(&counts, 2).unwrap();
        let n = 100.0;
        let joint = 15.0 / n;
        let m1 = (25.0 + 15.0) / n;
        let m2 = (20.0 + 15.0) / n;
        assert!((est.ratio - joint / (m1 * m2)).abs() < 1e-12);
        assert_eq!(est.joint_count, 15);
        assert_eq!(est.marginal_counts, vec![40, 35]);
    }

    #[test]
    fn ratio_on_independent_indicators_is_one() {
        // exact product counts: p1 = 0.5, p2 = 0.2, independent
        // masks: 00: 40, 01: 40, 10: 10, 11: 10  (bit0 = first, bit1 = second)
        let counts = vec![400u64, 400, 100, 100];
        let est = ratio_from_pattern_counts(&counts, 2).unwrap();
        assert!((est.ratio - 1.0).abs() < 1e-12);
        assert!(est.lo <= 1.0 && 1.0 <= est.hi);
    }

    #[test]
    fn ratio_errors() {
        // second indicator never fires -> undefined ratio
        let counts = vec![50u64, 50, 0, 0];
        assert!(matches!(
            ratio_from_pattern_counts(&counts, 2),
            Err(Error::UndefinedRatio { interval: 1 })
        ));
        // joint never fires -> one-sided interval
        let counts = vec![50u64, 25, 25, 0];
        let est = ratio_from_pattern_counts(&counts, 2).unwrap();
        assert_eq!(est.ratio, 0.0);
        assert!(est.hi > 0.0);
    }

    #[test]
    fn abs_deviation_cases() {
        let mk = |ratio: f64, lo: f64, hi: f64| RatioEstimate {
            ratio,
            lo,
            hi,
            joint_count: 1,
            marginal_counts: vec![1, 1],
            n_paths: 1,
        };
        let (d, lo, hi) = mk(1.05, 1.02, 1.08).abs_deviation();
        assert!((d - 0.05).abs() < 1e-12 && lo > 0.0 && hi > lo);
        let (d, lo, _) = mk(0.9, 0.85, 0.95).abs_deviation();
        assert!((d - 0.1).abs() < 1e-12 && (lo - 0.05).abs() < 1e-12);
        let (_, lo, hi) = mk(1.0, 0.98, 1.03).abs_deviation();
        assert_eq!(lo, 0.0);
        assert!((hi - 0.03).abs() < 1e-12);
    }

    #[test]
    fn no_zero_lookup() {
        let zs = ZeroSet { zeros: vec![1.0, 2.5, 7.0], domain: (0.0, 10.0), refine_tol: 1e-9 };
        assert!(no_zero_in(&zs, (3.0, 6.0)));
        assert!(!no_zero_in(&zs, (2.0, 3.0)));
        assert!(no_zero_in(&zs, (7.5, 9.0)));
        assert!(!no_zero_in(&zs, (0.0, 1.0)));
    }
}
