//! Zero-set extraction from sampled paths, gap records, and the
//! largest-gap functionals over a window.

use crate::error::{Error, Result};

/// Provenance of the random draws behind one path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedInfo {
    pub master_seed: u64,
    pub stage: u32,
    pub task: u64,
}

/// Values of one realization on a uniform grid `origin + i * spacing`.
#[derive(Debug, Clone)]
pub struct PathSample {
    pub origin: f64,
    pub spacing: f64,
    pub values: Vec<f64>,
    pub seed: SeedInfo,
}

impl PathSample {
    pub fn grid_point(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.spacing
    }

    /// `[origin, origin + (n-1) spacing]`
    pub fn domain(&self) -> (f64, f64) {
        (self.origin, self.grid_point(self.values.len() - 1))
    }
}

/// Sorted refined zeros of one path.
#[derive(Debug, Clone)]
pub struct ZeroSet {
    pub zeros: Vec<f64>,
    pub domain: (f64, f64),
    pub refine_tol: f64,
}

/// A gap between successive zeros; the location is the left endpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapRecord {
    pub left_zero: f64,
    pub length: f64,
}

/// Cubic Lagrange interpolant through four uniformly spaced samples.
fn cubic_eval(xs: &[f64; 4], vs: &[f64; 4], x: f64) -> f64 {
    let mut acc = 0.0;
    for k in 0..4 {
        let mut term = vs[k];
        for j in 0..4 {
            if j != k {
                term *= (x - xs[j]) / (xs[k] - xs[j]);
            }
        }
        acc += term;
    }
    acc
}

/// Bisect an interpolant with opposite signs at `lo`/`hi` down to `tol`.
fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, v_lo: f64, tol: f64) -> f64 {
    let sign_lo = v_lo > 0.0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let v = f(mid);
        if v == 0.0 {
            return mid;
        }
        if (v > 0.0) == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Locate one zero per strict sign change between adjacent grid points.
///
/// Each crossing is refined by bisection on the cubic interpolant through the
/// four nearest grid values (linear at the path ends) to within `refine_tol`.
/// Exact grid zeros are taken as-is. Cells without a sign change report
/// nothing, so tangential zeros below grid resolution are ignored.
pub fn find_zeros(path: &PathSample, refine_tol: f64) -> Result<ZeroSet> {
    if !(refine_tol > 0.0 && refine_tol < path.spacing) {
        return Err(Error::Param(format!(
            "refine_tol must lie in (0, spacing), got {refine_tol}"
        )));
    }
    let n = path.values.len();
    if n < 2 {
        return Err(Error::Param("path needs at least 2 values".into()));
    }
    let v = &path.values;
    let mut zeros: Vec<f64> = Vec::new();
    let push = |z: f64, zeros: &mut Vec<f64>| {
        if zeros.last().map_or(true, |&last| z - last >= refine_tol) {
            zeros.push(z);
        }
    };
    for i in 0..n - 1 {
        if v[i] == 0.0 {
            push(path.grid_point(i), &mut zeros);
            continue;
        }
        if v[i + 1] == 0.0 || v[i] * v[i + 1] > 0.0 {
            continue;
        }
        let x_lo = path.grid_point(i);
        let x_hi = path.grid_point(i + 1);
        let z = if i >= 1 && i + 2 < n {
            let xs = [
                path.grid_point(i - 1),
                x_lo,
                x_hi,
                path.grid_point(i + 2),
            ];
            let vs = [v[i - 1], v[i], v[i + 1], v[i + 2]];
            bisect(|x| cubic_eval(&xs, &vs, x), x_lo, x_hi, v[i], refine_tol)
        } else {
            // linear fallback at the path ends
            let root = x_lo + path.spacing * v[i] / (v[i] - v[i + 1]);
            root.clamp(x_lo, x_hi)
        };
        push(z, &mut zeros);
    }
    if v[n - 1] == 0.0 {
        push(path.grid_point(n - 1), &mut zeros);
    }
    Ok(ZeroSet {
        zeros,
        domain: path.domain(),
        refine_tol,
    })
}

/// Successive differences `(z_i, z_{i+1} - z_i)`; empty below two zeros.
pub fn gaps(zs: &ZeroSet) -> Vec<GapRecord> {
    zs.zeros
        .windows(2)
        .map(|w| GapRecord {
            left_zero: w[0],
            length: w[1] - w[0],
        })
        .collect()
}

/// Largest gap with left endpoint in `[0, window]` and its location,
/// ties broken to the smallest location; `(0, 0)` when no zero lies in the
/// window.
///
/// Every zero in the window must have a recorded successor; otherwise the
/// simulated horizon was too short and the caller must extend it.
pub fn largest_gap(zs: &ZeroSet, window: f64) -> Result<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for (i, &z) in zs.zeros.iter().enumerate() {
        if z < 0.0 || z > window {
            continue;
        }
        let next = *zs.zeros.get(i + 1).ok_or(Error::HorizonExhausted {
            last_zero: z,
            window,
        })?;
        let gap = next - z;
        if best.map_or(true, |(g, _)| gap > g) {
            best = Some((gap, z));
        }
    }
    Ok(best.unwrap_or((0.0, 0.0)))
}

/// Index of the first grid cell at or after `from` containing a zero
/// (strict sign change, or an exact zero at a grid point).
pub fn first_crossing_cell(values: &[f64], from: usize) -> Option<usize> {
    let n = values.len();
    for i in from..n - 1 {
        if values[i] == 0.0 {
            // a zero exactly at grid point i closes the cell ending there
            return Some(i.saturating_sub(1).max(from));
        }
        if values[i] * values[i + 1] < 0.0 {
            return Some(i);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(values: Vec<f64>, origin: f64, spacing: f64) -> PathSample {
        PathSample {
            origin,
            spacing,
            values,
            seed: SeedInfo { master_seed: 0, stage: 0, task: 0 },
        }
    }

    #[test]
    fn linear_root_at_ends() {
        let p = path(vec![1.0, -1.0], 0.0, 1.0);
        let zs = find_zeros(&p, 1e-9).unwrap();
        assert_eq!(zs.zeros.len(), 1);
        assert!((zs.zeros[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn no_sign_change_no_zero() {
        let p = path(vec![1.0, 2.0, 3.0], 0.0, 1.0);
        assert!(find_zeros(&p, 1e-9).unwrap().zeros.is_empty());
    }

    #[test]
    fn two_sign_changes() {
        let p = path(vec![1.0, -1.0, 1.0], 0.0, 1.0);
        let zs = find_zeros(&p, 1e-9).unwrap();
        assert_eq!(zs.zeros.len(), 2);
        assert!(zs.zeros[0] > 0.0 && zs.zeros[0] < 1.0);
        assert!(zs.zeros[1] > 1.0 && zs.zeros[1] < 2.0);
    }

    #[test]
    fn exact_grid_zero_taken_as_is() {
        let p = path(vec![1.0, 0.0, 1.0, -2.0], 0.0, 0.5);
        let zs = find_zeros(&p, 1e-9).unwrap();
        assert_eq!(zs.zeros.len(), 2);
        assert_eq!(zs.zeros[0], 0.5);
        assert!(zs.zeros[1] > 1.0 && zs.zeros[1] < 1.5);
    }

    #[test]
    fn cubic_refinement_hits_smooth_roots() {
        // sample sin(x) from 0.1; roots at pi and 2 pi
        let spacing = 0.25;
        let n = 32;
        let values: Vec<f64> = (0..n).map(|i| (0.1 + i as f64 * spacing).sin()).collect();
        let p = path(values, 0.1, spacing);
        let zs = find_zeros(&p, 1e-10).unwrap();
        assert_eq!(zs.zeros.len(), 2);
        assert!((zs.zeros[0] - std::f64::consts::PI).abs() < 1e-4);
        assert!((zs.zeros[1] - 2.0 * std::f64::consts::PI).abs() < 1e-4);
    }

    #[test]
    fn refinement_stability_under_halving() {
        // Halving the spacing should move each detected root only slightly.
        let f = |x: f64| (1.3 * x).sin() + 0.3 * (0.4 * x).cos();
        let run = |spacing: f64| -> Vec<f64> {
            let n = (40.0 / spacing) as usize;
            let values: Vec<f64> = (0..n).map(|i| f(i as f64 * spacing)).collect();
            find_zeros(&path(values, 0.0, spacing), 1e-10).unwrap().zeros
        };
        let coarse = run(0.2);
        let fine = run(0.1);
        assert_eq!(coarse.len(), fine.len());
        for (a, b) in coarse.iter().zip(&fine) {
            assert!((a - b).abs() < 0.2 * 0.2, "root moved {} -> {}", a, b);
        }
    }

    #[test]
    fn gap_examples() {
        let zs = ZeroSet { zeros: vec![0.2, 1.0, 4.0], domain: (0.0, 5.0), refine_tol: 1e-9 };
        let g = gaps(&zs);
        assert_eq!(g.len(), 2);
        assert!((g[0].left_zero - 0.2).abs() < 1e-15 && (g[0].length - 0.8).abs() < 1e-15);
        assert!((g[1].left_zero - 1.0).abs() < 1e-15 && (g[1].length - 3.0).abs() < 1e-15);

        let single = ZeroSet { zeros: vec![0.0], domain: (0.0, 1.0), refine_tol: 1e-9 };
        assert!(gaps(&single).is_empty());

        let unit = ZeroSet { zeros: vec![1.0, 2.0, 3.0], domain: (0.0, 4.0), refine_tol: 1e-9 };
        let lens: Vec<f64> = gaps(&unit).iter().map(|g| g.length).collect();
        assert_eq!(lens, vec![1.0, 1.0]);
    }

    #[test]
    fn largest_gap_examples() {
        let zs = ZeroSet { zeros: vec![0.2, 1.0, 4.0, 4.5], domain: (0.0, 5.0), refine_tol: 1e-9 };
        assert_eq!(largest_gap(&zs, 4.0).unwrap(), (3.0, 1.0));

        let empty = ZeroSet { zeros: vec![], domain: (0.0, 5.0), refine_tol: 1e-9 };
        assert_eq!(largest_gap(&empty, 4.0).unwrap(), (0.0, 0.0));

        let ties = ZeroSet {
            zeros: vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0],
            domain: (0.0, 6.0),
            refine_tol: 1e-9,
        };
        assert_eq!(largest_gap(&ties, 4.0).unwrap(), (1.0, 0.0));
    }

    #[test]
    fn largest_gap_horizon_error() {
        let zs = ZeroSet { zeros: vec![0.5, 3.0], domain: (0.0, 4.0), refine_tol: 1e-9 };
        match largest_gap(&zs, 4.0) {
            Err(Error::HorizonExhausted { last_zero, .. }) => {
                assert!((last_zero - 3.0).abs() < 1e-15)
            }
            other => panic!("expected horizon error, got {other:?}"),
        }
    }

    #[test]
    fn largest_gap_monotone_in_window() {
        let zs = ZeroSet {
            zeros: vec![0.1, 0.4, 2.0, 2.3, 5.0, 5.1, 9.0],
            domain: (0.0, 10.0),
            refine_tol: 1e-9,
        };
        let mut last = 0.0;
        for w in [0.2, 0.5, 2.1, 3.0, 5.05, 6.0] {
            let (l, _) = largest_gap(&zs, w).unwrap();
            assert!(l >= last);
            last = l;
        }
    }
}
