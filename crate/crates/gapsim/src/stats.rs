//! Shared statistical utilities: confidence intervals, batch means,
//! Kolmogorov-Smirnov machinery, isotonic regression, falling factorials.

use crate::error::{Error, Result};

/// Two-sided 95% normal quantile, fixed once for every report in the crate.
pub const Z95: f64 = 1.959964;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CiMethod {
    Wilson,
    BatchMeans,
    Delta,
}

/// A point estimate with a 95% confidence interval.
#[derive(Debug, Clone, Copy)]
pub struct EstimateWithCi {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
    pub n: u64,
    pub method: CiMethod,
}

impl EstimateWithCi {
    pub fn half_width(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }

    /// True when `x` lies inside the interval.
    pub fn covers(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, n: u64) -> Result<EstimateWithCi> {
    if n == 0 {
        return Err(Error::Param("wilson_interval needs n >= 1".into()));
    }
    if successes > n {
        return Err(Error::Param(format!(
            "wilson_interval: successes {successes} > n {n}"
        )));
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = Z95 * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    // the interval closes exactly at degenerate counts
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == n { 1.0 } else { (center + half).min(1.0) };
    Ok(EstimateWithCi {
        value: p,
        lo,
        hi,
        n,
        method: CiMethod::Wilson,
    })
}

/// Mean of batch means with a normal-theory interval over the batch spread.
pub fn batch_means(batch_values: &[f64]) -> Result<EstimateWithCi> {
    let b = batch_values.len();
    if b < 2 {
        return Err(Error::InsufficientData { need: 2, got: b });
    }
    let mean = batch_values.iter().sum::<f64>() / b as f64;
    let var = batch_values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (b - 1) as f64;
    let half = Z95 * (var / b as f64).sqrt();
    Ok(EstimateWithCi {
        value: mean,
        lo: mean - half,
        hi: mean + half,
        n: b as u64,
        method: CiMethod::BatchMeans,
    })
}

/// Survival function of the Kolmogorov distribution,
/// `Q(t) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 t^2)`, truncated at 100 terms.
pub fn kolmogorov_sf(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100u32 {
        let k = k as f64;
        let term = (-2.0 * k * k * t * t).exp();
        if k as u32 % 2 == 1 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov-Smirnov statistic against a reference CDF.
///
/// Returns `(D, p)` with `p` from the asymptotic Kolmogorov distribution.
pub fn ks_statistic<F: Fn(f64) -> f64>(sorted_sample: &[f64], cdf: F) -> Result<(f64, f64)> {
    let n = sorted_sample.len();
    if n < 8 {
        return Err(Error::InsufficientData { need: 8, got: n });
    }
    for i in 1..n {
        if sorted_sample[i] < sorted_sample[i - 1] {
            return Err(Error::Unsorted(i));
        }
    }
    let nf = n as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted_sample.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / nf - f).max(f - i as f64 / nf);
    }
    let p = kolmogorov_sf(nf.sqrt() * d);
    Ok((d, p))
}

/// Weighted least-squares projection onto nonincreasing sequences
/// (pool-adjacent-violators). Idempotent.
pub fn isotonic_nonincreasing(values: &[f64], weights: &[f64]) -> Vec<f64> {
    assert_eq!(values.len(), weights.len(), "values/weights length mismatch");
    assert!(weights.iter().all(|&w| w > 0.0), "weights must be positive");
    let n = values.len();
    if n == 0 {
        return Vec::new();
    }
    // Blocks of (pooled mean, pooled weight, length), maintained nonincreasing.
    let mut means: Vec<f64> = Vec::with_capacity(n);
    let mut wsum: Vec<f64> = Vec::with_capacity(n);
    let mut runs: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        means.push(values[i]);
        wsum.push(weights[i]);
        runs.push(1);
        while means.len() > 1 {
            let m = means.len();
            if means[m - 2] >= means[m - 1] {
                break;
            }
            let w = wsum[m - 2] + wsum[m - 1];
            let pooled = (means[m - 2] * wsum[m - 2] + means[m - 1] * wsum[m - 1]) / w;
            means.truncate(m - 1);
            wsum.truncate(m - 1);
            let r = runs.pop().unwrap();
            *means.last_mut().unwrap() = pooled;
            *wsum.last_mut().unwrap() = w;
            *runs.last_mut().unwrap() += r;
        }
    }
    let mut out = Vec::with_capacity(n);
    for (m, r) in means.iter().zip(runs.iter()) {
        out.extend(std::iter::repeat(*m).take(*r));
    }
    out
}

/// Mean of the k-th falling factorial `N (N-1) ... (N-k+1)` over the counts.
pub fn falling_factorial_mean(counts: &[u64], k: u32) -> f64 {
    assert!(k >= 1, "k must be >= 1");
    if counts.is_empty() {
        return 0.0;
    }
    let sum: f64 = counts
        .iter()
        .map(|&n| {
            let mut prod = 1.0;
            for j in 0..k as u64 {
                prod *= n.saturating_sub(j) as f64;
                if n < j + 1 {
                    prod = 0.0;
                    break;
                }
            }
            prod
        })
        .sum();
    sum / counts.len() as f64
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample Pearson correlation coefficient.
pub fn pearson_corr(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    if n < 2 {
        return f64::NAN;
    }
    let mx = mean(x);
    let my = mean(y);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..n {
        let dx = x[i] - mx;
        let dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

/// Median and interquartile range of a sample (copied and sorted internally).
pub fn median_iqr(xs: &[f64]) -> (f64, f64) {
    assert!(!xs.is_empty());
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q = |p: f64| -> f64 {
        let idx = p * (v.len() - 1) as f64;
        let lo = idx.floor() as usize;
        let hi = idx.ceil() as usize;
        let frac = idx - lo as f64;
        v[lo] * (1.0 - frac) + v[hi] * frac
    };
    (q(0.5), q(0.75) - q(0.25))
}

/// Ordinary least-squares line fit with curvature diagnostic.
#[derive(Debug, Clone, Copy)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Correlation of residuals with the squared centred regressor;
    /// large magnitude signals curvature the line misses.
    pub residual_trend: f64,
    pub n: usize,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::Param("linear_fit: length mismatch".into()));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::InsufficientData { need: 2, got: n });
    }
    let mx = mean(x);
    let my = mean(y);
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..n {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if sxx == 0.0 {
        return Err(Error::Param("linear_fit: degenerate regressor".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    let mut resid = Vec::with_capacity(n);
    let mut x2 = Vec::with_capacity(n);
    for i in 0..n {
        let r = y[i] - (intercept + slope * x[i]);
        ss_res += r * r;
        ss_tot += (y[i] - my) * (y[i] - my);
        resid.push(r);
        x2.push((x[i] - mx) * (x[i] - mx));
    }
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
        residual_trend: pearson_corr(&resid, &x2),
        n,
    })
}
