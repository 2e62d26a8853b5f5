//! Sample moments, correlation, weighted log-log fits and the two-sample
//! Kolmogorov–Smirnov test.

use serde::Serialize;

use crate::error::{Error, Result};

/// Mean and unbiased variance with normal-approximation standard errors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub se_mean: f64,
    /// Standard error of the sample variance, from the spread of the squared
    /// deviations.
    pub se_variance: f64,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Result<Self> {
        let n = xs.len();
        if n < 2 {
            return Err(Error::EmptySample);
        }
        let nf = n as f64;
        let mean = xs.iter().sum::<f64>() / nf;
        let variance = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0);
        let sq: Vec<f64> = xs.iter().map(|x| (x - mean).powi(2)).collect();
        let sq_mean = sq.iter().sum::<f64>() / nf;
        let sq_var = sq.iter().map(|v| (v - sq_mean).powi(2)).sum::<f64>() / (nf - 1.0);
        Ok(Summary { n, mean, variance, se_mean: (variance / nf).sqrt(), se_variance: (sq_var / nf).sqrt() })
    }
}

/// Pearson correlation with its approximate standard error `(1 − r²)/√(n − 1)`.
pub fn correlation(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    assert_eq!(a.len(), b.len(), "paired samples");
    let n = a.len();
    if n < 3 {
        return Err(Error::EmptySample);
    }
    let ma = a.iter().sum::<f64>() / n as f64;
    let mb = b.iter().sum::<f64>() / n as f64;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Ok((0.0, 1.0 / ((n - 1) as f64).sqrt()));
    }
    let r = sab / (saa * sbb).sqrt();
    Ok((r, (1.0 - r * r) / ((n - 1) as f64).sqrt()))
}

/// Proportion of successes with its binomial standard error.
pub fn proportion(successes: usize, n: usize) -> (f64, f64) {
    let p = successes as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    pub se_slope: f64,
}

/// Weighted least squares of `y` on `x` with weights `1 / var_y`. The slope
/// standard error treats the variances as known.
pub fn weighted_fit(points: &[(f64, f64, f64)]) -> Result<Fit> {
    let pts: Vec<&(f64, f64, f64)> = points.iter().filter(|p| p.2 > 0.0 && p.2.is_finite()).collect();
    let mut xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if xs.len() < 2 {
        return Err(Error::InvalidParameter("a slope needs at least two distinct abscissae".into()));
    }
    let w: Vec<f64> = pts.iter().map(|p| 1.0 / p.2).collect();
    let sw: f64 = w.iter().sum();
    let mx = pts.iter().zip(&w).map(|(p, w)| w * p.0).sum::<f64>() / sw;
    let my = pts.iter().zip(&w).map(|(p, w)| w * p.1).sum::<f64>() / sw;
    let sxx: f64 = pts.iter().zip(&w).map(|(p, w)| w * (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().zip(&w).map(|(p, w)| w * (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Ok(Fit { slope, intercept: my - slope * mx, se_slope: (1.0 / sxx).sqrt() })
}

/// Log-log fit of `estimate ~ parameter^slope`, weighting each point by the
/// delta-method variance `(se / estimate)²` of its log.
pub fn log_log_fit(rows: &[(f64, f64, f64)]) -> Result<Fit> {
    let pts: Vec<(f64, f64, f64)> =
        rows.iter().filter(|r| r.0 > 0.0 && r.1 > 0.0).map(|&(x, y, se)| (x.ln(), y.ln(), (se / y).powi(2))).collect();
    weighted_fit(&pts)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KsReport {
    pub statistic: f64,
    pub p_value: f64,
    pub n_a: usize,
    pub n_b: usize,
}

/// Kolmogorov survival function `Q(λ) = 2 Σ (−1)^{k−1} exp(−2k²λ²)`.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let term = sign * (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov–Smirnov test. Ties are handled by evaluating both
/// empirical CDFs after each distinct value; the p-value uses the asymptotic
/// Kolmogorov law with effective size `n·m/(n+m)` and the usual small-sample
/// correction `(√n_e + 0.12 + 0.11/√n_e)`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsReport> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let v = if a[i].total_cmp(&b[j]).is_le() { a[i] } else { b[j] };
        while i < a.len() && a[i] == v {
            i += 1;
        }
        while j < b.len() && b[j] == v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = na * nb / (na + nb);
    let root = ne.sqrt();
    let p_value = kolmogorov_q((root + 0.12 + 0.11 / root) * d);
    Ok(KsReport { statistic: d, p_value, n_a: a.len(), n_b: b.len() })
}
