//! Plain statistical helpers: sample moments, (weighted) least squares on a
//! line, and isotonic regression via pool-adjacent-violators.

use crate::error::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; 0 for fewer than two points.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Sample mean together with its central-limit standard error sd / sqrt(n).
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let m = mean(xs);
    let se = (variance(xs) / xs.len() as f64).sqrt();
    (m, se)
}

#[derive(Debug, Clone, Copy)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope. For the unweighted fit this comes from the
    /// residual variance; for the weighted fit the weights are taken as known
    /// inverse variances, so the error is the design-based 1/sqrt(S_xx).
    pub slope_se: f64,
    pub r_squared: f64,
    pub residual_var: f64,
    pub n: usize,
}

/// Ordinary least squares of y on x. Needs at least two distinct x values.
/// A perfect fit (zero residuals, e.g. constant y on any x) reports
/// r_squared = 1 and slope_se = 0.
pub fn ols(x: &[f64], y: &[f64]) -> Result<LineFit> {
    let w: Vec<f64> = vec![1.0; x.len()];
    fit_line(x, y, &w, false)
}

/// Weighted least squares with known weights w_i = 1 / Var(y_i).
pub fn ols_weighted(x: &[f64], y: &[f64], w: &[f64]) -> Result<LineFit> {
    fit_line(x, y, w, true)
}

fn fit_line(x: &[f64], y: &[f64], w: &[f64], known_var: bool) -> Result<LineFit> {
    if x.len() != y.len() || x.len() != w.len() {
        return Err(Error::invalid_param("regression inputs differ in length"));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::invalid_param("regression needs at least 2 points"));
    }
    if w.iter().any(|&wi| !(wi > 0.0) || !wi.is_finite()) {
        return Err(Error::invalid_param("regression weights must be positive and finite"));
    }
    let sw: f64 = w.iter().sum();
    let xbar = x.iter().zip(w).map(|(xi, wi)| xi * wi).sum::<f64>() / sw;
    let ybar = y.iter().zip(w).map(|(yi, wi)| yi * wi).sum::<f64>() / sw;
    let sxx: f64 = x.iter().zip(w).map(|(xi, wi)| wi * (xi - xbar) * (xi - xbar)).sum();
    if sxx <= 0.0 {
        return Err(Error::invalid_param("regression needs at least 2 distinct x values"));
    }
    let sxy: f64 = x
        .iter()
        .zip(y)
        .zip(w)
        .map(|((xi, yi), wi)| wi * (xi - xbar) * (yi - ybar))
        .sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let sse: f64 = x
        .iter()
        .zip(y)
        .zip(w)
        .map(|((xi, yi), wi)| {
            let r = yi - intercept - slope * xi;
            wi * r * r
        })
        .sum();
    let sst: f64 = y.iter().zip(w).map(|(yi, wi)| wi * (yi - ybar) * (yi - ybar)).sum();
    let r_squared = if sst > 0.0 { 1.0 - sse / sst } else { 1.0 };
    let residual_var = if n > 2 { sse / (n - 2) as f64 } else { 0.0 };
    let slope_se = if known_var {
        (1.0 / sxx).sqrt()
    } else {
        (residual_var / sxx).sqrt()
    };
    Ok(LineFit { slope, intercept, slope_se, r_squared, residual_var, n })
}

/// Weighted least-squares projection onto nondecreasing sequences
/// (pool-adjacent-violators). Returns the projected values.
pub fn isotonic_nondecreasing(values: &[f64], weights: &[f64]) -> Vec<f64> {
    assert_eq!(values.len(), weights.len());
    // blocks of (weighted mean, total weight, count)
    let mut mean_: Vec<f64> = Vec::with_capacity(values.len());
    let mut wsum: Vec<f64> = Vec::with_capacity(values.len());
    let mut count: Vec<usize> = Vec::with_capacity(values.len());
    for (&v, &w) in values.iter().zip(weights) {
        mean_.push(v);
        wsum.push(w);
        count.push(1);
        while mean_.len() > 1 && mean_[mean_.len() - 2] > mean_[mean_.len() - 1] {
            let (m2, w2, c2) = (mean_.pop().unwrap(), wsum.pop().unwrap(), count.pop().unwrap());
            let last = mean_.len() - 1;
            let merged_w = wsum[last] + w2;
            mean_[last] = (mean_[last] * wsum[last] + m2 * w2) / merged_w;
            wsum[last] = merged_w;
            count[last] += c2;
        }
    }
    let mut out = Vec::with_capacity(values.len());
    for (m, c) in mean_.iter().zip(&count) {
        out.extend(std::iter::repeat_n(*m, *c));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ols_recovers_exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|xi| 2.5 * xi - 1.0).collect();
        let fit = ols(&x, &y).unwrap();
        assert!((fit.slope - 2.5).abs() < 1e-12);
        assert!((fit.intercept + 1.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!(fit.slope_se.abs() < 1e-9, "perfect fit has zero slope error");
    }

    #[test]
    fn ols_constant_y_reports_perfect_fit() {
        let x = [1.0, 2.0, 3.0];
        let y = [4.0, 4.0, 4.0];
        let fit = ols(&x, &y).unwrap();
        assert_eq!(fit.slope, 0.0);
        assert_eq!(fit.r_squared, 1.0);
        assert_eq!(fit.slope_se, 0.0);
    }

    #[test]
    fn ols_rejects_degenerate_inputs() {
        assert!(ols(&[1.0], &[2.0]).is_err());
        assert!(ols(&[1.0, 1.0], &[2.0, 3.0]).is_err());
    }

    #[test]
    fn weighted_fit_uses_known_variances() {
        // two noisy bands; the heavy-weight points dominate the slope
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [0.0, 1.0, 2.0, 10.0];
        let w = [1e6, 1e6, 1e6, 1e-6];
        let fit = ols_weighted(&x, &y, &w).unwrap();
        assert!((fit.slope - 1.0).abs() < 1e-3, "slope {} should ignore the outlier", fit.slope);
        // known-variance slope error: 1/sqrt(Sxx)
        assert!(fit.slope_se > 0.0);
    }

    #[test]
    fn isotonic_identity_on_sorted_input() {
        let v = [1.0, 2.0, 2.0, 5.0];
        let w = [1.0; 4];
        assert_eq!(isotonic_nondecreasing(&v, &w), v.to_vec());
    }

    #[test]
    fn isotonic_pools_violators() {
        // classic example: (3, 1) pools to (2, 2)
        let v = [3.0, 1.0, 4.0];
        let w = [1.0; 3];
        let got = isotonic_nondecreasing(&v, &w);
        assert_eq!(got, vec![2.0, 2.0, 4.0]);
    }

    #[test]
    fn isotonic_respects_weights() {
        // heavier first element drags the pooled mean toward it
        let v = [3.0, 1.0];
        let w = [3.0, 1.0];
        let got = isotonic_nondecreasing(&v, &w);
        let pooled = (3.0 * 3.0 + 1.0 * 1.0) / 4.0;
        assert!((got[0] - pooled).abs() < 1e-12 && (got[1] - pooled).abs() < 1e-12);
    }

    #[test]
    fn isotonic_is_least_squares_projection_on_small_case() {
        // brute-force check on a 3-point case: the PAV answer is at least as
        // close in weighted L2 as any monotone grid candidate
        let v = [2.0, 0.0, 1.0];
        let w = [1.0, 2.0, 1.0];
        let pav = isotonic_nondecreasing(&v, &w);
        let cost = |c: &[f64]| -> f64 {
            c.iter().zip(&v).zip(&w).map(|((ci, vi), wi)| wi * (ci - vi) * (ci - vi)).sum()
        };
        let pav_cost = cost(&pav);
        let grid: Vec<f64> = (-10..=30).map(|k| k as f64 * 0.1).collect();
        for &a in &grid {
            for &b in grid.iter().filter(|&&b| b >= a) {
                for &c in grid.iter().filter(|&&c| c >= b) {
                    assert!(
                        pav_cost <= cost(&[a, b, c]) + 1e-9,
                        "PAV {pav:?} beaten by ({a},{b},{c})"
                    );
                }
            }
        }
    }
}
