//! Scaling-function estimation from path ensembles.
//!
//! For each moment order q the estimator regresses log empirical moment on
//! log t; the slopes trace out the scaling function. Intermittency is then a
//! question about the shape of those slopes: a convex scaling function whose
//! chord slope through the origin rises must bend somewhere, and the
//! detector finds the bend by fitting a two-segment line anchored at the
//! origin.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::ensemble::PathEnsemble;
use crate::error::{Error, Result};
use crate::stats::{mean_and_se, ols};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub value: f64,
    pub stderr: f64,
}

/// Mean of |x|^q with its standard error. Order zero is exact by
/// convention; negative orders fail if any sample vanishes; orders that
/// overflow report the largest order this sample could support.
pub fn empirical_moment(samples: &[f64], q: f64) -> Result<MomentEstimate> {
    if samples.is_empty() {
        return Err(Error::invalid_param("no samples"));
    }
    if q == 0.0 {
        return Ok(MomentEstimate { value: 1.0, stderr: 0.0 });
    }
    if q < 0.0 && samples.iter().any(|&x| x == 0.0) {
        return Err(Error::MomentUndefined(format!(
            "order {q} is negative and the sample contains zeros"
        )));
    }
    let powered: Vec<f64> = samples.iter().map(|x| x.abs().powf(q)).collect();
    if powered.iter().any(|v| !v.is_finite()) {
        let message = if q > 0.0 {
            let max_abs = samples.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
            format!(
                "order {q} overflows; the largest usable order for this sample is about {:.2}",
                f64::MAX.ln() / max_abs.ln()
            )
        } else {
            format!("order {q} overflows on values near zero")
        };
        return Err(Error::MomentOverflow(message));
    }
    let (value, stderr) = mean_and_se(&powered);
    Ok(MomentEstimate { value, stderr })
}

/// Estimated scaling function on a grid of moment orders.
///
/// `ess_fraction[i]` is a concentration diagnostic: the smallest fraction of
/// the sample (over the usable times) needed to cover 99% of the q-th moment
/// mass. Values near zero mean the moment is carried by a handful of paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingEstimate {
    pub q_grid: Vec<f64>,
    pub tau_hat: Vec<f64>,
    pub stderr: Vec<f64>,
    pub r_squared: Vec<f64>,
    pub ess_fraction: Vec<f64>,
    pub t_range: (f64, f64),
    pub warnings: Vec<String>,
}

pub const DEFAULT_Q_MAX: f64 = 4.0;
pub const DEFAULT_Q_STEP: f64 = 0.25;

/// 0, 0.25, ..., 4: nonnegative orders only. Negative orders are legal but
/// must be requested explicitly.
pub fn default_q_grid() -> Vec<f64> {
    let n = (DEFAULT_Q_MAX / DEFAULT_Q_STEP).round() as usize;
    (0..=n).map(|k| k as f64 * DEFAULT_Q_STEP).collect()
}

/// Fit the scaling function from an ensemble: for each order, regress the
/// log empirical moment on log t over the grid times with t > 1. Requires at
/// least three usable times spanning at least 1.5 decades.
pub fn estimate_scaling_function(
    ensemble: &PathEnsemble,
    q_grid: Option<&[f64]>,
) -> Result<ScalingEstimate> {
    let q_grid: Vec<f64> = match q_grid {
        Some(qs) => {
            if qs.is_empty() {
                return Err(Error::invalid_param("empty moment-order grid"));
            }
            if qs.iter().any(|q| !q.is_finite()) {
                return Err(Error::invalid_param("moment orders must be finite"));
            }
            if qs.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::invalid_param("moment orders must be strictly increasing"));
            }
            qs.to_vec()
        }
        None => default_q_grid(),
    };

    let mut warnings = Vec::new();
    let usable = ensemble.grid().indices_above_one();
    let dropped = ensemble.grid().len() - usable.len();
    if dropped > 0 {
        warnings.push(format!("excluded {dropped} grid points at t <= 1 from the log-log fit"));
    }
    if usable.len() < 3 {
        return Err(Error::InvalidGrid("need at least three grid times above t = 1".into()));
    }
    let times: Vec<f64> = usable.iter().map(|&i| ensemble.grid().times()[i]).collect();
    let span = (times[times.len() - 1] / times[0]).log10();
    if span < 1.5 {
        return Err(Error::InvalidGrid(format!(
            "grid spans {span:.2} decades above t = 1; need at least 1.5"
        )));
    }
    let log_t: Vec<f64> = times.iter().map(|t| t.ln()).collect();

    // per usable time: |x| sorted descending, so every q > 0 reuses the order
    let sorted_abs: Vec<Vec<f64>> = usable
        .iter()
        .map(|&i| {
            let mut col: Vec<f64> = ensemble.column(i).iter().map(|x| x.abs()).collect();
            col.sort_by(|p, r| r.partial_cmp(p).expect("finite path values"));
            col
        })
        .collect();

    let n = q_grid.len();
    let mut tau_hat = Vec::with_capacity(n);
    let mut stderr = Vec::with_capacity(n);
    let mut r_squared = Vec::with_capacity(n);
    let mut ess_fraction = Vec::with_capacity(n);
    for &q in &q_grid {
        if q == 0.0 {
            tau_hat.push(0.0);
            stderr.push(0.0);
            r_squared.push(1.0);
            ess_fraction.push(1.0);
            continue;
        }
        let mut log_m = Vec::with_capacity(usable.len());
        for &i in &usable {
            let m = empirical_moment(&ensemble.column(i), q)?;
            if m.value <= 0.0 {
                return Err(Error::MomentUndefined(format!(
                    "empirical moment of order {q} vanished at t = {}",
                    ensemble.grid().times()[i]
                )));
            }
            log_m.push(m.value.ln());
        }
        let fit = ols(&log_t, &log_m)?;
        if fit.r_squared < 0.95 {
            warnings.push(format!(
                "q = {q}: r^2 = {:.4} below 0.95; power-law scaling is a poor description",
                fit.r_squared
            ));
        }
        tau_hat.push(fit.slope);
        stderr.push(fit.slope_se);
        r_squared.push(fit.r_squared);
        ess_fraction.push(if q > 0.0 {
            sorted_abs.iter().map(|col| concentration_fraction(col, q)).fold(1.0, f64::min)
        } else {
            // negative orders weight the smallest values; the descending
            // order is exactly wrong for them, so walk from the other end
            sorted_abs
                .iter()
                .map(|col| {
                    let reversed: Vec<f64> = col.iter().rev().copied().collect();
                    concentration_fraction(&reversed, q)
                })
                .fold(1.0, f64::min)
        });
    }
    Ok(ScalingEstimate {
        q_grid,
        tau_hat,
        stderr,
        r_squared,
        ess_fraction,
        t_range: (times[0], times[times.len() - 1]),
        warnings,
    })
}

/// Fraction of the sample needed to cover 99% of sum |x|^q, given values
/// sorted by descending contribution.
fn concentration_fraction(sorted_for_q: &[f64], q: f64) -> f64 {
    let total: f64 = sorted_for_q.iter().map(|x| x.powf(q)).sum();
    if !(total > 0.0) {
        return 1.0;
    }
    let target = 0.99 * total;
    let mut acc = 0.0;
    for (k, x) in sorted_for_q.iter().enumerate() {
        acc += x.powf(q);
        if acc >= target {
            return (k + 1) as f64 / sorted_for_q.len() as f64;
        }
    }
    1.0
}

/// `q,tau_hat,stderr,r_squared` rows. The concentration diagnostic stays out
/// of this pinned format.
pub fn write_scaling_csv<W: Write>(est: &ScalingEstimate, writer: &mut W) -> Result<()> {
    writeln!(writer, "q,tau_hat,stderr,r_squared")?;
    for i in 0..est.q_grid.len() {
        writeln!(
            writer,
            "{},{},{},{}",
            est.q_grid[i], est.tau_hat[i], est.stderr[i], est.r_squared[i]
        )?;
    }
    Ok(())
}

/// Outcome of the bend search on an estimated scaling function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntermittencyDetection {
    /// True when the slope gap clears three of its standard errors and is
    /// material next to the single-slope fit.
    pub is_intermittent: bool,
    pub break_q: f64,
    /// Orders whose two-segment fit is statistically as good as the best.
    pub break_band: (f64, f64),
    pub slope_below: f64,
    pub slope_above: f64,
    pub gap_se: f64,
    /// Implied rarity exponent (slope gap times break location).
    pub rarity_exponent: f64,
    /// Best single line through the origin, for comparison.
    pub single_slope: f64,
}

/// Bends below this fraction of the single-slope fit are not called. The
/// per-order estimates share replications, so their errors are correlated
/// and the residual-based significance test alone is overconfident about
/// smooth, slowly varying deviations; a genuine second growth regime moves
/// the upper slope by far more than this at any feasible ensemble size.
pub const MIN_RELATIVE_GAP: f64 = 0.05;

/// Fit tau(q) = s1 min(q, qb) + s2 (q - qb)_+ over a fine grid of candidate
/// bends, anchored at the origin. A clear bend (slope gap above three
/// standard errors and above [`MIN_RELATIVE_GAP`] of the single-slope fit)
/// is evidence that the chord slope tau(q)/q is rising, i.e. that the
/// process is intermittent.
///
/// An estimated scaling function that is concave beyond statistical noise
/// contradicts every model in this crate and yields an error instead of a
/// verdict.
pub fn detect_intermittency(est: &ScalingEstimate) -> Result<IntermittencyDetection> {
    let pts: Vec<(f64, f64, f64)> = est
        .q_grid
        .iter()
        .zip(&est.tau_hat)
        .zip(&est.stderr)
        .filter(|((&q, _), _)| q > 0.0)
        .map(|((&q, &tau), &se)| (q, tau, se))
        .collect();
    if pts.len() < 5 {
        return Err(Error::invalid_param(
            "bend detection needs at least five positive moment orders",
        ));
    }
    check_convexity(&pts)?;

    let n = pts.len();
    let sum_q2: f64 = pts.iter().map(|(q, _, _)| q * q).sum();
    let sum_qt: f64 = pts.iter().map(|(q, tau, _)| q * tau).sum();
    let single_slope = sum_qt / sum_q2;
    let single_sse: f64 = pts.iter().map(|(q, tau, _)| (tau - single_slope * q).powi(2)).sum();

    let q_lo = pts[0].0;
    let q_hi = pts[n - 1].0;
    let candidates = 240;
    let mut best: Option<(f64, f64, f64, f64, f64)> = None; // (sse, qb, s1, s2, gap_var_unit)
    let mut profile: Vec<(f64, f64)> = Vec::with_capacity(candidates + 1);
    for k in 0..=candidates {
        let qb = q_lo + (q_hi - q_lo) * k as f64 / candidates as f64;
        let fitted = fit_two_segments(&pts, qb, single_slope, single_sse);
        profile.push((qb, fitted.0));
        let better = best.map(|(s, ..)| fitted.0 < s).unwrap_or(true);
        if better {
            best = Some((fitted.0, qb, fitted.1, fitted.2, fitted.3));
        }
    }
    let (sse, break_q, slope_below, slope_above, gap_var_unit) =
        best.expect("candidate grid is nonempty");
    let dof = (n - 2) as f64;
    let sigma2 = sse / dof;
    let gap_se = (sigma2 * gap_var_unit).sqrt();
    let gap = slope_above - slope_below;
    let threshold = sse * (1.0 + 2.0 / dof);
    let in_band: Vec<f64> =
        profile.iter().filter(|(_, s)| *s <= threshold).map(|(qb, _)| *qb).collect();
    let break_band = (
        in_band.iter().copied().fold(f64::INFINITY, f64::min),
        in_band.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );
    let is_intermittent = gap > 3.0 * gap_se && gap > MIN_RELATIVE_GAP * single_slope.abs();
    Ok(IntermittencyDetection {
        is_intermittent,
        break_q,
        break_band,
        slope_below,
        slope_above,
        gap_se,
        rarity_exponent: gap * break_q,
        single_slope,
    })
}

/// Chord slopes between consecutive orders must not decrease by more than
/// three combined standard errors.
fn check_convexity(pts: &[(f64, f64, f64)]) -> Result<()> {
    let mut prev: Option<(f64, f64)> = None; // (slope, se)
    for w in pts.windows(2) {
        let (q0, t0, e0) = w[0];
        let (q1, t1, e1) = w[1];
        let dq = q1 - q0;
        let slope = (t1 - t0) / dq;
        let se = (e0 * e0 + e1 * e1).sqrt() / dq;
        if let Some((ps, pe)) = prev {
            let combined = (se * se + pe * pe).sqrt();
            if slope < ps - 3.0 * combined {
                return Err(Error::EstimationInconsistent(format!(
                    "estimated scaling function is concave near q = {q0}: chord slope drops \
                     from {ps:.4} to {slope:.4} against a combined error of {combined:.4}"
                )));
            }
        }
        prev = Some((slope, se));
    }
    Ok(())
}

/// Least squares for tau ~ s1 min(q, qb) + s2 (q - qb)_+ with the convexity
/// clamp s2 >= s1. Returns (sse, s1, s2, unit variance of s2 - s1), where
/// the last entry is c^T (X^T X)^{-1} c for c = (-1, 1).
fn fit_two_segments(
    pts: &[(f64, f64, f64)],
    qb: f64,
    single_slope: f64,
    single_sse: f64,
) -> (f64, f64, f64, f64) {
    let mut a11 = 0.0;
    let mut a12 = 0.0;
    let mut a22 = 0.0;
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &(q, tau, _) in pts {
        let f1 = q.min(qb);
        let f2 = (q - qb).max(0.0);
        a11 += f1 * f1;
        a12 += f1 * f2;
        a22 += f2 * f2;
        b1 += f1 * tau;
        b2 += f2 * tau;
    }
    let det = a11 * a22 - a12 * a12;
    if det <= 1e-12 * a11.max(a22).max(1.0) {
        // no data on one side: the bend is unidentifiable here
        return (single_sse, single_slope, single_slope, f64::INFINITY);
    }
    let s1 = (a22 * b1 - a12 * b2) / det;
    let s2 = (a11 * b2 - a12 * b1) / det;
    if s2 < s1 {
        return (single_sse, single_slope, single_slope, (a11 + 2.0 * a12 + a22) / det);
    }
    let sse: f64 = pts
        .iter()
        .map(|&(q, tau, _)| {
            let fit = s1 * q.min(qb) + s2 * (q - qb).max(0.0);
            (tau - fit).powi(2)
        })
        .sum();
    // Var(s2 - s1) = sigma^2 [inv11 - 2 inv12 + inv22]
    let gap_var_unit = (a22 + 2.0 * a12 + a11) / det;
    (sse, s1, s2, gap_var_unit)
}
