//! Scaling functions: limits tau(q) of log E|X(t)|^q / log t.
//!
//! Whenever the limit exists for all q in an interval around a point, tau is
//! convex there, and tau(0) = 0 because the zeroth moment of anything is 1.
//! Those two facts are the whole contract of [`ScalingFunction`]; everything
//! else (one kink, many kinks, finite moment window) is data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pwl::{PwlConvex, Tail};

/// A convex piecewise linear scaling function with tau(0) = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFunction {
    pwl: PwlConvex,
}

impl ScalingFunction {
    /// Wrap a convex piecewise linear function, requiring 0 in its domain
    /// and value 0 there.
    pub fn new(pwl: PwlConvex) -> Result<Self> {
        let (lo, hi) = pwl.domain();
        if lo > 0.0 || hi < 0.0 {
            return Err(Error::invalid_param("scaling function must be finite at q = 0"));
        }
        let at_zero = pwl.eval(0.0);
        if at_zero.abs() > 1e-12 {
            return Err(Error::invalid_param(format!(
                "scaling function must vanish at q = 0, got {at_zero}"
            )));
        }
        Ok(ScalingFunction { pwl })
    }

    /// Build from segment data anchored at (0, 0) with linearly extended tails.
    pub fn from_segments(breakpoints: Vec<f64>, slopes: Vec<f64>) -> Result<Self> {
        let pwl = PwlConvex::new(0.0, 0.0, breakpoints, slopes, Tail::Linear, Tail::Linear)?;
        ScalingFunction::new(pwl)
    }

    /// The self-similar case tau(q) = h q.
    pub fn linear(h: f64) -> Self {
        ScalingFunction { pwl: PwlConvex::linear(0.0, 0.0, h) }
    }

    /// Linear tau(q) = h q restricted to a finite moment window [q_lo, q_hi],
    /// +infinity outside. Needs q_lo <= 0 <= q_hi.
    pub fn linear_on_window(h: f64, q_lo: f64, q_hi: f64) -> Result<Self> {
        if !(q_lo < q_hi) {
            return Err(Error::invalid_param("moment window must be a nondegenerate interval"));
        }
        let pwl = PwlConvex::new(
            0.0,
            0.0,
            vec![],
            vec![h],
            Tail::Cut { at: q_lo },
            Tail::Cut { at: q_hi },
        )?;
        ScalingFunction::new(pwl)
    }

    pub fn eval(&self, q: f64) -> f64 {
        self.pwl.eval(q)
    }

    /// tau(q)/q; undefined at 0 and outside the domain.
    pub fn ratio(&self, q: f64) -> Option<f64> {
        if q == 0.0 {
            return None;
        }
        let v = self.pwl.eval(q);
        v.is_finite().then(|| v / q)
    }

    /// Closure of the set where tau is finite.
    pub fn domain(&self) -> (f64, f64) {
        self.pwl.domain()
    }

    pub fn pwl(&self) -> &PwlConvex {
        &self.pwl
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_case_ratio_is_constant() {
        let tau = ScalingFunction::linear(0.625);
        assert_eq!(tau.eval(2.0), 1.25);
        assert_eq!(tau.ratio(3.0), Some(0.625));
        assert_eq!(tau.ratio(-1.0), Some(0.625));
        assert_eq!(tau.ratio(0.0), None);
    }

    #[test]
    fn anchor_must_vanish_at_zero() {
        let shifted = PwlConvex::linear(0.0, 0.3, 0.5);
        assert!(ScalingFunction::new(shifted).is_err());
        let off_domain = PwlConvex::new(
            1.0,
            0.5,
            vec![],
            vec![0.5],
            Tail::Cut { at: 0.5 },
            Tail::Cut { at: 2.0 },
        )
        .unwrap();
        assert!(ScalingFunction::new(off_domain).is_err());
    }

    #[test]
    fn window_restriction_cuts_moments() {
        let tau = ScalingFunction::linear_on_window(0.625, -1.0, 3.0).unwrap();
        assert_eq!(tau.eval(2.0), 1.25);
        assert_eq!(tau.eval(3.5), f64::INFINITY);
        assert_eq!(tau.eval(-1.5), f64::INFINITY);
        assert_eq!(tau.domain(), (-1.0, 3.0));
    }

    #[test]
    fn two_slope_ratio_increases_past_the_kink() {
        let tau = ScalingFunction::from_segments(vec![1.25], vec![0.6, 1.0]).unwrap();
        assert_eq!(tau.ratio(1.0), Some(0.6));
        let r2 = tau.ratio(2.0).unwrap();
        assert!((r2 - 0.75).abs() < 1e-15);
    }
}
