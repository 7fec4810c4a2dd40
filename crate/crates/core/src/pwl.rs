//! Piecewise linear convex functions on the extended real line.
//!
//! A [`PwlConvex`] is finite on a closed interval (either end may be
//! unbounded) and +infinity outside it. Inside, it is continuous piecewise
//! linear with nondecreasing segment slopes. Infinity is the IEEE
//! `f64::INFINITY` marker; no arithmetic is ever performed on it, code
//! branches on it explicitly, and in particular 0 * inf never occurs.
//!
//! The exact Legendre transform
//!
//! ```text
//!     f*(x) = sup_q { q x - f(q) }
//! ```
//!
//! of such a function is again of the same class, with slopes and kink
//! locations exchanged: a kink of f at q with surrounding slopes (s-, s+)
//! becomes a segment of f* with slope q on [s-, s+], a finite domain endpoint
//! of f becomes an unbounded tail slope of f*, and an unbounded tail of f with
//! slope s cuts the domain of f* at s.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Behaviour of a `PwlConvex` beyond the last breakpoint on one side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tail", rename_all = "snake_case")]
pub enum Tail {
    /// The boundary segment extends linearly to infinity.
    Linear,
    /// The domain stops at this coordinate; the function is +infinity beyond.
    /// The value at the cut itself is finite (the function is closed).
    Cut { at: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PwlConvex {
    anchor_x: f64,
    anchor_y: f64,
    /// Strictly increasing kink locations, all inside the domain.
    breakpoints: Vec<f64>,
    /// Segment slopes, nondecreasing; len = breakpoints.len() + 1.
    /// A point domain carries a single unused slope of 0.
    slopes: Vec<f64>,
    left: Tail,
    right: Tail,
}

/// Slope comparisons tolerate this much relative noise before declaring a
/// convexity violation.
const SLOPE_TOL: f64 = 1e-12;

impl PwlConvex {
    pub fn new(
        anchor_x: f64,
        anchor_y: f64,
        breakpoints: Vec<f64>,
        slopes: Vec<f64>,
        left: Tail,
        right: Tail,
    ) -> Result<Self> {
        for v in breakpoints.iter().chain(slopes.iter()).chain([&anchor_x, &anchor_y]) {
            if !v.is_finite() {
                return Err(Error::invalid_param("piecewise-linear data must be finite"));
            }
        }
        for t in [&left, &right] {
            if let Tail::Cut { at } = t {
                if !at.is_finite() {
                    return Err(Error::invalid_param(
                        "cut coordinates must be finite; use a linear tail for an unbounded side",
                    ));
                }
            }
        }
        if let (Tail::Cut { at: l }, Tail::Cut { at: r }) = (left, right) {
            if l == r {
                // point domain
                if !breakpoints.is_empty() {
                    return Err(Error::invalid_param("point domain cannot carry breakpoints"));
                }
                if anchor_x != l {
                    return Err(Error::invalid_param("point domain anchor must sit on the point"));
                }
                return Ok(PwlConvex {
                    anchor_x,
                    anchor_y,
                    breakpoints,
                    slopes: vec![0.0],
                    left,
                    right,
                });
            }
            if l > r {
                return Err(Error::invalid_param(format!("domain cut left {l} beyond right {r}")));
            }
        }
        if slopes.len() != breakpoints.len() + 1 {
            return Err(Error::invalid_param(format!(
                "need {} slopes for {} breakpoints, got {}",
                breakpoints.len() + 1,
                breakpoints.len(),
                slopes.len()
            )));
        }
        for w in breakpoints.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::invalid_param("breakpoints must be strictly increasing"));
            }
        }
        for w in slopes.windows(2) {
            let scale = 1.0 + w[0].abs().max(w[1].abs());
            if w[1] < w[0] - SLOPE_TOL * scale {
                return Err(Error::NotConvex(format!(
                    "segment slopes decrease: {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if let Tail::Cut { at } = left {
            if let Some(&b0) = breakpoints.first() {
                if at >= b0 {
                    return Err(Error::invalid_param("left cut must sit before all breakpoints"));
                }
            }
        }
        if let Tail::Cut { at } = right {
            if let Some(&bl) = breakpoints.last() {
                if at <= bl {
                    return Err(Error::invalid_param("right cut must sit after all breakpoints"));
                }
            }
        }
        let (lo, hi) = domain_of(&left, &right);
        if anchor_x < lo || anchor_x > hi {
            return Err(Error::invalid_param("anchor must lie inside the domain"));
        }
        let mut f = PwlConvex { anchor_x, anchor_y, breakpoints, slopes, left, right };
        f.normalize();
        Ok(f)
    }

    /// Degenerate function: finite only at `x`, with value `y`.
    pub fn point(x: f64, y: f64) -> Self {
        PwlConvex {
            anchor_x: x,
            anchor_y: y,
            breakpoints: Vec::new(),
            slopes: vec![0.0],
            left: Tail::Cut { at: x },
            right: Tail::Cut { at: x },
        }
    }

    /// Globally linear function y(x) = y0 + slope (x - x0).
    pub fn linear(x0: f64, y0: f64, slope: f64) -> Self {
        PwlConvex {
            anchor_x: x0,
            anchor_y: y0,
            breakpoints: Vec::new(),
            slopes: vec![slope],
            left: Tail::Linear,
            right: Tail::Linear,
        }
    }

    /// Merge segments whose slopes coincide (up to noise) and drop zero-length
    /// artifacts; canonical form for comparisons and conjugation.
    fn normalize(&mut self) {
        if self.is_point() {
            return;
        }
        let mut bps = Vec::with_capacity(self.breakpoints.len());
        let mut sls = Vec::with_capacity(self.slopes.len());
        sls.push(self.slopes[0]);
        for (i, &b) in self.breakpoints.iter().enumerate() {
            let s_next = self.slopes[i + 1];
            let s_prev = *sls.last().unwrap();
            let scale = 1.0 + s_prev.abs().max(s_next.abs());
            if (s_next - s_prev).abs() <= SLOPE_TOL * scale {
                continue; // no real kink here
            }
            bps.push(b);
            sls.push(s_next);
        }
        self.breakpoints = bps;
        self.slopes = sls;
    }

    pub fn is_point(&self) -> bool {
        matches!((self.left, self.right), (Tail::Cut { at: l }, Tail::Cut { at: r }) if l == r)
    }

    /// Closure of the finite domain; unbounded ends are +-infinity.
    pub fn domain(&self) -> (f64, f64) {
        domain_of(&self.left, &self.right)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn tails(&self) -> (Tail, Tail) {
        (self.left, self.right)
    }

    /// Evaluate; +infinity outside the domain.
    pub fn eval(&self, x: f64) -> f64 {
        let (lo, hi) = self.domain();
        if x < lo || x > hi {
            return f64::INFINITY;
        }
        if self.is_point() {
            return self.anchor_y;
        }
        // integrate the slope field from the anchor to x
        let (mut pos, mut val) = (self.anchor_x, self.anchor_y);
        if x >= pos {
            loop {
                let seg = self.segment_index(pos, false);
                let seg_end = self.breakpoints.get(seg).copied().unwrap_or(f64::INFINITY);
                let stop = seg_end.min(x);
                val += self.slopes[seg] * (stop - pos);
                pos = stop;
                if pos >= x {
                    return val;
                }
            }
        } else {
            loop {
                let seg = self.segment_index(pos, true);
                let seg_start =
                    if seg == 0 { f64::NEG_INFINITY } else { self.breakpoints[seg - 1] };
                let stop = seg_start.max(x);
                val -= self.slopes[seg] * (pos - stop);
                pos = stop;
                if pos <= x {
                    return val;
                }
            }
        }
    }

    /// Index of the segment containing x; ties at a breakpoint resolve to the
    /// right segment unless `from_left`.
    fn segment_index(&self, x: f64, from_left: bool) -> usize {
        let mut i = 0;
        for &b in &self.breakpoints {
            let take_next = if from_left { x > b } else { x >= b };
            if take_next {
                i += 1;
            } else {
                break;
            }
        }
        i
    }

    /// Subdifferential at x inside the closed domain: the interval of
    /// supporting slopes, unbounded at cut endpoints.
    pub fn subdifferential(&self, x: f64) -> Option<(f64, f64)> {
        let (lo, hi) = self.domain();
        if x < lo || x > hi {
            return None;
        }
        if self.is_point() {
            return Some((f64::NEG_INFINITY, f64::INFINITY));
        }
        let left_slope = if x <= lo {
            f64::NEG_INFINITY
        } else {
            self.slopes[self.segment_index(x, true)]
        };
        let right_slope = if x >= hi {
            f64::INFINITY
        } else {
            self.slopes[self.segment_index(x, false)]
        };
        Some((left_slope, right_slope))
    }

    /// Kinks plus finite domain endpoints: every x where the subdifferential
    /// is a nontrivial interval lives here.
    pub fn vertices(&self) -> Vec<f64> {
        let mut v = Vec::new();
        if let Tail::Cut { at } = self.left {
            v.push(at);
        }
        for &b in &self.breakpoints {
            if v.last().is_none_or(|&last| b > last) {
                v.push(b);
            }
        }
        if let Tail::Cut { at } = self.right {
            if v.last().is_none_or(|&last| at > last) {
                v.push(at);
            }
        }
        v
    }

    /// Range of slopes attained on the finite domain (first, last).
    /// A point domain attains no slope and returns None.
    pub fn slope_range(&self) -> Option<(f64, f64)> {
        if self.is_point() {
            None
        } else {
            Some((self.slopes[0], *self.slopes.last().unwrap()))
        }
    }

    /// Infimum over the interval (lo, hi) intersected with the domain, with
    /// endpoint openness flags. +infinity when the intersection is empty.
    /// Openness only matters for the empty check: on a nondegenerate
    /// intersection the function is continuous, so open and closed infima
    /// agree.
    pub fn inf_on(&self, lo: f64, hi: f64, open_lo: bool, open_hi: bool) -> f64 {
        let (dlo, dhi) = self.domain();
        let mut a = lo.max(dlo);
        let mut b = hi.min(dhi);
        if a > b {
            return f64::INFINITY;
        }
        if a == b {
            let excluded = (open_lo && a == lo) || (open_hi && b == hi);
            return if excluded { f64::INFINITY } else { self.eval(a) };
        }
        // Unbounded ends: a tail sloping away from the interval is monotone,
        // so its infimum sits at the outermost kink; a tail sloping into the
        // interval is unbounded below.
        if a == f64::NEG_INFINITY {
            if self.slopes[0] > 0.0 {
                return f64::NEG_INFINITY;
            }
            a = self.breakpoints.first().copied().unwrap_or(self.anchor_x).min(b);
        }
        if b == f64::INFINITY {
            if *self.slopes.last().unwrap() < 0.0 {
                return f64::NEG_INFINITY;
            }
            b = self.breakpoints.last().copied().unwrap_or(self.anchor_x).max(a);
        }
        if a == b {
            return self.eval(a);
        }
        let mut best = self.eval(a).min(self.eval(b));
        for &k in &self.breakpoints {
            if k > a && k < b {
                best = best.min(self.eval(k));
            }
        }
        best
    }

    /// Exact Legendre transform.
    pub fn conjugate(&self) -> PwlConvex {
        if self.is_point() {
            // f finite only at c: f*(x) = c x - f(c), linear everywhere
            return PwlConvex::linear(0.0, -self.anchor_y, self.anchor_x);
        }
        let slopes = &self.slopes;
        let m = self.breakpoints.len();
        let s_first = slopes[0];
        let s_last = slopes[m];
        let (dlo, dhi) = self.domain();
        let l_finite = dlo.is_finite();
        let r_finite = dhi.is_finite();

        if m == 0 && !l_finite && !r_finite {
            // globally linear: conjugate is a point at the slope
            let value = s_first * self.anchor_x - self.anchor_y;
            return PwlConvex::point(s_first, value);
        }

        // conjugate breakpoints: slope values of f with a conjugate segment
        // on both sides. s_first gets one from the left only if the left
        // domain endpoint is finite; s_last from the right likewise.
        let mut c_bps: Vec<f64> = Vec::with_capacity(m + 2);
        if l_finite && (m >= 1 || r_finite) {
            c_bps.push(s_first);
        }
        if m >= 1 {
            c_bps.extend_from_slice(&slopes[1..m]);
            if r_finite {
                c_bps.push(s_last);
            }
        }

        // conjugate slopes: left endpoint, kink locations, right endpoint
        let mut c_slopes: Vec<f64> = Vec::with_capacity(m + 2);
        if l_finite {
            c_slopes.push(dlo);
        }
        c_slopes.extend_from_slice(&self.breakpoints);
        if r_finite {
            c_slopes.push(dhi);
        }

        let c_left = if l_finite { Tail::Linear } else { Tail::Cut { at: s_first } };
        let c_right = if r_finite { Tail::Linear } else { Tail::Cut { at: s_last } };

        // anchor at x = s_first; the sup there is attained along the whole
        // first segment, pick its most convenient point
        let q_ref = if l_finite {
            dlo
        } else if m >= 1 {
            self.breakpoints[0]
        } else {
            dhi
        };
        let anchor_x = s_first;
        let anchor_y = s_first * q_ref - self.eval(q_ref);

        let mut out =
            PwlConvex { anchor_x, anchor_y, breakpoints: c_bps, slopes: c_slopes, left: c_left, right: c_right };
        debug_assert_eq!(out.slopes.len(), out.breakpoints.len() + 1);
        out.normalize();
        out
    }

    /// Structural comparison after normalization: same tails, breakpoints and
    /// slopes within `tol`, and values agreeing at a probe set.
    pub fn approx_eq(&self, other: &PwlConvex, tol: f64) -> bool {
        if self.is_point() || other.is_point() {
            let (a, b) = (self.domain(), other.domain());
            return self.is_point()
                && other.is_point()
                && (a.0 - b.0).abs() <= tol
                && (self.anchor_y - other.anchor_y).abs() <= tol;
        }
        if self.breakpoints.len() != other.breakpoints.len() {
            return false;
        }
        let close = |a: f64, b: f64| {
            (a == b) || ((a - b).abs() <= tol * (1.0 + a.abs().max(b.abs())))
        };
        if !self
            .breakpoints
            .iter()
            .zip(&other.breakpoints)
            .all(|(a, b)| close(*a, *b))
        {
            return false;
        }
        if !self.slopes.iter().zip(&other.slopes).all(|(a, b)| close(*a, *b)) {
            return false;
        }
        let (dl, dr) = self.domain();
        let (ol, or_) = other.domain();
        if !(close(dl, ol) || (dl == ol)) || !(close(dr, or_) || (dr == or_)) {
            return false;
        }
        // probe values at breakpoints and a midpoint of every finite segment
        let mut probes: Vec<f64> = self.breakpoints.clone();
        let lo = if dl.is_finite() { dl } else { self.breakpoints.first().map_or(0.0, |b| b - 1.0) };
        let hi = if dr.is_finite() { dr } else { self.breakpoints.last().map_or(lo + 1.0, |b| b + 1.0) };
        probes.push(lo);
        probes.push(hi);
        probes.push(0.5 * (lo + hi));
        probes
            .iter()
            .all(|&x| close(self.eval(x), other.eval(x)))
    }
}

fn domain_of(left: &Tail, right: &Tail) -> (f64, f64) {
    let lo = match left {
        Tail::Linear => f64::NEG_INFINITY,
        Tail::Cut { at } => *at,
    };
    let hi = match right {
        Tail::Linear => f64::INFINITY,
        Tail::Cut { at } => *at,
    };
    (lo, hi)
}
