//! Legendre transforms of scaling functions, exact and grid-based.
//!
//! The exact route goes through [`PwlConvex::conjugate`]; this module wraps it
//! in [`ConjugateResult`], which carries the extras the growth-rate analysis
//! needs: the exposed points of tau* and the region where tau* is only
//! bounded from below because negative-order moments are not available.
//!
//! The numeric route works on sampled values. +infinity markers in the input
//! mean "the function is known to be infinite here", which pins the domain;
//! a finite block touching the edge of the grid means "unknown beyond", so
//! directions steeper than the boundary slope are reported infinite rather
//! than trusted to the grid maximum.

use std::io::Write;

use crate::error::{Error, Result};
use crate::pwl::PwlConvex;
use crate::scaling::ScalingFunction;

/// A function sampled on an increasing grid; +infinity values mark points
/// outside its domain. Finite points must be contiguous and at least two.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    q_grid: Vec<f64>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(q_grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if q_grid.len() != values.len() {
            return Err(Error::InvalidGrid("grid and value lengths differ".into()));
        }
        if q_grid.iter().any(|q| !q.is_finite()) {
            return Err(Error::InvalidGrid("grid points must be finite".into()));
        }
        for w in q_grid.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::InvalidGrid("grid must be strictly increasing".into()));
            }
        }
        if values.iter().any(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
            return Err(Error::invalid_param("values must be finite or +infinity"));
        }
        let n_finite = values.iter().filter(|v| v.is_finite()).count();
        if n_finite < 2 {
            return Err(Error::invalid_param("need at least two finite sample values"));
        }
        let first = values.iter().position(|v| v.is_finite()).unwrap();
        let last = values.iter().rposition(|v| v.is_finite()).unwrap();
        if values[first..=last].iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid_param(
                "infinite markers inside the finite block make the domain non-convex",
            ));
        }
        Ok(GridFunction { q_grid, values })
    }

    fn new_unchecked(q_grid: Vec<f64>, values: Vec<f64>) -> Self {
        GridFunction { q_grid, values }
    }

    pub fn sample(f: impl Fn(f64) -> f64, q_grid: Vec<f64>) -> Result<Self> {
        let values = q_grid.iter().map(|&q| f(q)).collect();
        GridFunction::new(q_grid, values)
    }

    pub fn q_grid(&self) -> &[f64] {
        &self.q_grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Index range [first, last] of the finite block.
    fn finite_block(&self) -> (usize, usize) {
        let first = self.values.iter().position(|v| v.is_finite()).unwrap_or(0);
        let last = self.values.iter().rposition(|v| v.is_finite()).unwrap_or(0);
        (first, last)
    }

    /// Columns: x, value, is_infinite. Infinite rows print the "inf" token.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,value,is_infinite")?;
        for (q, v) in self.q_grid.iter().zip(&self.values) {
            if v.is_finite() {
                writeln!(w, "{q},{v},0")?;
            } else {
                writeln!(w, "{q},inf,1")?;
            }
        }
        Ok(())
    }
}

/// Grid conjugate f*(x) = max over finite samples of (q x - f(q)).
///
/// Directions steeper than what the samples can certify are infinite: when
/// the finite block touches the grid edge, the function may keep growing
/// outside the sampled window, so x beyond the one-sided boundary slope gets
/// a +infinity marker. An explicit infinite marker beyond the block instead
/// pins the domain endpoint, making the conjugate finite arbitrarily far on
/// that side.
pub fn conjugate_numeric(f: &GridFunction, x_grid: &[f64]) -> Result<GridFunction> {
    for w in x_grid.windows(2) {
        if !(w[0] < w[1]) {
            return Err(Error::InvalidGrid("x grid must be strictly increasing".into()));
        }
    }
    if x_grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidGrid("x grid points must be finite".into()));
    }
    let (i0, i1) = f.finite_block();
    let (qs, vs) = (f.q_grid(), f.values());

    let slope_lo = if i0 > 0 {
        f64::NEG_INFINITY
    } else {
        (vs[i0 + 1] - vs[i0]) / (qs[i0 + 1] - qs[i0])
    };
    let slope_hi = if i1 + 1 < vs.len() {
        f64::INFINITY
    } else {
        (vs[i1] - vs[i1 - 1]) / (qs[i1] - qs[i1 - 1])
    };
    let tol_lo = 1e-12 * (1.0 + slope_lo.abs());
    let tol_hi = 1e-12 * (1.0 + slope_hi.abs());

    let values = x_grid
        .iter()
        .map(|&x| {
            if (slope_lo.is_finite() && x < slope_lo - tol_lo)
                || (slope_hi.is_finite() && x > slope_hi + tol_hi)
            {
                return f64::INFINITY;
            }
            let mut best = f64::NEG_INFINITY;
            for i in i0..=i1 {
                let cand = qs[i] * x - vs[i];
                if cand > best {
                    best = cand;
                }
            }
            best
        })
        .collect();
    Ok(GridFunction::new_unchecked(x_grid.to_vec(), values))
}

/// Value of tau* at a point, distinguishing the region where only a lower
/// bound is available.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauStarValue {
    Finite(f64),
    Infinite,
    /// Best available lower bound; the true value may be larger.
    LowerEnvelope(f64),
}

/// The Legendre transform of a scaling function together with its exposed
/// points and, where applicable, the region in which the transform is only
/// a lower envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct ConjugateResult {
    pieces: PwlConvex,
    exposed_points: Vec<f64>,
    /// For x below this coordinate, `pieces` is a lower bound on tau*, not
    /// its value: the scaling function's negative-order part is unknown.
    lower_envelope_below: Option<f64>,
}

impl ConjugateResult {
    pub fn new(
        pieces: PwlConvex,
        exposed_points: Vec<f64>,
        lower_envelope_below: Option<f64>,
    ) -> Self {
        ConjugateResult { pieces, exposed_points, lower_envelope_below }
    }

    pub fn pieces(&self) -> &PwlConvex {
        &self.pieces
    }

    pub fn exposed_points(&self) -> &[f64] {
        &self.exposed_points
    }

    pub fn lower_envelope_below(&self) -> Option<f64> {
        self.lower_envelope_below
    }

    pub fn value(&self, x: f64) -> TauStarValue {
        if let Some(h) = self.lower_envelope_below {
            if x < h {
                return TauStarValue::LowerEnvelope(self.pieces.eval(x));
            }
        }
        let v = self.pieces.eval(x);
        if v.is_finite() {
            TauStarValue::Finite(v)
        } else {
            TauStarValue::Infinite
        }
    }

    /// Open x-intervals where tau* = +infinity.
    pub fn infinite_regions(&self) -> Vec<(f64, f64)> {
        let (lo, hi) = self.pieces.domain();
        let mut out = Vec::new();
        if lo.is_finite() {
            out.push((f64::NEG_INFINITY, lo));
        }
        if hi.is_finite() {
            out.push((hi, f64::INFINITY));
        }
        out
    }

    pub fn is_exposed(&self, x: f64, tol: f64) -> bool {
        self.exposed_points.iter().any(|&e| (e - x).abs() <= tol)
    }

    /// Columns: x, tau_star, is_infinite, is_exposed, lower_envelope_only.
    /// Infinite rows print the "inf" token in tau_star.
    pub fn write_csv<W: Write>(&self, mut w: W, x_grid: &[f64]) -> std::io::Result<()> {
        writeln!(w, "x,tau_star,is_infinite,is_exposed,lower_envelope_only")?;
        for &x in x_grid {
            let exposed = u8::from(self.is_exposed(x, 1e-9));
            match self.value(x) {
                TauStarValue::Finite(v) => writeln!(w, "{x},{v},0,{exposed},0")?,
                TauStarValue::Infinite => writeln!(w, "{x},inf,1,{exposed},0")?,
                TauStarValue::LowerEnvelope(v) => writeln!(w, "{x},{v},0,{exposed},1")?,
            }
        }
        Ok(())
    }
}

/// Exposed points of a piecewise-linear tau*: vertices supported by a line
/// whose slope lies in the interior of the scaling function's domain. The
/// supporting slopes at a vertex form the open interval between the adjacent
/// segment slopes (unbounded at domain cut endpoints), so the test is a
/// nonempty interval intersection.
pub fn exposed_points(cr: &ConjugateResult, d_tau_interior: (f64, f64)) -> Vec<f64> {
    exposed_points_of(cr.pieces(), d_tau_interior)
}

pub(crate) fn exposed_points_of(pieces: &PwlConvex, d_tau_interior: (f64, f64)) -> Vec<f64> {
    let (dlo, dhi) = d_tau_interior;
    pieces
        .vertices()
        .into_iter()
        .filter(|&v| {
            let (ls, rs) = pieces.subdifferential(v).expect("vertex inside domain");
            ls.max(dlo) < rs.min(dhi)
        })
        .collect()
}

/// Exact conjugate of a piecewise-linear scaling function, with exposed
/// points taken against the interior of its own domain.
pub fn conjugate_piecewise_linear(sf: &ScalingFunction) -> ConjugateResult {
    let pieces = sf.pwl().conjugate();
    let (dlo, dhi) = sf.domain();
    let exposed = exposed_points_of(&pieces, (dlo, dhi));
    ConjugateResult::new(pieces, exposed, None)
}

/// Double conjugate; restores any closed convex scaling function.
pub fn biconjugate(sf: &ScalingFunction) -> Result<ScalingFunction> {
    ScalingFunction::new(sf.pwl().conjugate().conjugate())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn biscale_tau() -> ScalingFunction {
        ScalingFunction::from_segments(vec![1.25], vec![0.6, 1.0]).unwrap()
    }

    #[test]
    fn grid_conjugate_of_quadratic() {
        let qs: Vec<f64> = (-10_000..=10_000).map(|i| i as f64 * 1e-3).collect();
        let f = GridFunction::sample(|q| q * q, qs).unwrap();
        let g = conjugate_numeric(&f, &[2.0]).unwrap();
        assert!((g.values()[0] - 1.0).abs() <= 1e-3, "got {}", g.values()[0]);
    }

    #[test]
    fn grid_conjugate_marks_unbounded_directions() {
        let qs: Vec<f64> = (-10..=10).map(|i| i as f64).collect();
        let f = GridFunction::sample(|q| q * q, qs).unwrap();
        // boundary slopes are (f(-9)-f(-10))/1 = -19 and +19
        let g = conjugate_numeric(&f, &[-25.0, -19.0, 19.0, 25.0]).unwrap();
        assert_eq!(g.values()[0], f64::INFINITY);
        assert!(g.values()[1].is_finite());
        assert!(g.values()[2].is_finite());
        assert_eq!(g.values()[3], f64::INFINITY);
    }

    #[test]
    fn grid_conjugate_with_markers_is_finite_everywhere() {
        // linear slope 0.625 on [-1, 3], explicitly infinite outside
        let qs: Vec<f64> = (-3..=5).map(|i| i as f64).collect();
        let f = GridFunction::sample(
            |q| if (-1.0..=3.0).contains(&q) { 0.625 * q } else { f64::INFINITY },
            qs,
        )
        .unwrap();
        let exact = conjugate_piecewise_linear(
            &ScalingFunction::linear_on_window(0.625, -1.0, 3.0).unwrap(),
        );
        let g = conjugate_numeric(&f, &[-4.0, 0.425, 0.625, 0.825, 9.0]).unwrap();
        for (x, v) in g.q_grid().iter().zip(g.values()) {
            assert!(v.is_finite(), "marker-cut domain must give a finite conjugate at {x}");
            assert!((v - exact.pieces().eval(*x)).abs() < 1e-12);
        }
    }

    #[test]
    fn numeric_matches_exact_for_kink_sampled_input() {
        let tau = biscale_tau();
        let qs = vec![-3.0, -1.0, 0.0, 1.25, 2.0, 4.0];
        let f = GridFunction::sample(|q| tau.eval(q), qs).unwrap();
        let exact = conjugate_piecewise_linear(&tau);
        let x_grid: Vec<f64> = (0..=8).map(|i| 0.6 + 0.05 * i as f64).collect();
        let g = conjugate_numeric(&f, &x_grid).unwrap();
        for (x, v) in x_grid.iter().zip(g.values()) {
            let want = exact.pieces().eval(*x);
            assert!((v - want).abs() <= 1e-9, "x={x}: numeric {v} vs exact {want}");
        }
        let outside = conjugate_numeric(&f, &[1.5]).unwrap();
        assert_eq!(outside.values()[0], f64::INFINITY);
    }

    #[test]
    fn exact_conjugate_of_linear_tau_is_a_point() {
        let cr = conjugate_piecewise_linear(&ScalingFunction::linear(0.625));
        assert!(cr.pieces().is_point());
        assert_eq!(cr.value(0.625), TauStarValue::Finite(0.0));
        assert_eq!(cr.value(0.7), TauStarValue::Infinite);
        assert_eq!(cr.exposed_points(), &[0.625]);
        assert_eq!(
            cr.infinite_regions(),
            vec![(f64::NEG_INFINITY, 0.625), (0.625, f64::INFINITY)]
        );
    }

    #[test]
    fn exact_conjugate_of_biscale_has_both_endpoints_exposed() {
        let cr = conjugate_piecewise_linear(&biscale_tau());
        assert_eq!(cr.pieces().domain(), (0.6, 1.0));
        assert_eq!(cr.value(1.0), TauStarValue::Finite(0.5));
        assert_eq!(cr.exposed_points(), &[0.6, 1.0]);
    }

    #[test]
    fn finite_window_conjugate_is_a_v_shape() {
        let tau = ScalingFunction::linear_on_window(0.625, -1.0, 3.0).unwrap();
        let cr = conjugate_piecewise_linear(&tau);
        assert_eq!(cr.pieces().breakpoints(), &[0.625]);
        assert_eq!(cr.pieces().slopes(), &[-1.0, 3.0]);
        assert_eq!(cr.exposed_points(), &[0.625]);
        assert!(matches!(cr.value(0.825), TauStarValue::Finite(v) if (v - 0.6).abs() < 1e-12));
        assert!(matches!(cr.value(0.425), TauStarValue::Finite(v) if (v - 0.2).abs() < 1e-12));
    }

    #[test]
    fn order_reversal_on_shared_grids() {
        let qs: Vec<f64> = (-40..=40).map(|i| i as f64 * 0.25).collect();
        let f = GridFunction::sample(|q| q * q, qs.clone()).unwrap();
        let g = GridFunction::sample(|q| q * q + 0.5, qs).unwrap();
        let xs: Vec<f64> = (-10..=10).map(|i| i as f64 * 0.3).collect();
        let fs = conjugate_numeric(&f, &xs).unwrap();
        let gs = conjugate_numeric(&g, &xs).unwrap();
        for (a, b) in fs.values().iter().zip(gs.values()) {
            assert!(a >= b, "f <= g must flip to f* >= g*");
        }
    }

    #[test]
    fn young_fenchel_on_numeric_pairs() {
        let qs: Vec<f64> = (-40..=40).map(|i| i as f64 * 0.25).collect();
        let tau = biscale_tau();
        let f = GridFunction::sample(|q| tau.eval(q), qs.clone()).unwrap();
        let xs: Vec<f64> = (0..=20).map(|i| 0.55 + i as f64 * 0.025).collect();
        let fs = conjugate_numeric(&f, &xs).unwrap();
        for (&q, &fq) in qs.iter().zip(f.values()) {
            for (&x, &fsx) in xs.iter().zip(fs.values()) {
                if fq.is_finite() && fsx.is_finite() {
                    assert!(q * x <= fq + fsx + 1e-9);
                }
            }
        }
    }

    #[test]
    fn biconjugate_round_trips_scaling_functions() {
        for tau in [
            biscale_tau(),
            ScalingFunction::linear(0.5),
            ScalingFunction::linear_on_window(0.625, -1.0, 3.0).unwrap(),
        ] {
            let back = biconjugate(&tau).unwrap();
            assert!(back.pwl().approx_eq(tau.pwl(), 1e-9));
        }
    }

    #[test]
    fn grid_function_rejects_bad_input() {
        assert!(GridFunction::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(GridFunction::new(vec![1.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(GridFunction::new(vec![0.0, 1.0], vec![f64::INFINITY, 1.0]).is_err());
        assert!(
            GridFunction::new(
                vec![0.0, 1.0, 2.0],
                vec![1.0, f64::INFINITY, 2.0],
            )
            .is_err(),
            "interior markers break convexity of the domain"
        );
        assert!(GridFunction::new(vec![0.0, 1.0], vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn csv_uses_inf_token() {
        let f = GridFunction::new(vec![0.0, 1.0, 2.0], vec![0.5, 1.5, f64::INFINITY]).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("x,value,is_infinite"));
        assert!(text.contains("2,inf,1"));
    }
}
