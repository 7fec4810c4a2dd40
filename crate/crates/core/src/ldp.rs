//! Empirical verification of the power-law decay sandwich.
//!
//! The growth-rate statistic R(t) = ln|X(t)| / ln t concentrates on a small
//! set of exponents; the probability of finding it elsewhere decays
//! polynomially in t, at a rate pinned between two Legendre-transform
//! bounds. This module measures the occupancy of a target interval across
//! a path ensemble, extrapolates its decay exponent, and checks the
//! extrapolation against the theoretical sandwich.

use std::fmt;
use std::io::Write;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::conjugate::ConjugateResult;
use crate::ensemble::PathEnsemble;
use crate::error::{Error, Result};
use crate::scenarios::ScenarioSpec;
use crate::stats;

/// Target interval for the growth-rate statistic, with explicit endpoint
/// openness. Infinite endpoints are recorded as open.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SetRepr", into = "SetRepr")]
pub struct SetA {
    lo: f64,
    hi: f64,
    open_lo: bool,
    open_hi: bool,
}

impl SetA {
    pub fn new(lo: f64, hi: f64, open_lo: bool, open_hi: bool) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() {
            return Err(Error::invalid_param("interval endpoints must not be NaN"));
        }
        if !(lo < hi) {
            return Err(Error::invalid_param(format!(
                "interval needs lo < hi, got [{lo}, {hi}]"
            )));
        }
        let open_lo = open_lo || lo == f64::NEG_INFINITY;
        let open_hi = open_hi || hi == f64::INFINITY;
        Ok(SetA { lo, hi, open_lo, open_hi })
    }

    pub fn open(lo: f64, hi: f64) -> Result<Self> {
        SetA::new(lo, hi, true, true)
    }

    pub fn closed(lo: f64, hi: f64) -> Result<Self> {
        SetA::new(lo, hi, false, false)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn open_lo(&self) -> bool {
        self.open_lo
    }

    pub fn open_hi(&self) -> bool {
        self.open_hi
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.open_lo { x > self.lo } else { x >= self.lo };
        let below = if self.open_hi { x < self.hi } else { x <= self.hi };
        above && below
    }
}

impl fmt::Display for SetA {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lb = if self.open_lo { '(' } else { '[' };
        let rb = if self.open_hi { ')' } else { ']' };
        let end = |v: f64| {
            if v == f64::INFINITY {
                "inf".to_string()
            } else if v == f64::NEG_INFINITY {
                "-inf".to_string()
            } else {
                format!("{v}")
            }
        };
        write!(f, "{lb}{}, {}{rb}", end(self.lo), end(self.hi))
    }
}

#[derive(Serialize, Deserialize)]
struct SetRepr {
    lo: EndpointRepr,
    hi: EndpointRepr,
    #[serde(default)]
    open_lo: bool,
    #[serde(default)]
    open_hi: bool,
}

/// Wire form of an extended-real endpoint: JSON has no infinities, so they
/// travel as the strings "inf" and "-inf".
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum EndpointRepr {
    Number(f64),
    Named(String),
}

impl From<f64> for EndpointRepr {
    fn from(v: f64) -> Self {
        if v == f64::INFINITY {
            EndpointRepr::Named("inf".to_string())
        } else if v == f64::NEG_INFINITY {
            EndpointRepr::Named("-inf".to_string())
        } else {
            EndpointRepr::Number(v)
        }
    }
}

impl TryFrom<EndpointRepr> for f64 {
    type Error = Error;

    fn try_from(r: EndpointRepr) -> Result<f64> {
        match r {
            EndpointRepr::Number(v) => Ok(v),
            EndpointRepr::Named(s) => match s.as_str() {
                "inf" | "+inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(Error::Format(format!(
                    "expected a number, \"inf\", or \"-inf\", got \"{other}\""
                ))),
            },
        }
    }
}

impl TryFrom<SetRepr> for SetA {
    type Error = Error;

    fn try_from(r: SetRepr) -> Result<SetA> {
        SetA::new(r.lo.try_into()?, r.hi.try_into()?, r.open_lo, r.open_hi)
    }
}

impl From<SetA> for SetRepr {
    fn from(s: SetA) -> SetRepr {
        SetRepr {
            lo: s.lo.into(),
            hi: s.hi.into(),
            open_lo: s.open_lo,
            open_hi: s.open_hi,
        }
    }
}

/// Growth rates of one ensemble column. Replications whose value is exactly
/// zero have no logarithm and are tallied separately.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSample {
    pub t: f64,
    pub values: Vec<f64>,
    pub zero_count: usize,
}

/// R(t) = ln|X(t)| / ln t for every replication at one time index.
pub fn rate_of_growth(ensemble: &PathEnsemble, time_index: usize) -> Result<RateSample> {
    let times = ensemble.grid().times();
    let Some(&t) = times.get(time_index) else {
        return Err(Error::invalid_param(format!(
            "time index {time_index} out of range for a grid of {} points",
            times.len()
        )));
    };
    if t <= 1.0 {
        return Err(Error::invalid_param(format!(
            "growth rates need t > 1 so that ln t > 0, got t = {t}"
        )));
    }
    let log_t = t.ln();
    let mut values = Vec::with_capacity(ensemble.n_reps());
    let mut zero_count = 0usize;
    for x in ensemble.column(time_index) {
        if x == 0.0 {
            zero_count += 1;
        } else {
            values.push(x.abs().ln() / log_t);
        }
    }
    Ok(RateSample { t, values, zero_count })
}

/// Occupancy of the target set at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub t: f64,
    pub count: usize,
    pub n_reps: usize,
    pub p_hat: f64,
    /// ln(p_hat) / ln(t); absent when the count is zero.
    pub rho_hat: Option<f64>,
    /// Delta-method 95% interval for rho_hat.
    pub band: Option<(f64, f64)>,
}

/// Weighted-regression extrapolation of the decay exponent. The intercept
/// absorbs the constant in P(t) ~ C t^rho, which is what separates the
/// asymptotic exponent from any single-t estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub rho: f64,
    pub se: f64,
    pub intercept: f64,
    pub window: (f64, f64),
    pub n_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayEstimate {
    pub rows: Vec<DecayRow>,
    pub extrapolated: Option<Extrapolation>,
    /// When no occupancy is seen anywhere: 95% ceiling on the exponent from
    /// the zero-success bound p <= 3/n at the largest sampled time.
    pub rule_of_three: Option<f64>,
}

/// Estimate how fast P(R(t) in A) decays. Rows are computed at every
/// requested index; the extrapolation regresses ln p on ln t with an
/// intercept over the rows with occupancy in the last two decades of t.
pub fn empirical_decay_rate(
    ensemble: &PathEnsemble,
    set_a: &SetA,
    t_indices: &[usize],
) -> Result<DecayEstimate> {
    if t_indices.is_empty() {
        return Err(Error::invalid_param("need at least one time index"));
    }
    let mut idx = t_indices.to_vec();
    idx.sort_unstable();
    let before = idx.len();
    idx.dedup();
    if idx.len() != before {
        return Err(Error::invalid_param("time indices must be distinct"));
    }
    let n = ensemble.n_reps();
    let mut rows = Vec::with_capacity(idx.len());
    for &i in &idx {
        let sample = rate_of_growth(ensemble, i)?;
        let count = sample.values.iter().filter(|&&r| set_a.contains(r)).count();
        let p_hat = count as f64 / n as f64;
        let log_t = sample.t.ln();
        let (rho_hat, band) = if count > 0 {
            let rho = p_hat.ln() / log_t;
            let se = ((1.0 - p_hat) / (n as f64 * p_hat)).sqrt() / log_t;
            (Some(rho), Some((rho - 1.96 * se, rho + 1.96 * se)))
        } else {
            (None, None)
        };
        rows.push(DecayRow { t: sample.t, count, n_reps: n, p_hat, rho_hat, band });
    }

    let occupied: Vec<&DecayRow> = rows.iter().filter(|r| r.count > 0).collect();
    let mut extrapolated = None;
    let mut rule_of_three = None;
    if occupied.is_empty() {
        let t_last = rows.last().expect("rows nonempty").t;
        rule_of_three = Some((3.0 / n as f64).ln() / t_last.ln());
    } else {
        let t_max = occupied.last().expect("nonempty").t;
        let window: Vec<&&DecayRow> =
            occupied.iter().filter(|r| r.t * 100.0 >= t_max * (1.0 - 1e-9)).collect();
        if window.len() >= 2 {
            let x: Vec<f64> = window.iter().map(|r| r.t.ln()).collect();
            let y: Vec<f64> = window.iter().map(|r| r.p_hat.ln()).collect();
            // inverse of Var(ln p_hat) = (1-p)/(np), capped so p_hat = 1
            // keeps a finite weight
            let w: Vec<f64> = window
                .iter()
                .map(|r| {
                    let p = r.p_hat.min(1.0 - 0.5 / n as f64);
                    n as f64 * p / (1.0 - p)
                })
                .collect();
            let fit = stats::ols_weighted(&x, &y, &w)?;
            extrapolated = Some(Extrapolation {
                rho: fit.slope,
                se: fit.slope_se,
                intercept: fit.intercept,
                window: (window[0].t, t_max),
                n_points: window.len(),
            });
        }
    }
    Ok(DecayEstimate { rows, extrapolated, rule_of_three })
}

/// Decay exponent bound: a finite value or "faster than any power".
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    Finite(f64),
    NegInfinity,
}

impl Bound {
    pub fn as_f64(self) -> f64 {
        match self {
            Bound::Finite(v) => v,
            Bound::NegInfinity => f64::NEG_INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Bound::Finite(_))
    }
}

impl Serialize for Bound {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Bound::Finite(v) => s.serialize_f64(*v),
            Bound::NegInfinity => s.serialize_str("-inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Bound {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match EndpointRepr::deserialize(d)? {
            EndpointRepr::Number(v) if v.is_finite() => Ok(Bound::Finite(v)),
            EndpointRepr::Number(v) => Err(D::Error::custom(format!(
                "bound must be finite or the string \"-inf\", got {v}"
            ))),
            EndpointRepr::Named(s) if s == "-inf" => Ok(Bound::NegInfinity),
            EndpointRepr::Named(s) => {
                Err(D::Error::custom(format!("bound must be a number or \"-inf\", got \"{s}\"")))
            }
        }
    }
}

/// The two theoretical bounds on the decay exponent of P(R(t) in A).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichBounds {
    /// From exposed points in the interior; the exponent cannot sit below it.
    pub lower: Bound,
    /// From the infimum of the rate function over the closure.
    pub upper: Bound,
    /// The upper bound touched the region where the rate function is only
    /// known as a lower envelope, so it may be loose.
    pub envelope_weakened: bool,
}

/// Evaluate both sandwich bounds for a target set.
///
/// The upper bound is -inf of the rate function over the closure of A; the
/// lower bound is -inf over the exposed points in the interior, vacuous when
/// none lie there. A set confined to the lower-envelope region has no valid
/// bound in either direction and is rejected.
pub fn sandwich_bounds(tau_star: &ConjugateResult, set_a: &SetA) -> Result<SandwichBounds> {
    let envelope_edge = tau_star.lower_envelope_below();
    if let Some(edge) = envelope_edge {
        if set_a.hi() < edge || (set_a.hi() == edge && set_a.open_hi()) {
            return Err(Error::BoundsIndeterminate(format!(
                "the rate function is only a lower envelope below {edge}, \
                 which contains all of {set_a}"
            )));
        }
    }
    let inf_closure = tau_star.pieces().inf_on(set_a.lo(), set_a.hi(), false, false);
    let upper = if inf_closure == f64::INFINITY {
        Bound::NegInfinity
    } else {
        Bound::Finite(-inf_closure)
    };
    let mut inf_exposed: Option<f64> = None;
    for &e in tau_star.exposed_points() {
        if e > set_a.lo() && e < set_a.hi() {
            let v = tau_star.pieces().eval(e);
            inf_exposed = Some(inf_exposed.map_or(v, |b| b.min(v)));
        }
    }
    let lower = match inf_exposed {
        Some(v) => Bound::Finite(-v),
        None => Bound::NegInfinity,
    };
    let envelope_weakened = envelope_edge.is_some_and(|edge| set_a.lo() < edge);
    Ok(SandwichBounds { lower, upper, envelope_weakened })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Indeterminate,
}

/// Outcome of checking an ensemble's decay rate against the sandwich.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdpReport {
    pub set_a: SetA,
    pub rows: Vec<DecayRow>,
    pub extrapolated: Option<Extrapolation>,
    pub rule_of_three: Option<f64>,
    pub lower_bound: Bound,
    pub upper_bound: Bound,
    pub envelope_weakened_upper: bool,
    /// Only one side of the sandwich could be tested.
    pub one_sided: bool,
    pub slack: f64,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

impl LdpReport {
    pub fn write_json<W: Write>(&self, mut w: W) -> Result<()> {
        let s = serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))?;
        w.write_all(s.as_bytes())?;
        w.write_all(b"\n")?;
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        write_ldp_csv(w, &self.rows)
    }
}

/// Per-time occupancy table. Zero-count rows have no rate; they carry "na".
pub fn write_ldp_csv<W: Write>(mut w: W, rows: &[DecayRow]) -> std::io::Result<()> {
    writeln!(w, "t,count,n_reps,p_hat,rho_hat")?;
    for r in rows {
        match r.rho_hat {
            Some(rho) => writeln!(w, "{},{},{},{},{}", r.t, r.count, r.n_reps, r.p_hat, rho)?,
            None => writeln!(w, "{},{},{},{},na", r.t, r.count, r.n_reps, r.p_hat)?,
        }
    }
    Ok(())
}

/// Measure the decay of P(R(t) in A) on the ensemble and test it against
/// the theoretical sandwich for the scenario.
///
/// `slack` widens the acceptance band; by default it is three regression
/// standard errors plus 0.02 absolute. With no occupancy anywhere only the
/// lower bound can be contradicted, since the rule-of-three value is itself
/// a ceiling; such verdicts are marked one-sided.
pub fn verify_sandwich(
    ensemble: &PathEnsemble,
    scenario: &ScenarioSpec,
    set_a: &SetA,
    t_indices: &[usize],
    slack: Option<f64>,
) -> Result<LdpReport> {
    let tau_star = scenario.tau_star()?;
    let bounds = sandwich_bounds(&tau_star, set_a)?;
    let decay = empirical_decay_rate(ensemble, set_a, t_indices)?;
    if let Some(s) = slack {
        if !(s.is_finite() && s >= 0.0) {
            return Err(Error::invalid_param("slack must be finite and nonnegative"));
        }
    }
    let se = decay.extrapolated.as_ref().map_or(0.0, |e| e.se);
    let slack = slack.unwrap_or(3.0 * se + 0.02);

    let mut notes = Vec::new();
    if bounds.envelope_weakened {
        notes.push(
            "upper bound crosses the lower-envelope region of the rate function; \
             it may be loose"
                .to_string(),
        );
    }
    if !bounds.lower.is_finite() {
        notes.push("no exposed growth rate inside the target set; the floor is vacuous".to_string());
    }
    let verdict = if let Some(ext) = &decay.extrapolated {
        match bounds.upper {
            Bound::NegInfinity => {
                notes.push(format!(
                    "rate function is infinite on the closure of {set_a}, yet occupancy \
                     was observed (extrapolated exponent {:.4})",
                    ext.rho
                ));
                Verdict::Fail
            }
            Bound::Finite(u) => {
                let upper_ok = ext.rho <= u + slack;
                let lower_ok = match bounds.lower {
                    Bound::NegInfinity => true,
                    Bound::Finite(l) => ext.rho >= l - slack,
                };
                if !upper_ok {
                    notes.push(format!(
                        "extrapolated exponent {:.4} exceeds the ceiling {u:.4} + slack {slack:.4}",
                        ext.rho
                    ));
                }
                if !lower_ok {
                    if let Bound::Finite(l) = bounds.lower {
                        notes.push(format!(
                            "extrapolated exponent {:.4} falls below the floor {l:.4} - slack {slack:.4}",
                            ext.rho
                        ));
                    }
                }
                if upper_ok && lower_ok {
                    Verdict::Pass
                } else {
                    Verdict::Fail
                }
            }
        }
    } else if let Some(ceiling) = decay.rule_of_three {
        match bounds.lower {
            Bound::Finite(l) if ceiling < l - slack => {
                notes.push(format!(
                    "no occupancy observed, and the zero-success ceiling {ceiling:.4} already \
                     contradicts the floor {l:.4}"
                ));
                Verdict::Fail
            }
            _ => {
                notes.push(
                    "no occupancy observed at any sampled time; upper bound respected, not tight"
                        .to_string(),
                );
                Verdict::Pass
            }
        }
    } else {
        notes.push("too few times with occupancy to extrapolate a decay exponent".to_string());
        Verdict::Indeterminate
    };
    let one_sided =
        decay.rule_of_three.is_some() || !bounds.lower.is_finite() || bounds.envelope_weakened;
    Ok(LdpReport {
        set_a: *set_a,
        rows: decay.rows,
        extrapolated: decay.extrapolated,
        rule_of_three: decay.rule_of_three,
        lower_bound: bounds.lower,
        upper_bound: bounds.upper,
        envelope_weakened_upper: bounds.envelope_weakened,
        one_sided,
        slack,
        verdict,
        notes,
    })
}
