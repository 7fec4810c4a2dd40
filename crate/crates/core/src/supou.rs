//! Superpositions of Ornstein-Uhlenbeck processes with random reversion
//! rates.
//!
//! Each component mean-reverts at its own rate xi drawn from a mixing
//! distribution, and is driven by its own copy of a common noise rescaled in
//! time by xi. That rescaling makes the stationary variance of every
//! component equal, so the superposition has autocorrelation
//! E exp(-xi u) regardless of the component count: heavy mixing mass near
//! xi = 0 produces slow power-law decay.
//!
//! All drivers are centered, so paths fluctuate around a_drift alone. The OU
//! transition over one step is sampled exactly: exponential decay plus the
//! exact Gaussian transition law plus individually placed compound-Poisson
//! jumps. No Euler error enters anywhere.

use rand::RngExt;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp, Gamma, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::rng::{spawn_lane_rng, LANE_COMPONENT0, LANE_MIXING};

/// Largest expected jump count we will place one by one in a single window;
/// beyond it the window's jump contribution is replaced by a
/// moment-matched Gaussian and a warning is recorded.
const JUMP_BUDGET: f64 = 1e6;

/// Distribution of the mean-reversion rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MixingSpec {
    /// xi ~ Gamma(alpha, rate): density proportional to
    /// xi^{alpha - 1} exp(-rate xi). With alpha < 1 the mass near zero gives
    /// the superposition long memory.
    Gamma { alpha: f64, rate: f64 },
}

impl MixingSpec {
    pub fn validate(&self) -> Result<()> {
        let MixingSpec::Gamma { alpha, rate } = *self;
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::invalid_param("mixing shape alpha must be positive"));
        }
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::invalid_param("mixing rate must be positive"));
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        let MixingSpec::Gamma { alpha, .. } = *self;
        alpha
    }

    /// E exp(-xi u): the exact stationary autocorrelation of the
    /// superposition at lag u.
    pub fn correlation(&self, u: f64) -> f64 {
        let MixingSpec::Gamma { alpha, rate } = *self;
        (1.0 + u / rate).powf(-alpha)
    }
}

/// Draw `m` independent reversion rates.
pub fn sample_mixing(spec: &MixingSpec, m: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    spec.validate()?;
    if m == 0 {
        return Err(Error::invalid_param("need at least one mixing draw"));
    }
    let MixingSpec::Gamma { alpha, rate } = *spec;
    let gamma = Gamma::new(alpha, 1.0 / rate)
        .map_err(|e| Error::invalid_param(format!("mixing distribution: {e}")))?;
    Ok((0..m).map(|_| rng.sample(gamma)).collect())
}

/// Jump part of the driving noise. All variants are compound Poisson with
/// two-sided exponential jumps and are compensated, so the driver has mean
/// zero by construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LevyDriverSpec {
    None,
    /// Jumps of exponential magnitude `jump_mean`, positive with probability
    /// `p_pos`, negative otherwise.
    CompoundPoissonExp { intensity: f64, jump_mean: f64, p_pos: f64 },
    /// Positive jumps ~ Exp(mean_pos) with probability p_pos, negative jumps
    /// ~ -Exp(mean_neg) otherwise.
    CompoundPoissonTwoSided { intensity: f64, mean_pos: f64, mean_neg: f64, p_pos: f64 },
}

impl LevyDriverSpec {
    pub fn validate(&self) -> Result<()> {
        match self.jumps() {
            Option::None => Ok(()),
            Some(j) => {
                if !(j.intensity > 0.0 && j.intensity.is_finite()) {
                    return Err(Error::invalid_param("jump intensity must be positive"));
                }
                if !(j.mean_pos > 0.0 && j.mean_pos.is_finite())
                    || !(j.mean_neg > 0.0 && j.mean_neg.is_finite())
                {
                    return Err(Error::invalid_param("jump magnitudes must be positive"));
                }
                if !(0.0..=1.0).contains(&j.p_pos) {
                    return Err(Error::invalid_param("p_pos must lie in [0, 1]"));
                }
                Ok(())
            }
        }
    }

    pub fn jumps(&self) -> Option<JumpMix> {
        match *self {
            LevyDriverSpec::None => Option::None,
            LevyDriverSpec::CompoundPoissonExp { intensity, jump_mean, p_pos } => {
                Some(JumpMix { intensity, mean_pos: jump_mean, mean_neg: jump_mean, p_pos })
            }
            LevyDriverSpec::CompoundPoissonTwoSided { intensity, mean_pos, mean_neg, p_pos } => {
                Some(JumpMix { intensity, mean_pos, mean_neg, p_pos })
            }
        }
    }
}

/// Concrete two-sided exponential jump mixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpMix {
    pub intensity: f64,
    pub mean_pos: f64,
    pub mean_neg: f64,
    pub p_pos: f64,
}

impl JumpMix {
    pub fn mean_jump(&self) -> f64 {
        self.p_pos * self.mean_pos - (1.0 - self.p_pos) * self.mean_neg
    }

    /// E J^2; an Exp(mean) magnitude has second moment 2 mean^2.
    pub fn second_moment(&self) -> f64 {
        2.0 * (self.p_pos * self.mean_pos * self.mean_pos
            + (1.0 - self.p_pos) * self.mean_neg * self.mean_neg)
    }

    fn with_intensity_factor(&self, factor: f64) -> JumpMix {
        JumpMix { intensity: self.intensity * factor, ..*self }
    }
}

/// Characteristics of the common driving noise plus the mixing law:
/// deterministic drift, Gaussian variance, jump part, reversion-rate
/// distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicQuadruple {
    pub a_drift: f64,
    pub b_gauss: f64,
    pub levy_measure: LevyDriverSpec,
    pub pi: MixingSpec,
}

impl CharacteristicQuadruple {
    pub fn validate(&self) -> Result<()> {
        if !self.a_drift.is_finite() {
            return Err(Error::invalid_param("drift must be finite"));
        }
        if !(self.b_gauss >= 0.0 && self.b_gauss.is_finite()) {
            return Err(Error::invalid_param("gaussian variance must be nonnegative"));
        }
        self.levy_measure.validate()?;
        self.pi.validate()?;
        if self.b_gauss == 0.0 && self.levy_measure.jumps().is_none() {
            return Err(Error::invalid_param("noise is identically zero: need b_gauss > 0 or jumps"));
        }
        Ok(())
    }
}

/// One mean-reverting component with explicit (already rescaled) driver
/// parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuSpec {
    pub xi: f64,
    pub a_drift: f64,
    pub b_gauss: f64,
    pub jumps: Option<JumpMix>,
}

impl OuSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.xi > 0.0 && self.xi.is_finite()) {
            return Err(Error::invalid_param("reversion rate must be positive"));
        }
        if !self.a_drift.is_finite() {
            return Err(Error::invalid_param("drift must be finite"));
        }
        if !(self.b_gauss >= 0.0 && self.b_gauss.is_finite()) {
            return Err(Error::invalid_param("gaussian variance must be nonnegative"));
        }
        if let Some(j) = self.jumps {
            LevyDriverSpec::CompoundPoissonTwoSided {
                intensity: j.intensity,
                mean_pos: j.mean_pos,
                mean_neg: j.mean_neg,
                p_pos: j.p_pos,
            }
            .validate()?;
        }
        Ok(())
    }

    pub fn stationary_mean(&self) -> f64 {
        self.a_drift / self.xi
    }

    /// Gaussian part b/(2 xi) plus compensated-jump part
    /// intensity E J^2 / (2 xi).
    pub fn stationary_variance(&self) -> f64 {
        let jump_part = self.jumps.map_or(0.0, |j| j.intensity * j.second_moment());
        (self.b_gauss + jump_part) / (2.0 * self.xi)
    }
}

#[derive(Default)]
struct ComponentWarnings {
    short_burn_in: usize,
    jump_budget_hits: usize,
}

/// Accumulate the jump contributions over a window of length `len` ending at
/// the evaluation time: each jump J at distance d from the end contributes
/// J exp(-xi d), and the compensator removes the window's mean contribution.
fn jump_window(
    j: &JumpMix,
    xi: f64,
    len: f64,
    rng: &mut ChaCha8Rng,
    warnings: &mut ComponentWarnings,
) -> f64 {
    JumpPlan::new(j, xi, len).window(rng, warnings)
}

/// Per-window jump sampling with the window-constant quantities precomputed,
/// so repeated windows of the same length skip the distribution setup.
struct JumpPlan {
    len: f64,
    xi: f64,
    p_pos: f64,
    over_budget: bool,
    budget_sd: f64,
    poisson: Option<Poisson<f64>>,
    pos: Exp<f64>,
    neg: Exp<f64>,
    compensator: f64,
}

impl JumpPlan {
    fn new(j: &JumpMix, xi: f64, len: f64) -> JumpPlan {
        let expected = j.intensity * len;
        let kernel_mass = -f64::exp_m1(-xi * len) / xi;
        let over_budget = expected > JUMP_BUDGET;
        let budget_sd = if over_budget {
            (j.intensity * j.second_moment() * (-f64::exp_m1(-2.0 * xi * len)) / (2.0 * xi))
                .sqrt()
        } else {
            0.0
        };
        JumpPlan {
            len,
            xi,
            p_pos: j.p_pos,
            over_budget,
            budget_sd,
            poisson: (!over_budget)
                .then(|| Poisson::new(expected).expect("positive expected count")),
            pos: Exp::new(1.0 / j.mean_pos).expect("positive mean"),
            neg: Exp::new(1.0 / j.mean_neg).expect("positive mean"),
            compensator: j.intensity * j.mean_jump() * kernel_mass,
        }
    }

    fn window(&self, rng: &mut ChaCha8Rng, warnings: &mut ComponentWarnings) -> f64 {
        if self.over_budget {
            warnings.jump_budget_hits += 1;
            let z: f64 = rng.sample(StandardNormal);
            return self.budget_sd * z;
        }
        let count = rng.sample(self.poisson.expect("within budget")) as usize;
        let mut sum = 0.0;
        for _ in 0..count {
            let d: f64 = rng.random_range(0.0..self.len);
            let magnitude = if rng.random::<f64>() < self.p_pos {
                rng.sample(self.pos)
            } else {
                -rng.sample(self.neg)
            };
            sum += magnitude * (-self.xi * d).exp();
        }
        sum - self.compensator
    }
}

/// Advance the component by `delta`, sampling the transition exactly.
fn ou_step(
    spec: &OuSpec,
    v: f64,
    delta: f64,
    rng: &mut ChaCha8Rng,
    warnings: &mut ComponentWarnings,
) -> f64 {
    StepPlan::new(spec, delta).step(v, rng, warnings)
}

/// Exact transition over a fixed step, with the step-constant decay, drift
/// and noise scale precomputed. Long uniform-grid runs build one per
/// component instead of re-deriving them every step.
struct StepPlan {
    decay: f64,
    drift_add: f64,
    noise_sd: f64,
    jumps: Option<JumpPlan>,
}

impl StepPlan {
    fn new(spec: &OuSpec, delta: f64) -> StepPlan {
        StepPlan {
            decay: (-spec.xi * delta).exp(),
            drift_add: spec.a_drift * (-f64::exp_m1(-spec.xi * delta)) / spec.xi,
            noise_sd: if spec.b_gauss > 0.0 {
                (spec.b_gauss * (-f64::exp_m1(-2.0 * spec.xi * delta)) / (2.0 * spec.xi)).sqrt()
            } else {
                0.0
            },
            jumps: spec.jumps.as_ref().map(|j| JumpPlan::new(j, spec.xi, delta)),
        }
    }

    fn step(&self, v: f64, rng: &mut ChaCha8Rng, warnings: &mut ComponentWarnings) -> f64 {
        let mut next = v * self.decay + self.drift_add;
        if self.noise_sd > 0.0 {
            let z: f64 = rng.sample(StandardNormal);
            next += self.noise_sd * z;
        }
        if let Some(plan) = &self.jumps {
            next += plan.window(rng, warnings);
        }
        next
    }
}

/// Draw the component's stationary state. The Gaussian part is exact; the
/// jump part truncates the past at 40 relaxation times, which discards
/// weight exp(-40).
fn ou_stationary_init(spec: &OuSpec, rng: &mut ChaCha8Rng, warnings: &mut ComponentWarnings) -> f64 {
    let mut v = spec.stationary_mean();
    if spec.b_gauss > 0.0 {
        let z: f64 = rng.sample(StandardNormal);
        v += (spec.b_gauss / (2.0 * spec.xi)).sqrt() * z;
    }
    if let Some(j) = &spec.jumps {
        v += jump_window(j, spec.xi, 40.0 / spec.xi, rng, warnings);
    }
    v
}

fn ou_initial(
    spec: &OuSpec,
    burn_in: Option<f64>,
    rng: &mut ChaCha8Rng,
    warnings: &mut ComponentWarnings,
) -> Result<f64> {
    match burn_in {
        Option::None => Ok(ou_stationary_init(spec, rng, warnings)),
        Some(t) => {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::invalid_param("burn-in length must be positive"));
            }
            if spec.xi * t < 10.0 {
                warnings.short_burn_in += 1;
            }
            // one exact transition of length t from zero
            Ok(ou_step(spec, 0.0, t, rng, warnings))
        }
    }
}

/// A simulated path: the state at time zero, the states at the grid times,
/// and any accuracy warnings accumulated along the way. The library never
/// prints; callers decide what to do with the warnings.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedPath {
    pub initial: f64,
    pub values: Vec<f64>,
    pub warnings: Vec<String>,
}

impl ComponentWarnings {
    fn render(&self, m: usize) -> Vec<String> {
        let mut out = Vec::new();
        if self.short_burn_in > 0 {
            out.push(format!(
                "{} of {m} components had burn-in shorter than 10 relaxation times; \
                 start-up bias possible, prefer stationary initialization",
                self.short_burn_in
            ));
        }
        if self.jump_budget_hits > 0 {
            out.push(format!(
                "{} jump windows exceeded the per-window budget and were replaced by \
                 moment-matched Gaussians",
                self.jump_budget_hits
            ));
        }
        out
    }
}

/// Simulate one component on a uniform grid. `burn_in = None` starts from
/// the stationary law; `Some(t)` starts from zero and evolves for `t` first.
pub fn simulate_ou_path(
    spec: &OuSpec,
    grid: &TimeGrid,
    burn_in: Option<f64>,
    rng: &mut ChaCha8Rng,
) -> Result<SimulatedPath> {
    spec.validate()?;
    let delta = grid
        .delta()
        .ok_or_else(|| Error::InvalidGrid("exact transitions need a uniform grid".into()))?;
    let mut warnings = ComponentWarnings::default();
    let initial = ou_initial(spec, burn_in, rng, &mut warnings)?;
    let plan = StepPlan::new(spec, delta);
    let mut values = Vec::with_capacity(grid.len());
    let mut v = initial;
    for _ in 0..grid.len() {
        v = plan.step(v, rng, &mut warnings);
        values.push(v);
    }
    Ok(SimulatedPath { initial, values, warnings: warnings.render(1) })
}

/// Full superposition request: common noise characteristics, component
/// count, sampling grid, optional burn-in (None = stationary start).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupOuSimConfig {
    pub quadruple: CharacteristicQuadruple,
    pub m_components: usize,
    pub grid: TimeGrid,
    pub burn_in: Option<f64>,
}

impl SupOuSimConfig {
    pub fn validate(&self) -> Result<()> {
        self.quadruple.validate()?;
        if self.m_components == 0 {
            return Err(Error::invalid_param("need at least one component"));
        }
        if self.m_components > MAX_COMPONENTS {
            return Err(Error::invalid_param(format!(
                "component count exceeds the substream space ({MAX_COMPONENTS})"
            )));
        }
        if self.grid.delta().is_none() {
            return Err(Error::InvalidGrid("exact transitions need a uniform grid".into()));
        }
        Ok(())
    }
}

/// Components draw from substreams LANE_COMPONENT0 + k, which must fit the
/// 16-bit lane field.
pub const MAX_COMPONENTS: usize = (1 << 16) - LANE_COMPONENT0 as usize;

/// Simulate the superposition at the grid times.
///
/// Each component's driver runs in time rescaled by its own xi: the
/// per-component Gaussian variance is xi b/m, the jump intensity xi
/// intensity/m, the drift xi a/m. Every component then has stationary
/// variance (b + intensity E J^2)/(2m) independent of xi, and the
/// superposition's autocorrelation is the mixing transform E exp(-xi u).
pub fn simulate_supou(config: &SupOuSimConfig, seed: u64, replication: u64) -> Result<SimulatedPath> {
    config.validate()?;
    let m = config.m_components;
    let xis = sample_mixing(
        &config.quadruple.pi,
        m,
        &mut spawn_lane_rng(seed, replication, LANE_MIXING),
    )?;
    let jumps = config.quadruple.levy_measure.jumps();
    let scale = 1.0 / m as f64;
    let mut warnings = ComponentWarnings::default();
    let mut initial = 0.0;
    let mut values = vec![0.0; config.grid.len()];
    let delta = config.grid.delta().expect("validated uniform grid");
    for (k, &xi) in xis.iter().enumerate() {
        let spec = OuSpec {
            xi,
            a_drift: xi * config.quadruple.a_drift * scale,
            b_gauss: xi * config.quadruple.b_gauss * scale,
            jumps: jumps.map(|j| j.with_intensity_factor(xi * scale)),
        };
        let mut rng = spawn_lane_rng(seed, replication, LANE_COMPONENT0 + k as u64);
        let mut v = ou_initial(&spec, config.burn_in, &mut rng, &mut warnings)?;
        initial += v;
        let plan = StepPlan::new(&spec, delta);
        for slot in values.iter_mut() {
            v = plan.step(v, &mut rng, &mut warnings);
            *slot += v;
        }
    }
    Ok(SimulatedPath { initial, values, warnings: warnings.render(m) })
}

/// Trapezoid cumulative integral of a path sampled on a uniform grid,
/// starting from zero: X(t_n) for t_n = n delta, given Y(0) = `initial` and
/// Y(t_1..t_n) = `values`.
pub fn integrate_path(initial: f64, values: &[f64], delta: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    let mut prev = initial;
    for &y in values {
        acc += 0.5 * delta * (prev + y);
        out.push(acc);
        prev = y;
    }
    out
}

/// Limit family of the integrated superposition under self-similar scaling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitCase {
    /// Gaussian part present, heavy mixing: fractional Brownian limit.
    FractionalBrownian,
    /// Light mixing (alpha > 1): ordinary Brownian limit.
    Brownian,
    /// Pure-jump driver whose index is below 1 + alpha: stable limit with
    /// independent increments.
    StableIndependent,
    /// Pure-jump driver with index between 1 + alpha and 2: stable limit
    /// with dependent increments.
    StableDependent,
}

/// Self-similarity index of the integrated superposition, with the limit
/// family it belongs to.
///
/// `beta_driver` is the activity index of the pure-jump part; pass None to
/// infer it from the quadruple (compound Poisson drivers have index 0).
/// Boundary parameter choices sit outside every covered case and return an
/// error naming the boundary.
pub fn theoretical_h(
    quadruple: &CharacteristicQuadruple,
    beta_driver: Option<f64>,
) -> Result<(f64, LimitCase)> {
    quadruple.validate()?;
    let alpha = quadruple.pi.alpha();
    let beta = beta_driver.unwrap_or(0.0);
    if !(0.0..2.0).contains(&beta) {
        return Err(Error::invalid_param("driver activity index must lie in [0, 2)"));
    }
    if alpha == 1.0 {
        return Err(Error::UncoveredBoundary("mixing exponent alpha = 1".into()));
    }
    if alpha > 1.0 {
        return Ok((0.5, LimitCase::Brownian));
    }
    if quadruple.b_gauss > 0.0 {
        return Ok((1.0 - 0.5 * alpha, LimitCase::FractionalBrownian));
    }
    if beta == 1.0 + alpha {
        return Err(Error::UncoveredBoundary("driver index equal to 1 + alpha".into()));
    }
    if beta < 1.0 + alpha {
        Ok((1.0 / (1.0 + alpha), LimitCase::StableIndependent))
    } else {
        Ok((1.0 - alpha / beta, LimitCase::StableDependent))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::spawn_replication_rng;
    use crate::special::reg_lower_gamma;
    use crate::stats::{mean, variance};

    fn gamma_mixing(alpha: f64, rate: f64) -> MixingSpec {
        MixingSpec::Gamma { alpha, rate }
    }

    fn gaussian_quadruple(alpha: f64) -> CharacteristicQuadruple {
        CharacteristicQuadruple {
            a_drift: 0.0,
            b_gauss: 1.0,
            levy_measure: LevyDriverSpec::None,
            pi: gamma_mixing(alpha, 1.0),
        }
    }

    #[test]
    fn mixing_mean_matches_gamma_law() {
        let mut rng = spawn_replication_rng(31, 0);
        let draws = sample_mixing(&gamma_mixing(0.5, 1.0), 100_000, &mut rng).unwrap();
        let m = mean(&draws);
        // mean alpha/rate, variance alpha/rate^2
        let se = (0.5f64 / draws.len() as f64).sqrt();
        assert!((m - 0.5).abs() < 3.0 * se, "mixing mean {m}");
        assert!(draws.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn mixing_small_quantile_matches_the_gamma_integral() {
        let mut rng = spawn_replication_rng(32, 0);
        let draws = sample_mixing(&gamma_mixing(0.5, 1.0), 100_000, &mut rng).unwrap();
        let p = reg_lower_gamma(0.5, 0.01);
        let freq = draws.iter().filter(|&&x| x <= 0.01).count() as f64 / draws.len() as f64;
        let se = (p * (1.0 - p) / draws.len() as f64).sqrt();
        assert!((freq - p).abs() < 3.0 * se, "P(xi <= 0.01): {freq} vs {p}");
    }

    #[test]
    fn mixing_rejects_degenerate_requests() {
        let mut rng = spawn_replication_rng(33, 0);
        assert!(sample_mixing(&gamma_mixing(0.5, 1.0), 0, &mut rng).is_err());
        assert!(sample_mixing(&gamma_mixing(0.0, 1.0), 4, &mut rng).is_err());
        assert!(sample_mixing(&gamma_mixing(0.5, 0.0), 4, &mut rng).is_err());
    }

    #[test]
    fn gaussian_component_matches_stationary_law() {
        let spec = OuSpec { xi: 1.0, a_drift: 0.0, b_gauss: 1.0, jumps: None };
        let grid = TimeGrid::arithmetic(0.5, 20_000).unwrap();
        let mut rng = spawn_replication_rng(34, 0);
        let path = simulate_ou_path(&spec, &grid, None, &mut rng).unwrap();
        assert!(path.warnings.is_empty());
        let v = variance(&path.values);
        let want = spec.stationary_variance();
        assert!((v - want).abs() < 0.06 * want, "stationary variance {v}, want {want}");
        let rho = lag_correlation(&path.values, 1);
        let want_rho = (-0.5f64).exp();
        assert!((rho - want_rho).abs() < 0.04, "lag correlation {rho}, want {want_rho}");
        let rho2 = lag_correlation(&path.values, 2);
        assert!((rho2 - (-1.0f64).exp()).abs() < 0.04);
    }

    #[test]
    fn wide_steps_decorrelate() {
        // xi delta = 5 > 4
        let spec = OuSpec { xi: 10.0, a_drift: 0.0, b_gauss: 1.0, jumps: None };
        let grid = TimeGrid::arithmetic(0.5, 4000).unwrap();
        let mut rng = spawn_replication_rng(35, 0);
        let path = simulate_ou_path(&spec, &grid, None, &mut rng).unwrap();
        assert!(lag_correlation(&path.values, 1).abs() < 0.05);
    }

    #[test]
    fn jump_component_matches_stationary_variance_and_mean() {
        let jumps = JumpMix { intensity: 2.0, mean_pos: 1.0, mean_neg: 0.5, p_pos: 0.7 };
        let spec = OuSpec { xi: 1.0, a_drift: 0.0, b_gauss: 0.0, jumps: Some(jumps) };
        // E J = 0.7 - 0.15 = 0.55, E J^2 = 2(0.7 + 0.3 * 0.25) = 1.55
        assert!((jumps.mean_jump() - 0.55).abs() < 1e-15);
        assert!((jumps.second_moment() - 1.55).abs() < 1e-15);
        let want_var = 2.0 * 1.55 / 2.0;
        assert!((spec.stationary_variance() - want_var).abs() < 1e-15);
        let grid = TimeGrid::arithmetic(0.5, 40_000).unwrap();
        let mut rng = spawn_replication_rng(36, 0);
        let path = simulate_ou_path(&spec, &grid, None, &mut rng).unwrap();
        let m = mean(&path.values);
        let v = variance(&path.values);
        assert!(m.abs() < 0.05, "compensated driver should center the path, mean {m}");
        assert!((v - want_var).abs() < 0.12 * want_var, "variance {v}, want {want_var}");
    }

    #[test]
    fn burn_in_flags_slow_components_and_converges() {
        let spec = OuSpec { xi: 0.05, a_drift: 0.0, b_gauss: 1.0, jumps: None };
        let grid = TimeGrid::arithmetic(1.0, 10).unwrap();
        let mut rng = spawn_replication_rng(37, 0);
        let short = simulate_ou_path(&spec, &grid, Some(1.0), &mut rng).unwrap();
        assert_eq!(short.warnings.len(), 1, "{:?}", short.warnings);
        let long = simulate_ou_path(&spec, &grid, Some(500.0), &mut rng).unwrap();
        assert!(long.warnings.is_empty());
        // long burn-in reproduces the stationary variance across replications
        let mut finals = Vec::new();
        for rep in 0..4000 {
            let mut rng = spawn_replication_rng(38, rep);
            finals.push(simulate_ou_path(&spec, &grid, Some(500.0), &mut rng).unwrap().initial);
        }
        let want = spec.stationary_variance();
        let got = variance(&finals);
        let se = want * (2.0 / 4000f64).sqrt();
        assert!((got - want).abs() < 3.0 * se, "burned-in variance {got}, want {want}");
    }

    #[test]
    fn superposition_variance_is_component_count_free() {
        for m in [200, 400] {
            let config = SupOuSimConfig {
                quadruple: gaussian_quadruple(0.5),
                m_components: m,
                grid: TimeGrid::arithmetic(1.0, 1).unwrap(),
                burn_in: None,
            };
            let n_reps = 3000;
            let mut initials = Vec::with_capacity(n_reps);
            for rep in 0..n_reps {
                initials.push(simulate_supou(&config, 40, rep as u64).unwrap().initial);
            }
            let got = variance(&initials);
            let want = 0.5;
            let se = want * (2.0 / n_reps as f64).sqrt();
            assert!((got - want).abs() < 3.0 * se, "m={m}: Var Y = {got}, want {want}");
            let m0 = mean(&initials);
            assert!(m0.abs() < 3.0 * (want / n_reps as f64).sqrt(), "m={m}: mean {m0}");
        }
    }

    #[test]
    fn superposition_correlation_matches_the_mixing_transform() {
        let pi = gamma_mixing(0.5, 1.0);
        let config = SupOuSimConfig {
            quadruple: gaussian_quadruple(0.5),
            m_components: 1000,
            grid: TimeGrid::arithmetic(1.0, 4000).unwrap(),
            burn_in: None,
        };
        let mut acc = [0.0f64; 3];
        let n_reps = 4;
        for rep in 0..n_reps {
            let path = simulate_supou(&config, 41, rep).unwrap();
            assert!(path.warnings.is_empty());
            for (i, &lag) in [1usize, 5, 10].iter().enumerate() {
                acc[i] += lag_correlation(&path.values, lag);
            }
        }
        for (i, &lag) in [1usize, 5, 10].iter().enumerate() {
            let got = acc[i] / n_reps as f64;
            let want = pi.correlation(lag as f64);
            assert!((got - want).abs() < 0.05, "lag {lag}: correlation {got}, want {want}");
        }
    }

    #[test]
    fn single_component_superposition_is_a_plain_ou_path() {
        let quadruple = CharacteristicQuadruple {
            a_drift: 0.3,
            b_gauss: 0.8,
            levy_measure: LevyDriverSpec::CompoundPoissonExp {
                intensity: 1.5,
                jump_mean: 1.0,
                p_pos: 0.5,
            },
            pi: gamma_mixing(0.5, 1.0),
        };
        let grid = TimeGrid::arithmetic(0.5, 32).unwrap();
        let config = SupOuSimConfig {
            quadruple,
            m_components: 1,
            grid: grid.clone(),
            burn_in: None,
        };
        let (seed, rep) = (42, 7);
        let sup = simulate_supou(&config, seed, rep).unwrap();
        let xi = sample_mixing(&quadruple.pi, 1, &mut spawn_lane_rng(seed, rep, LANE_MIXING))
            .unwrap()[0];
        let spec = OuSpec {
            xi,
            a_drift: xi * quadruple.a_drift,
            b_gauss: xi * quadruple.b_gauss,
            jumps: quadruple.levy_measure.jumps().map(|j| j.with_intensity_factor(xi)),
        };
        let mut rng = spawn_lane_rng(seed, rep, LANE_COMPONENT0);
        let single = simulate_ou_path(&spec, &grid, None, &mut rng).unwrap();
        assert_eq!(sup.initial, single.initial);
        assert_eq!(sup.values, single.values);
    }

    #[test]
    fn config_validation_rejects_silent_noise_and_bad_grids() {
        let mut quadruple = gaussian_quadruple(0.5);
        quadruple.b_gauss = 0.0;
        let config = SupOuSimConfig {
            quadruple,
            m_components: 10,
            grid: TimeGrid::arithmetic(1.0, 4).unwrap(),
            burn_in: None,
        };
        assert!(config.validate().is_err());
        let config = SupOuSimConfig {
            quadruple: gaussian_quadruple(0.5),
            m_components: 0,
            grid: TimeGrid::arithmetic(1.0, 4).unwrap(),
            burn_in: None,
        };
        assert!(config.validate().is_err());
        let config = SupOuSimConfig {
            quadruple: gaussian_quadruple(0.5),
            m_components: 10,
            grid: TimeGrid::geometric(10.0, 10.0, 4).unwrap(),
            burn_in: None,
        };
        assert!(config.validate().is_err());
    }

    #[test]
    fn trapezoid_integral_is_exact_on_constants_and_linear() {
        let y = vec![2.0; 10];
        let x = integrate_path(2.0, &y, 0.5);
        for (k, &v) in x.iter().enumerate() {
            let t = (k + 1) as f64 * 0.5;
            assert!((v - 2.0 * t).abs() < 1e-12);
        }
        let y1: Vec<f64> = (1..=8).map(|k| k as f64).collect();
        let y2: Vec<f64> = (1..=8).map(|k| (k as f64).sin()).collect();
        let combined: Vec<f64> = y1.iter().zip(&y2).map(|(a, b)| 3.0 * a - 2.0 * b).collect();
        let xa = integrate_path(0.0, &y1, 1.0);
        let xb = integrate_path(0.0, &y2, 1.0);
        let xc = integrate_path(0.0, &combined, 1.0);
        for i in 0..8 {
            assert!((xc[i] - (3.0 * xa[i] - 2.0 * xb[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn limit_exponent_covers_the_four_regimes() {
        let gaussian = gaussian_quadruple(0.5);
        assert_eq!(theoretical_h(&gaussian, None).unwrap(), (0.75, LimitCase::FractionalBrownian));
        assert_eq!(
            theoretical_h(&gaussian_quadruple(1.5), None).unwrap(),
            (0.5, LimitCase::Brownian)
        );
        let jumps_only = CharacteristicQuadruple {
            a_drift: 0.0,
            b_gauss: 0.0,
            levy_measure: LevyDriverSpec::CompoundPoissonExp {
                intensity: 1.0,
                jump_mean: 1.0,
                p_pos: 0.5,
            },
            pi: gamma_mixing(0.5, 1.0),
        };
        let (h, case) = theoretical_h(&jumps_only, None).unwrap();
        assert!((h - 1.0 / 1.5).abs() < 1e-15);
        assert_eq!(case, LimitCase::StableIndependent);
        let (h, case) = theoretical_h(&jumps_only, Some(1.8)).unwrap();
        assert!((h - (1.0 - 0.5 / 1.8)).abs() < 1e-15);
        assert_eq!(case, LimitCase::StableDependent);
    }

    #[test]
    fn limit_exponent_names_the_uncovered_boundaries() {
        assert!(matches!(
            theoretical_h(&gaussian_quadruple(1.0), None),
            Err(Error::UncoveredBoundary(_))
        ));
        let jumps_only = CharacteristicQuadruple {
            a_drift: 0.0,
            b_gauss: 0.0,
            levy_measure: LevyDriverSpec::CompoundPoissonExp {
                intensity: 1.0,
                jump_mean: 1.0,
                p_pos: 0.5,
            },
            pi: gamma_mixing(0.5, 1.0),
        };
        assert!(matches!(
            theoretical_h(&jumps_only, Some(1.5)),
            Err(Error::UncoveredBoundary(_))
        ));
        assert!(theoretical_h(&jumps_only, Some(2.0)).is_err());
    }

    #[test]
    fn configs_round_trip_through_json() {
        let config = SupOuSimConfig {
            quadruple: CharacteristicQuadruple {
                a_drift: 0.1,
                b_gauss: 0.0,
                levy_measure: LevyDriverSpec::CompoundPoissonTwoSided {
                    intensity: 2.0,
                    mean_pos: 1.0,
                    mean_neg: 0.5,
                    p_pos: 0.7,
                },
                pi: gamma_mixing(0.7, 2.0),
            },
            m_components: 64,
            grid: TimeGrid::arithmetic(1.0, 100).unwrap(),
            burn_in: Some(25.0),
        };
        let text = serde_json::to_string(&config).unwrap();
        let back: SupOuSimConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(config, back);
    }

    fn lag_correlation(x: &[f64], lag: usize) -> f64 {
        let m = mean(x);
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..x.len() {
            let d = x[i] - m;
            den += d * d;
            if i + lag < x.len() {
                num += d * (x[i + lag] - m);
            }
        }
        num / den
    }
}
