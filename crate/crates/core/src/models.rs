//! Toy processes whose moment scaling is known in closed form.
//!
//! The deterministic-branch models pick one of a few power-law values at
//! every grid time independently; their scaling functions have exact kinks,
//! which makes them the reference targets for the estimator. The mixture
//! model replaces the branch values with fractional Brownian paths so the
//! same regime-switching idea produces a process with continuous paths.

use rand::RngExt;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fgn::FbmSampler;
use crate::grid::TimeGrid;
use crate::rng::{spawn_lane_rng, LANE_FBM_ALT, LANE_FBM_BASE, LANE_SWITCH};

fn check_exponents(h: f64, b: f64, a: f64) -> Result<()> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid_param("base exponent must be positive"));
    }
    if !(b > h && b.is_finite()) {
        return Err(Error::invalid_param("burst exponent must exceed the base exponent"));
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::invalid_param("rarity exponent must be positive"));
    }
    Ok(())
}

fn check_times_above_one(grid: &TimeGrid) -> Result<()> {
    if grid.times().first().is_none_or(|&t| t <= 1.0) {
        return Err(Error::InvalidGrid("branch probabilities need every grid time > 1".into()));
    }
    Ok(())
}

/// X(t) = t^h with probability 1 - t^{-a}, t^b with probability t^{-a},
/// independently at each grid time. E|X(t)|^q = t^{qh}(1 - t^{-a}) + t^{qb-a}.
pub fn simulate_biscale_det(
    h: f64,
    b: f64,
    a: f64,
    grid: &TimeGrid,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    check_exponents(h, b, a)?;
    check_times_above_one(grid)?;
    Ok(grid
        .times()
        .iter()
        .map(|&t| {
            let u: f64 = rng.random();
            if u < t.powf(-a) {
                t.powf(b)
            } else {
                t.powf(h)
            }
        })
        .collect())
}

/// Three branches t^h, t^{(h+b)/2}, t^b with probabilities
/// 1 - t^{-a/2} - t^{-a}, t^{-a/2}, t^{-a}. The middle branch never shows up
/// in the scaling function: its moment contribution t^{q(h+b)/2 - a/2} is
/// dominated by the other two everywhere.
pub fn simulate_triscale_det(
    h: f64,
    b: f64,
    a: f64,
    grid: &TimeGrid,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    check_exponents(h, b, a)?;
    check_times_above_one(grid)?;
    for &t in grid.times() {
        if t.powf(-0.5 * a) + t.powf(-a) > 1.0 {
            return Err(Error::InvalidGrid(format!(
                "branch probabilities exceed 1 at t = {t}; drop the small times or raise a"
            )));
        }
    }
    Ok(grid
        .times()
        .iter()
        .map(|&t| {
            let u: f64 = rng.random();
            let p_top = t.powf(-a);
            if u < p_top {
                t.powf(b)
            } else if u < p_top + t.powf(-0.5 * a) {
                t.powf(0.5 * (h + b))
            } else {
                t.powf(h)
            }
        })
        .collect())
}

/// One mixture path: the observed values and the regime indicator at each
/// grid time (true where the burst path was read).
#[derive(Debug, Clone, PartialEq)]
pub struct MixturePath {
    pub values: Vec<f64>,
    pub switched: Vec<bool>,
}

/// Regime mixture of two fractional Brownian motions: at time t_n the path
/// reads B_b(t_n) with probability t_n^{-a} and B_H(t_n) otherwise,
/// independently across n. The two fBm paths and the regime draws come from
/// three dedicated substreams, so changing `a` alone keeps both underlying
/// paths fixed and only re-thresholds the regime draws.
pub struct MixtureSimulator {
    a: f64,
    grid: TimeGrid,
    base: FbmSampler,
    burst: FbmSampler,
}

impl MixtureSimulator {
    pub fn new(h: f64, b: f64, a: f64, grid: &TimeGrid) -> Result<Self> {
        check_exponents(h, b, a)?;
        if b >= 1.0 {
            return Err(Error::invalid_param("burst exponent must be a Hurst index in (0, 1)"));
        }
        let delta = grid
            .delta()
            .ok_or_else(|| Error::InvalidGrid("the mixture needs a uniform grid".into()))?;
        if delta < 1.0 {
            return Err(Error::InvalidGrid(
                "regime probabilities need grid times >= 1, so spacing >= 1".into(),
            ));
        }
        Ok(MixtureSimulator {
            a,
            grid: grid.clone(),
            base: FbmSampler::new(h, grid.len(), delta)?,
            burst: FbmSampler::new(b, grid.len(), delta)?,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn path(&self, seed: u64, replication: u64) -> MixturePath {
        let base = self.base.sample(&mut spawn_lane_rng(seed, replication, LANE_FBM_BASE));
        let burst = self.burst.sample(&mut spawn_lane_rng(seed, replication, LANE_FBM_ALT));
        let mut switch_rng = spawn_lane_rng(seed, replication, LANE_SWITCH);
        let n = self.grid.len();
        let mut values = Vec::with_capacity(n);
        let mut switched = Vec::with_capacity(n);
        for i in 0..n {
            let t = self.grid.times()[i];
            let u: f64 = switch_rng.random();
            let s = u < t.powf(-self.a);
            values.push(if s { burst[i] } else { base[i] });
            switched.push(s);
        }
        MixturePath { values, switched }
    }
}

/// One-shot convenience over [`MixtureSimulator`].
pub fn simulate_fbm_mixture(
    h: f64,
    b: f64,
    a: f64,
    grid: &TimeGrid,
    seed: u64,
    replication: u64,
) -> Result<MixturePath> {
    Ok(MixtureSimulator::new(h, b, a, grid)?.path(seed, replication))
}
