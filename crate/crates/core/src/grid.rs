//! Time grids on which paths are sampled.
//!
//! Rate-of-growth statistics divide by log t, so any grid point they consume
//! must satisfy t > 1. Geometric grids enforce that at construction; uniform
//! grids may start below t = 1 and the consuming estimator rejects the bad
//! indices instead.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridKind {
    Geometric { t0: f64, ratio: f64 },
    Arithmetic { delta: f64 },
}

/// Serialized form of a grid: its kind plus the point count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    #[serde(flatten)]
    pub kind: GridKind,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct TimeGrid {
    kind: GridKind,
    times: Vec<f64>,
}

impl TryFrom<GridSpec> for TimeGrid {
    type Error = Error;

    fn try_from(spec: GridSpec) -> Result<Self> {
        TimeGrid::from_kind(spec.kind, spec.n)
    }
}

impl From<TimeGrid> for GridSpec {
    fn from(grid: TimeGrid) -> Self {
        GridSpec { kind: grid.kind, n: grid.times.len() }
    }
}

impl TimeGrid {
    /// Geometric grid t_k = t0 * ratio^k, k = 0..n. Requires t0 > 1 and
    /// ratio > 1 so that every point is usable in log-t statistics, and
    /// n >= 2 so a slope can be fit through the points.
    pub fn geometric(t0: f64, ratio: f64, n: usize) -> Result<Self> {
        if !(t0 > 1.0) || !t0.is_finite() {
            return Err(Error::InvalidGrid(format!("geometric grid needs t0 > 1, got {t0}")));
        }
        if !(ratio > 1.0) || !ratio.is_finite() {
            return Err(Error::InvalidGrid(format!("geometric grid needs ratio > 1, got {ratio}")));
        }
        if n < 2 {
            return Err(Error::InvalidGrid(format!("geometric grid needs n >= 2, got {n}")));
        }
        let times = (0..n).map(|k| t0 * ratio.powi(k as i32)).collect();
        Ok(TimeGrid { kind: GridKind::Geometric { t0, ratio }, times })
    }

    /// Uniform grid t_k = k * delta, k = 1..=n.
    pub fn arithmetic(delta: f64, n: usize) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidGrid(format!("uniform grid needs delta > 0, got {delta}")));
        }
        if n == 0 {
            return Err(Error::InvalidGrid("uniform grid needs at least one point".into()));
        }
        let times = (1..=n).map(|k| k as f64 * delta).collect();
        Ok(TimeGrid { kind: GridKind::Arithmetic { delta }, times })
    }

    pub fn from_kind(kind: GridKind, n: usize) -> Result<Self> {
        match kind {
            GridKind::Geometric { t0, ratio } => Self::geometric(t0, ratio, n),
            GridKind::Arithmetic { delta } => Self::arithmetic(delta, n),
        }
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Step size for uniform grids.
    pub fn delta(&self) -> Option<f64> {
        match self.kind {
            GridKind::Arithmetic { delta } => Some(delta),
            GridKind::Geometric { .. } => None,
        }
    }

    /// log10(t_max / t_min): how many decades the grid spans.
    pub fn span_decades(&self) -> f64 {
        (self.times[self.len() - 1] / self.times[0]).log10()
    }

    /// Indices of grid points usable in rate-of-growth statistics (t > 1).
    pub fn indices_above_one(&self) -> Vec<usize> {
        self.times.iter().enumerate().filter(|(_, &t)| t > 1.0).map(|(i, _)| i).collect()
    }
}
