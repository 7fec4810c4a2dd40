//! Run configuration: one TOML file fully determines a run.

use std::path::Path;

use multiscale::ensemble::ProcessModel;
use multiscale::grid::TimeGrid;
use multiscale::ldp::SetA;
use multiscale::scenarios::ScenarioSpec;
use serde::Deserialize;

use crate::{CliError, CliResult};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub run: Option<RunSection>,
    pub model: Option<ProcessModel>,
    pub grid: Option<TimeGrid>,
    pub estimate: Option<EstimateSection>,
    pub scenario: Option<ScenarioSpec>,
    pub ldp: Option<LdpSection>,
    pub conjugate: Option<ConjugateSection>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub seed: Option<u64>,
    pub n_reps: Option<usize>,
    pub workers: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateSection {
    pub q_grid: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LdpSection {
    pub set_a: SetA,
    pub t_indices: Vec<usize>,
    pub slack: Option<f64>,
}

/// Overrides for the conjugate output lattice; every field has a usable
/// default derived from the function itself.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConjugateSection {
    pub x_lo: Option<f64>,
    pub x_hi: Option<f64>,
    pub x_step: Option<f64>,
}

pub fn load(path: &Path) -> CliResult<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError(format!("config {}: {e}", path.display())))
}

/// Collects every missing field so one failed run names them all.
pub struct Required {
    missing: Vec<&'static str>,
}

impl Required {
    pub fn new() -> Self {
        Required { missing: Vec::new() }
    }

    pub fn field<T>(&mut self, value: Option<T>, name: &'static str) -> Option<T> {
        if value.is_none() {
            self.missing.push(name);
        }
        value
    }

    pub fn check(self) -> CliResult<()> {
        if self.missing.is_empty() {
            Ok(())
        } else {
            Err(CliError(format!("config missing required fields: {}", self.missing.join(", "))))
        }
    }
}
