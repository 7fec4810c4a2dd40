//! Path ensembles: many independent replications of one model on one grid,
//! reproducible from (model, grid, seed) alone and storable in a
//! checksummed single-file format.
//!
//! Replication r always draws from the substream family indexed by r, never
//! from a shared sequential stream, so the ensemble is bit-identical however
//! many workers generate it.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::models::{simulate_biscale_det, simulate_triscale_det, MixtureSimulator};
use crate::rng::{spawn_lane_rng, LANE_MAIN};
use crate::supou::{simulate_supou, CharacteristicQuadruple, SupOuSimConfig};

/// A simulatable process. Grid-independent parameters only; the grid is
/// supplied alongside so one model can run on several grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProcessModel {
    /// Two deterministic branches t^h and t^b, the burst branch hit with
    /// probability t^{-a}.
    BiscaleDet { h: f64, b: f64, a: f64 },
    /// Three deterministic branches; the middle one is invisible in the
    /// scaling function.
    TriscaleDet { h: f64, b: f64, a: f64 },
    /// Regime mixture of two fractional Brownian motions.
    FbmMixture { h: f64, b: f64, a: f64 },
    /// Superposition of mean-reverting components (values of Y, not the
    /// integrated process).
    SupOu { quadruple: CharacteristicQuadruple, m_components: usize, burn_in: Option<f64> },
}

/// Model with its per-ensemble state prepared once (covariance setups and
/// the like), shared read-only by all replications.
enum Prepared {
    BiscaleDet { h: f64, b: f64, a: f64 },
    TriscaleDet { h: f64, b: f64, a: f64 },
    FbmMixture(MixtureSimulator),
    SupOu(SupOuSimConfig),
}

impl ProcessModel {
    fn prepare(&self, grid: &TimeGrid) -> Result<Prepared> {
        match self {
            ProcessModel::BiscaleDet { h, b, a } => {
                // run the parameter and grid checks once up front
                simulate_biscale_det(*h, *b, *a, grid, &mut spawn_lane_rng(0, 0, LANE_MAIN))?;
                Ok(Prepared::BiscaleDet { h: *h, b: *b, a: *a })
            }
            ProcessModel::TriscaleDet { h, b, a } => {
                simulate_triscale_det(*h, *b, *a, grid, &mut spawn_lane_rng(0, 0, LANE_MAIN))?;
                Ok(Prepared::TriscaleDet { h: *h, b: *b, a: *a })
            }
            ProcessModel::FbmMixture { h, b, a } => {
                Ok(Prepared::FbmMixture(MixtureSimulator::new(*h, *b, *a, grid)?))
            }
            ProcessModel::SupOu { quadruple, m_components, burn_in } => {
                let config = SupOuSimConfig {
                    quadruple: *quadruple,
                    m_components: *m_components,
                    grid: grid.clone(),
                    burn_in: *burn_in,
                };
                config.validate()?;
                Ok(Prepared::SupOu(config))
            }
        }
    }

    /// One replication's path at the grid times.
    pub fn simulate_path(
        &self,
        grid: &TimeGrid,
        seed: u64,
        replication: u64,
    ) -> Result<Vec<f64>> {
        simulate_prepared(&self.prepare(grid)?, grid, seed, replication)
    }
}

/// Independent replications of one model, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    model: ProcessModel,
    grid: TimeGrid,
    seed: u64,
    n_reps: usize,
    values: Vec<f64>,
}

/// Header of the on-disk format; readable without loading the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleHeader {
    pub format_version: u32,
    pub model: ProcessModel,
    pub grid: TimeGrid,
    pub seed: u64,
    pub n_reps: usize,
    /// FNV-1a (64-bit, hex) over the data section bytes.
    pub data_fnv1a: String,
}

pub const FORMAT_VERSION: u32 = 1;

/// Generate sequentially (equivalent to one worker).
pub fn generate(
    model: &ProcessModel,
    grid: &TimeGrid,
    seed: u64,
    n_reps: usize,
) -> Result<PathEnsemble> {
    let prepared = model.prepare(grid)?;
    check_reps(n_reps)?;
    let mut values = Vec::with_capacity(n_reps * grid.len());
    for rep in 0..n_reps {
        values.extend(simulate_prepared(&prepared, grid, seed, rep as u64)?);
    }
    Ok(PathEnsemble { model: model.clone(), grid: grid.clone(), seed, n_reps, values })
}

/// Generate on a private thread pool. Replications map to substreams by
/// index, so any worker count yields the identical ensemble.
pub fn generate_with_workers(
    model: &ProcessModel,
    grid: &TimeGrid,
    seed: u64,
    n_reps: usize,
    workers: usize,
) -> Result<PathEnsemble> {
    if workers == 0 {
        return Err(Error::invalid_param("need at least one worker"));
    }
    let prepared = model.prepare(grid)?;
    check_reps(n_reps)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid_param(format!("thread pool: {e}")))?;
    let rows: Vec<Vec<f64>> = pool.install(|| {
        (0..n_reps)
            .into_par_iter()
            .map(|rep| simulate_prepared(&prepared, grid, seed, rep as u64))
            .collect::<Result<_>>()
    })?;
    let mut values = Vec::with_capacity(n_reps * grid.len());
    for row in rows {
        values.extend(row);
    }
    Ok(PathEnsemble { model: model.clone(), grid: grid.clone(), seed, n_reps, values })
}

fn check_reps(n_reps: usize) -> Result<()> {
    if n_reps == 0 {
        return Err(Error::invalid_param("need at least one replication"));
    }
    if n_reps as u64 > crate::rng::MAX_REPLICATION {
        return Err(Error::invalid_param("replication count exceeds the substream space"));
    }
    Ok(())
}

fn simulate_prepared(
    prepared: &Prepared,
    grid: &TimeGrid,
    seed: u64,
    rep: u64,
) -> Result<Vec<f64>> {
    match prepared {
        Prepared::BiscaleDet { h, b, a } => {
            simulate_biscale_det(*h, *b, *a, grid, &mut spawn_lane_rng(seed, rep, LANE_MAIN))
        }
        Prepared::TriscaleDet { h, b, a } => {
            simulate_triscale_det(*h, *b, *a, grid, &mut spawn_lane_rng(seed, rep, LANE_MAIN))
        }
        Prepared::FbmMixture(sim) => Ok(sim.path(seed, rep).values),
        Prepared::SupOu(config) => Ok(simulate_supou(config, seed, rep)?.values),
    }
}

impl PathEnsemble {
    /// Assemble from already simulated rows (all of length grid.len()).
    pub fn from_rows(
        model: ProcessModel,
        grid: TimeGrid,
        seed: u64,
        rows: &[Vec<f64>],
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::invalid_param("need at least one replication"));
        }
        let width = grid.len();
        let mut values = Vec::with_capacity(rows.len() * width);
        for row in rows {
            if row.len() != width {
                return Err(Error::Format(format!(
                    "row length {} does not match grid length {width}",
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        Ok(PathEnsemble { model, grid, seed, n_reps: rows.len(), values })
    }

    pub fn model(&self) -> &ProcessModel {
        &self.model
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_reps(&self) -> usize {
        self.n_reps
    }

    pub fn row(&self, rep: usize) -> &[f64] {
        let w = self.grid.len();
        &self.values[rep * w..(rep + 1) * w]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.grid.len())
    }

    /// All replications' values at one grid time.
    pub fn column(&self, time_index: usize) -> Vec<f64> {
        assert!(time_index < self.grid.len(), "time index out of range");
        (0..self.n_reps).map(|r| self.row(r)[time_index]).collect()
    }

    fn data_section(&self) -> String {
        let mut body = String::new();
        for row in self.rows() {
            let mut first = true;
            for v in row {
                if !first {
                    body.push(',');
                }
                body.push_str(&format!("{v}"));
                first = false;
            }
            body.push('\n');
        }
        body
    }

    pub fn header(&self) -> EnsembleHeader {
        EnsembleHeader {
            format_version: FORMAT_VERSION,
            model: self.model.clone(),
            grid: self.grid.clone(),
            seed: self.seed,
            n_reps: self.n_reps,
            data_fnv1a: format!("{:016x}", fnv1a64(self.data_section().as_bytes())),
        }
    }

    /// One JSON header line, then one CSV row per replication.
    pub fn save<W: Write>(&self, mut writer: W) -> Result<()> {
        let body = self.data_section();
        let header = EnsembleHeader {
            format_version: FORMAT_VERSION,
            model: self.model.clone(),
            grid: self.grid.clone(),
            seed: self.seed,
            n_reps: self.n_reps,
            data_fnv1a: format!("{:016x}", fnv1a64(body.as_bytes())),
        };
        let header_line =
            serde_json::to_string(&header).map_err(|e| Error::Format(e.to_string()))?;
        writer.write_all(header_line.as_bytes())?;
        writer.write_all(b"\n")?;
        writer.write_all(body.as_bytes())?;
        Ok(())
    }

    pub fn save_to_path<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        self.save(std::io::BufWriter::new(File::create(path)?))
    }

    /// Load and verify: the checksum must match and the row shape must agree
    /// with the header.
    pub fn load<R: Read>(reader: R) -> Result<Self> {
        let mut reader = BufReader::new(reader);
        let mut header_line = String::new();
        reader.read_line(&mut header_line)?;
        let header: EnsembleHeader = serde_json::from_str(header_line.trim_end())
            .map_err(|e| Error::Format(format!("bad header: {e}")))?;
        if header.format_version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported format version {}",
                header.format_version
            )));
        }
        let mut body = String::new();
        reader.read_to_string(&mut body)?;
        let found = format!("{:016x}", fnv1a64(body.as_bytes()));
        if found != header.data_fnv1a {
            return Err(Error::ChecksumMismatch { expected: header.data_fnv1a, found });
        }
        let width = header.grid.len();
        let mut values = Vec::with_capacity(header.n_reps * width);
        for (i, line) in body.lines().enumerate() {
            let start = values.len();
            for field in line.split(',') {
                let v: f64 = field
                    .parse()
                    .map_err(|_| Error::Format(format!("row {i}: bad value {field:?}")))?;
                values.push(v);
            }
            if values.len() - start != width {
                return Err(Error::Format(format!(
                    "row {i} has {} values, grid has {width}",
                    values.len() - start
                )));
            }
        }
        if values.len() != header.n_reps * width {
            return Err(Error::Format(format!(
                "expected {} rows, found {}",
                header.n_reps,
                values.len() / width.max(1)
            )));
        }
        Ok(PathEnsemble {
            model: header.model,
            grid: header.grid,
            seed: header.seed,
            n_reps: header.n_reps,
            values,
        })
    }

    pub fn load_from_path<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::load(File::open(path)?)
    }
}

/// Parse only the header line of a saved ensemble.
pub fn read_header<R: Read>(reader: R) -> Result<EnsembleHeader> {
    let mut reader = BufReader::new(reader);
    let mut header_line = String::new();
    reader.read_line(&mut header_line)?;
    serde_json::from_str(header_line.trim_end())
        .map_err(|e| Error::Format(format!("bad header: {e}")))
}

/// FNV-1a, 64-bit.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}
