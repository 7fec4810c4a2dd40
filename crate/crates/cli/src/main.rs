//! Command-line front end. Every verb reads one config file, writes files
//! under --out, and reports through the exit code: 0 pass, 1 statistical
//! fail, 2 indeterminate, 3 config or input error.

mod config;
mod figures;

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use multiscale::conjugate::{conjugate_piecewise_linear, ConjugateResult};
use multiscale::ensemble::{generate_with_workers, EnsembleHeader, PathEnsemble, ProcessModel};
use multiscale::estimator::{default_q_grid, empirical_moment, estimate_scaling_function};
use multiscale::grid::{GridSpec, TimeGrid};
use multiscale::ldp::{verify_sandwich, Verdict};
use multiscale::pwl::{PwlConvex, Tail};
use multiscale::scaling::ScalingFunction;
use multiscale::stats::isotonic_nondecreasing;
use serde::Serialize;

use config::Required;

pub struct CliError(pub String);

pub type CliResult<T> = Result<T, CliError>;

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<multiscale::Error> for CliError {
    fn from(e: multiscale::Error) -> Self {
        CliError(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "multiscale",
    version,
    about = "Simulation and verification toolkit for multiscaling and intermittent moment growth"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate an ensemble and persist it with JSON metadata
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides run.seed from the config
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides run.workers; never affects the output bytes
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Estimate the scaling function of a persisted ensemble
    Tau {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        ensemble: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Conjugate a scenario's scaling function, or an estimated tau CSV
    Conjugate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Estimated scaling CSV (columns q and tau_hat or tau) to conjugate
        #[arg(long)]
        tau_csv: Option<PathBuf>,
        /// Project estimated slopes onto nondecreasing order first
        #[arg(long)]
        repair: bool,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Compare empirical decay rates against the sandwich bounds
    Ldp {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        ensemble: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Emit the data series behind one reference figure
    Reproduce {
        /// One of fig2, fig3, fig4, fig5, fig6, fig7
        figure: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 3,
            };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Simulate { config, seed, workers, out } => {
            cmd_simulate(&config, seed, workers, &out)
        }
        Command::Tau { config, ensemble, out } => cmd_tau(&config, &ensemble, &out),
        Command::Conjugate { config, tau_csv, repair, out } => {
            cmd_conjugate(config.as_deref(), tau_csv.as_deref(), repair, &out)
        }
        Command::Ldp { config, ensemble, out } => cmd_ldp(&config, &ensemble, &out),
        Command::Reproduce { figure, seed, out } => {
            std::fs::create_dir_all(&out)
                .map_err(CliError::from)
                .and_then(|()| figures::reproduce(&figure, seed.unwrap_or(figures::DEFAULT_SEED), &out))
                .map(|files| {
                    for f in &files {
                        println!("wrote {}", f.display());
                    }
                    0
                })
        }
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            3
        }
    }
}

#[derive(Serialize)]
struct Metadata {
    schema_version: u32,
    #[serde(flatten)]
    header: EnsembleHeader,
    wall_seconds: f64,
}

fn cmd_simulate(
    config: &Path,
    seed_flag: Option<u64>,
    workers_flag: Option<usize>,
    out: &Path,
) -> CliResult<i32> {
    let cfg = config::load(config)?;
    let run = cfg.run.unwrap_or_default();
    let mut need = Required::new();
    let model = need.field(cfg.model, "[model]");
    let grid = need.field(cfg.grid, "[grid]");
    let n_reps = need.field(run.n_reps, "run.n_reps");
    let seed = need.field(seed_flag.or(run.seed), "run.seed (or --seed)");
    need.check()?;
    let (model, grid, n_reps, seed) =
        (model.unwrap(), grid.unwrap(), n_reps.unwrap(), seed.unwrap());
    let workers = workers_flag.or(run.workers).unwrap_or(1);
    if workers == 0 {
        return Err(CliError("worker count must be at least 1".into()));
    }

    std::fs::create_dir_all(out)?;
    let start = Instant::now();
    let ensemble = generate_with_workers(&model, &grid, seed, n_reps, workers)?;
    let wall_seconds = start.elapsed().as_secs_f64();

    let data_path = out.join("ensemble.bin");
    ensemble.save_to_path(&data_path)?;
    let meta_path = out.join("ensemble.json");
    let metadata = Metadata { schema_version: 1, header: ensemble.header(), wall_seconds };
    serde_json::to_writer_pretty(BufWriter::new(File::create(&meta_path)?), &metadata)?;

    println!(
        "simulated {n_reps} replications of {} on {} with seed {seed} ({workers} worker{}) in {wall_seconds:.2}s",
        model_name(&model),
        grid_summary(&grid),
        if workers == 1 { "" } else { "s" },
    );
    println!("wrote {} and {}", data_path.display(), meta_path.display());
    Ok(0)
}

fn model_name(model: &ProcessModel) -> &'static str {
    match model {
        ProcessModel::BiscaleDet { .. } => "biscale_det",
        ProcessModel::TriscaleDet { .. } => "triscale_det",
        ProcessModel::FbmMixture { .. } => "fbm_mixture",
        ProcessModel::SupOu { .. } => "sup_ou",
    }
}

fn grid_summary(grid: &TimeGrid) -> String {
    let times = grid.times();
    let kind = match GridSpec::from(grid.clone()).kind {
        multiscale::grid::GridKind::Geometric { .. } => "geometric",
        multiscale::grid::GridKind::Arithmetic { .. } => "arithmetic",
    };
    format!("a {kind} grid {}..{} ({} points)", times[0], times[times.len() - 1], times.len())
}

fn cmd_tau(config: &Path, ensemble: &Path, out: &Path) -> CliResult<i32> {
    let cfg = config::load(config)?;
    let ens = PathEnsemble::load_from_path(ensemble)?;
    let q_grid =
        cfg.estimate.unwrap_or_default().q_grid.unwrap_or_else(default_q_grid);

    // orders whose empirical moments overflow or vanish become NA rows
    // instead of sinking the whole run
    let usable = ens.grid().indices_above_one();
    let mut keep: Vec<f64> = Vec::new();
    let mut skipped: Vec<(f64, String)> = Vec::new();
    for &q in &q_grid {
        let mut reason = None;
        if q != 0.0 {
            for &i in &usable {
                match empirical_moment(&ens.column(i), q) {
                    Ok(m) if m.value > 0.0 => {}
                    Ok(_) => {
                        reason = Some(format!(
                            "empirical moment of order {q} vanished at t = {}",
                            ens.grid().times()[i]
                        ));
                        break;
                    }
                    Err(e) => {
                        reason = Some(e.to_string());
                        break;
                    }
                }
            }
        }
        match reason {
            Some(r) => skipped.push((q, r)),
            None => keep.push(q),
        }
    }
    if !keep.iter().any(|&q| q != 0.0) {
        return Err(CliError("no moment order in the grid is estimable on this ensemble".into()));
    }

    let est = estimate_scaling_function(&ens, Some(&keep))?;
    let theory = match &cfg.scenario {
        Some(spec) => spec.tau()?,
        None => None,
    };

    std::fs::create_dir_all(out)?;
    let csv_path = out.join("tau.csv");
    let mut w = BufWriter::new(File::create(&csv_path)?);
    if theory.is_some() {
        writeln!(w, "q,tau_hat,stderr,r_squared,tau_theory")?;
    } else {
        writeln!(w, "q,tau_hat,stderr,r_squared")?;
    }
    let mut next_kept = 0usize;
    for &q in &q_grid {
        let body = if skipped.iter().any(|(s, _)| *s == q) {
            "na,na,na".to_string()
        } else {
            let i = next_kept;
            next_kept += 1;
            format!("{},{},{}", est.tau_hat[i], est.stderr[i], est.r_squared[i])
        };
        match &theory {
            Some(sf) => {
                let v = sf.eval(q);
                let tail = if v.is_finite() { v.to_string() } else { "inf".to_string() };
                writeln!(w, "{q},{body},{tail}")?;
            }
            None => writeln!(w, "{q},{body}")?,
        }
    }
    w.flush()?;

    for (q, reason) in &skipped {
        eprintln!("warning: q = {q} skipped: {reason}");
    }
    for warning in &est.warnings {
        eprintln!("warning: {warning}");
    }
    println!(
        "estimated tau at {} orders ({} skipped) over t in [{}, {}]",
        est.q_grid.len(),
        skipped.len(),
        est.t_range.0,
        est.t_range.1
    );
    println!("wrote {}", csv_path.display());
    Ok(0)
}

fn cmd_conjugate(
    config: Option<&Path>,
    tau_csv: Option<&Path>,
    repair: bool,
    out: &Path,
) -> CliResult<i32> {
    let cfg = match config {
        Some(path) => config::load(path)?,
        None => config::RunConfig::default(),
    };
    let result = match (&cfg.scenario, tau_csv) {
        (Some(_), Some(_)) => {
            return Err(CliError(
                "both a [scenario] section and --tau-csv supplied; choose one input".into(),
            ))
        }
        (Some(spec), None) => spec.tau_star()?,
        (None, Some(path)) => conjugate_from_csv(path, repair)?,
        (None, None) => {
            return Err(CliError(
                "conjugate needs a [scenario] config section or --tau-csv".into(),
            ))
        }
    };

    let lattice_cfg = cfg.conjugate.unwrap_or_default();
    let mut structural: Vec<f64> = result.pieces().vertices();
    structural.extend(result.exposed_points());
    figures::sort_dedup(&mut structural);
    let lo = lattice_cfg.x_lo.unwrap_or_else(|| structural.first().copied().unwrap_or(0.0) - 0.5);
    let hi = lattice_cfg.x_hi.unwrap_or_else(|| structural.last().copied().unwrap_or(1.0) + 0.5);
    let step = lattice_cfg.x_step.unwrap_or(0.005);
    if !(lo < hi) || !(step > 0.0) {
        return Err(CliError(format!("bad conjugate lattice: lo {lo}, hi {hi}, step {step}")));
    }
    let n = ((hi - lo) / step).round() as usize;
    let mut xs: Vec<f64> = (0..=n).map(|i| lo + step * i as f64).collect();
    xs.extend(structural.iter().filter(|&&x| lo <= x && x <= hi));
    figures::sort_dedup(&mut xs);

    std::fs::create_dir_all(out)?;
    let csv_path = out.join("tau_star.csv");
    result.write_csv(BufWriter::new(File::create(&csv_path)?), &xs)?;
    let exposed: Vec<String> = result
        .exposed_points()
        .iter()
        .map(|&x| {
            let v = result.pieces().eval(x);
            format!("({x}, {v})")
        })
        .collect();
    println!("exposed points: {}", exposed.join(", "));
    println!("wrote {}", csv_path.display());
    Ok(0)
}

/// Rebuild a convex scaling function from an estimated tau CSV (optionally
/// projecting the slopes onto nondecreasing order) and conjugate exactly.
fn conjugate_from_csv(path: &Path, repair: bool) -> CliResult<ConjugateResult> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError(format!("{}: empty file", path.display())))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let q_col = cols
        .iter()
        .position(|c| *c == "q")
        .ok_or_else(|| CliError(format!("{}: no q column", path.display())))?;
    let tau_col = cols
        .iter()
        .position(|c| *c == "tau_hat" || *c == "tau")
        .ok_or_else(|| CliError(format!("{}: no tau_hat or tau column", path.display())))?;

    let mut pts: Vec<(f64, f64)> = Vec::new();
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let cell = |col: usize| -> CliResult<&str> {
            fields.get(col).copied().ok_or_else(|| {
                CliError(format!("{} line {}: missing column {col}", path.display(), k + 2))
            })
        };
        let tau_text = cell(tau_col)?;
        if tau_text == "na" || tau_text == "inf" {
            continue;
        }
        let parse = |text: &str, what: &str| -> CliResult<f64> {
            text.parse().map_err(|_| {
                CliError(format!(
                    "{} line {}: cannot parse {what} from {text:?}",
                    path.display(),
                    k + 2
                ))
            })
        };
        pts.push((parse(cell(q_col)?, "q")?, parse(tau_text, "tau")?));
    }
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("parsed values are finite"));
    if pts.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(CliError(format!("{}: duplicate q values", path.display())));
    }
    if pts.len() < 3 {
        return Err(CliError(format!(
            "{}: need at least three usable rows to form a convex shape",
            path.display()
        )));
    }
    if !pts.iter().any(|&(q, tau)| q.abs() <= 1e-12 && tau.abs() <= 1e-9) {
        return Err(CliError(format!(
            "{}: needs the q = 0 anchor row with tau(0) = 0",
            path.display()
        )));
    }

    let mut slopes = Vec::with_capacity(pts.len() - 1);
    let mut weights = Vec::with_capacity(pts.len() - 1);
    for w in pts.windows(2) {
        let dq = w[1].0 - w[0].0;
        slopes.push((w[1].1 - w[0].1) / dq);
        weights.push(dq);
    }
    let slopes = if repair { isotonic_nondecreasing(&slopes, &weights) } else { slopes };
    let interior: Vec<f64> = pts[1..pts.len() - 1].iter().map(|&(q, _)| q).collect();
    let pwl = PwlConvex::new(
        0.0,
        0.0,
        interior,
        slopes,
        Tail::Cut { at: pts[0].0 },
        Tail::Cut { at: pts[pts.len() - 1].0 },
    )
    .map_err(|e| match e {
        multiscale::Error::NotConvex(msg) => CliError(format!(
            "{msg}; pass --repair to project the estimated slopes onto nondecreasing order"
        )),
        other => CliError(other.to_string()),
    })?;
    Ok(conjugate_piecewise_linear(&ScalingFunction::new(pwl)?))
}

fn cmd_ldp(config: &Path, ensemble: &Path, out: &Path) -> CliResult<i32> {
    let cfg = config::load(config)?;
    let mut need = Required::new();
    let scenario = need.field(cfg.scenario, "[scenario]");
    let ldp = need.field(cfg.ldp, "[ldp]");
    need.check()?;
    let (scenario, ldp) = (scenario.unwrap(), ldp.unwrap());

    let ens = PathEnsemble::load_from_path(ensemble)?;
    let report = verify_sandwich(&ens, &scenario, &ldp.set_a, &ldp.t_indices, ldp.slack)?;

    std::fs::create_dir_all(out)?;
    let json_path = out.join("ldp.json");
    report.write_json(BufWriter::new(File::create(&json_path)?))?;
    let csv_path = out.join("ldp.csv");
    report.write_csv(BufWriter::new(File::create(&csv_path)?))?;

    let verdict = match report.verdict {
        Verdict::Pass => "pass",
        Verdict::Fail => "fail",
        Verdict::Indeterminate => "indeterminate",
    };
    println!(
        "A = {}: bounds [{}, {}], verdict {verdict}",
        report.set_a,
        report.lower_bound.as_f64(),
        report.upper_bound.as_f64()
    );
    for note in &report.notes {
        println!("note: {note}");
    }
    println!("wrote {} and {}", json_path.display(), csv_path.display());
    Ok(match report.verdict {
        Verdict::Pass => 0,
        Verdict::Fail => 1,
        Verdict::Indeterminate => 2,
    })
}
