//! Figure data series: each id emits the CSV curves behind one panel.
//! Plotting stays outside; these files carry every number a plot needs.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use multiscale::grid::TimeGrid;
use multiscale::models::MixtureSimulator;
use multiscale::scaling::ScalingFunction;
use multiscale::scenarios::ScenarioSpec;

use crate::{CliError, CliResult};

pub const DEFAULT_SEED: u64 = 0x6a11;

pub fn reproduce(figure: &str, seed: u64, out: &Path) -> CliResult<Vec<PathBuf>> {
    match figure {
        "fig2" => scenario_panel(out, "fig2", &ScenarioSpec::AllMomentsConverge { h: 0.625 }),
        "fig3" => scenario_panel(out, "fig3", &ScenarioSpec::Biscale { h: 0.6, b: 1.0, a: 0.5 }),
        "fig4" => scenario_panel(
            out,
            "fig4",
            &ScenarioSpec::FiniteWindow { h: 0.625, q_lo: -1.0, q_hi: 3.0 },
        ),
        "fig5" => scenario_panel(out, "fig5", &ScenarioSpec::SupouFiniteVar { h: 0.75, alpha: 0.5 }),
        "fig6" => mixture_series(out, "fig6_paths.csv", seed, MixtureColumn::Path),
        "fig7" => mixture_series(out, "fig7_rates.csv", seed, MixtureColumn::GrowthRate),
        other => Err(CliError(format!(
            "unknown figure id {other:?}; expected one of fig2, fig3, fig4, fig5, fig6, fig7"
        ))),
    }
}

/// Scaling function plus its conjugate, each on a lattice that contains the
/// structural points (kinks, exposed points, window edges) exactly.
fn scenario_panel(out: &Path, stem: &str, spec: &ScenarioSpec) -> CliResult<Vec<PathBuf>> {
    let tau = spec.tau()?.expect("panel scenarios all have closed-form scaling functions");
    let conj = spec.tau_star()?;

    let tau_path = out.join(format!("{stem}_tau.csv"));
    let mut w = BufWriter::new(File::create(&tau_path)?);
    writeln!(w, "q,tau")?;
    for q in tau_lattice(&tau) {
        let v = tau.eval(q);
        if v.is_finite() {
            writeln!(w, "{q},{v}")?;
        } else {
            writeln!(w, "{q},inf")?;
        }
    }
    w.flush()?;

    let star_path = out.join(format!("{stem}_tau_star.csv"));
    let exposed = conj.exposed_points();
    let mut xs = lattice(exposed[0] - 0.5, exposed[exposed.len() - 1] + 0.5, 0.005);
    xs.extend(conj.pieces().vertices());
    xs.extend(exposed.iter().copied());
    sort_dedup(&mut xs);
    let mut w = BufWriter::new(File::create(&star_path)?);
    conj.write_csv(&mut w, &xs)?;
    w.flush()?;

    Ok(vec![tau_path, star_path])
}

fn tau_lattice(tau: &ScalingFunction) -> Vec<f64> {
    let (lo, hi) = tau.domain();
    // half a unit beyond any finite window edge so the inf rows are visible
    let lo = if lo.is_finite() { lo - 0.5 } else { -1.5 };
    let hi = if hi.is_finite() { hi + 0.5 } else { 4.0 };
    let mut qs = lattice(lo, hi, 0.01);
    qs.extend(tau.pwl().vertices());
    qs.push(0.0);
    sort_dedup(&mut qs);
    qs
}

enum MixtureColumn {
    Path,
    GrowthRate,
}

/// Three replications of the regime-switching mixture for each switching
/// exponent, sharing seeds so the slow-a run switches wherever the fast-a
/// run does.
fn mixture_series(
    out: &Path,
    name: &str,
    seed: u64,
    column: MixtureColumn,
) -> CliResult<Vec<PathBuf>> {
    let grid = TimeGrid::arithmetic(1.0, 10_000)?;
    let path = out.join(name);
    let mut w = BufWriter::new(File::create(&path)?);
    match column {
        MixtureColumn::Path => writeln!(w, "a,replication,t,x")?,
        MixtureColumn::GrowthRate => writeln!(w, "a,replication,t,r")?,
    }
    for a in [0.8, 0.6] {
        let sim = MixtureSimulator::new(0.6, 0.8, a, &grid)?;
        for rep in 0..3u64 {
            let path_values = sim.path(seed, rep);
            for (k, &x) in path_values.values.iter().enumerate() {
                let t = grid.times()[k];
                match column {
                    MixtureColumn::Path => writeln!(w, "{a},{rep},{t},{x}")?,
                    MixtureColumn::GrowthRate => {
                        if t <= 1.0 {
                            continue;
                        }
                        if x == 0.0 {
                            writeln!(w, "{a},{rep},{t},na")?;
                        } else {
                            writeln!(w, "{a},{rep},{t},{}", x.abs().ln() / t.ln())?;
                        }
                    }
                }
            }
        }
    }
    w.flush()?;
    Ok(vec![path])
}

fn lattice(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|i| lo + step * i as f64).collect()
}

pub fn sort_dedup(xs: &mut Vec<f64>) {
    xs.sort_by(|a, b| a.partial_cmp(b).expect("lattice points are finite"));
    xs.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
}
