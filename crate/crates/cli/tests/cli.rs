//! End-to-end runs of the compiled binary: every verb, every exit code.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::LazyLock;

use multiscale::ensemble::{generate_with_workers, ProcessModel};
use multiscale::estimator::estimate_scaling_function;
use multiscale::grid::TimeGrid;

const BISCALE_TOML: &str = r#"
[run]
seed = 42
n_reps = 2000

[model]
kind = "biscale_det"
h = 0.6
b = 1.0
a = 0.5

[grid]
kind = "geometric"
t0 = 10.0
ratio = 10.0
n = 5

[scenario]
kind = "biscale"
h = 0.6
b = 1.0
a = 0.5

[ldp]
t_indices = [0, 1, 2, 3, 4]

[ldp.set_a]
lo = 0.9
hi = 1.1
open_lo = false
open_hi = false
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_multiscale"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn workdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("multiscale-cli-tests").join(name);
    if dir.exists() {
        fs::remove_dir_all(&dir).unwrap();
    }
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path
}

/// One simulated biscale ensemble shared by the read-only tests.
static FIXTURE: LazyLock<PathBuf> = LazyLock::new(|| {
    let dir = workdir("fixture");
    let config = write_config(&dir, BISCALE_TOML);
    let out = run(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "fixture simulate failed: {}", stderr(&out));
    dir
});

fn parse_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(str::to_owned).collect();
    let rows = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect();
    (header, rows)
}

#[test]
fn simulate_is_deterministic_across_worker_counts() {
    let dir = workdir("workers");
    let config = write_config(&dir, BISCALE_TOML);
    for (sub, workers) in [("w1", "1"), ("w8", "8")] {
        let out_dir = dir.join(sub);
        let out = run(&[
            "simulate",
            "--config",
            config.to_str().unwrap(),
            "--workers",
            workers,
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
    }
    let one = fs::read(dir.join("w1/ensemble.bin")).unwrap();
    let eight = fs::read(dir.join("w8/ensemble.bin")).unwrap();
    assert_eq!(one, eight);

    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("w1/ensemble.json")).unwrap()).unwrap();
    assert_eq!(meta["schema_version"], 1);
    assert_eq!(meta["seed"], 42);
    assert_eq!(meta["n_reps"], 2000);
    assert_eq!(meta["model"]["kind"], "biscale_det");
    assert!(meta["wall_seconds"].is_number());
}

#[test]
fn tau_csv_matches_in_memory_estimate() {
    let dir = FIXTURE.clone();
    let out_dir = workdir("tau");
    let out = run(&[
        "tau",
        "--config",
        dir.join("run.toml").to_str().unwrap(),
        "--ensemble",
        dir.join("ensemble.bin").to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let (header, rows) = parse_csv(&out_dir.join("tau.csv"));
    assert_eq!(header, ["q", "tau_hat", "stderr", "r_squared", "tau_theory"]);
    assert_eq!(rows[0], ["0", "0", "0", "1", "0"]);

    let model = ProcessModel::BiscaleDet { h: 0.6, b: 1.0, a: 0.5 };
    let grid = TimeGrid::geometric(10.0, 10.0, 5).unwrap();
    let ens = generate_with_workers(&model, &grid, 42, 2000, 1).unwrap();
    let est = estimate_scaling_function(&ens, None).unwrap();
    assert_eq!(rows.len(), est.q_grid.len());
    for (row, (&q, &tau)) in rows.iter().zip(est.q_grid.iter().zip(&est.tau_hat)) {
        assert_eq!(row[0].parse::<f64>().unwrap(), q);
        assert_eq!(row[1].parse::<f64>().unwrap(), tau, "q = {q}");
    }
    let theory: Vec<f64> = rows.iter().map(|r| r[4].parse().unwrap()).collect();
    assert_eq!(theory[2], 0.3);
    assert_eq!(*theory.last().unwrap(), 3.5);
}

#[test]
fn corrupted_ensemble_is_rejected_by_checksum() {
    let dir = FIXTURE.clone();
    let out_dir = workdir("corrupt");
    let mut bytes = fs::read(dir.join("ensemble.bin")).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x40;
    let bad = out_dir.join("ensemble.bin");
    fs::write(&bad, bytes).unwrap();

    let out = run(&[
        "tau",
        "--config",
        dir.join("run.toml").to_str().unwrap(),
        "--ensemble",
        bad.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("checksum"), "{}", stderr(&out));
}

#[test]
fn missing_seed_names_the_field() {
    let dir = workdir("noseed");
    let stripped: String = BISCALE_TOML
        .lines()
        .filter(|l| !l.starts_with("seed"))
        .collect::<Vec<_>>()
        .join("\n");
    let config = write_config(&dir, &stripped);
    let out = run(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("run.seed (or --seed)"), "{}", stderr(&out));
}

#[test]
fn conjugate_scenario_reports_exposed_points() {
    let dir = workdir("conj");
    let config = write_config(&dir, BISCALE_TOML);
    let out = run(&[
        "conjugate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let (header, rows) = parse_csv(&dir.join("tau_star.csv"));
    assert_eq!(header[..4], ["x", "tau_star", "is_infinite", "is_exposed"]);
    let cell = |x: f64| {
        rows.iter()
            .find(|r| (r[0].parse::<f64>().unwrap() - x).abs() < 1e-12)
            .unwrap_or_else(|| panic!("no row at x = {x}"))
            .clone()
    };
    let at_h = cell(0.6);
    assert_eq!(at_h[1].parse::<f64>().unwrap(), 0.0);
    assert_eq!(at_h[3], "1");
    let at_b = cell(1.0);
    assert_eq!(at_b[1].parse::<f64>().unwrap(), 0.5);
    assert_eq!(at_b[3], "1");
    let below = cell(0.3);
    assert_eq!(below[1], "inf");
    assert_eq!(below[2], "1");
}

#[test]
fn nonconvex_tau_csv_needs_repair_flag() {
    let dir = workdir("repair");
    let csv = dir.join("tau.csv");
    fs::write(&csv, "q,tau_hat\n0,0\n1,0.8\n2,1.5\n3,2.6\n").unwrap();

    let out = run(&["conjugate", "--tau-csv", csv.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("--repair"), "{}", stderr(&out));

    let out = run(&[
        "conjugate",
        "--tau-csv",
        csv.to_str().unwrap(),
        "--repair",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let (header, rows) = parse_csv(&dir.join("tau_star.csv"));
    assert_eq!(header[..2], ["x", "tau_star"]);
    assert!(!rows.is_empty());
}

#[test]
fn ldp_exit_code_tracks_the_verdict() {
    let dir = FIXTURE.clone();
    let ensemble = dir.join("ensemble.bin");
    let case = |name: &str, edit: fn(&str) -> String| -> (i32, PathBuf) {
        let out_dir = workdir(name);
        let config = write_config(&out_dir, &edit(BISCALE_TOML));
        let out = run(&[
            "ldp",
            "--config",
            config.to_str().unwrap(),
            "--ensemble",
            ensemble.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        (code(&out), out_dir)
    };

    let (pass, out_dir) = case("ldp-pass", |t| t.to_owned());
    assert_eq!(pass, 0);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("ldp.json")).unwrap()).unwrap();
    assert_eq!(report["verdict"], "pass");
    assert!(out_dir.join("ldp.csv").exists());

    // steep scenario predicts decay far faster than the data shows
    let (fail, _) = case("ldp-fail", |t| t.replace("a = 0.5", "a = 2.0"));
    assert_eq!(fail, 1);

    // a single occupied time cannot support an extrapolated exponent
    let (indet, _) = case("ldp-indet", |t| {
        t.replace("t_indices = [0, 1, 2, 3, 4]", "t_indices = [4]")
    });
    assert_eq!(indet, 2);

    // a target set the paths never enter is still consistent with a fast
    // predicted decay: one-sided pass
    let (empty, _) = case("ldp-empty", |t| t.replace("lo = 0.9", "lo = 1.2").replace("hi = 1.1", "hi = 1.4"));
    assert_eq!(empty, 0);
}

#[test]
fn reproduce_emits_figure_series() {
    let dir = workdir("figures");
    let out = run(&["reproduce", "fig3", "--out", dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let (tau_header, tau_rows) = parse_csv(&dir.join("fig3_tau.csv"));
    assert_eq!(tau_header, ["q", "tau"]);
    assert!(tau_rows.len() > 100);
    let (star_header, _) = parse_csv(&dir.join("fig3_tau_star.csv"));
    assert_eq!(star_header[..2], ["x", "tau_star"]);

    let out = run(&["reproduce", "fig9", "--out", dir.to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("unknown figure id"), "{}", stderr(&out));
}
