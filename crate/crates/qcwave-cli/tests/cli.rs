use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn qcwave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcwave")).args(args).output().unwrap()
}

/// Write `body` as a config in `dir` and return its path.
fn config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn run(sub: &str, cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![sub, cfg.to_str().unwrap(), "--out-dir", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    qcwave(&args)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

const SMALL_EVOLVE: &str = "scenario = \"evolve\"
x_min = -10.0
x_max = 10.0
n_points = 256
sigma = 1.0
dt = 0.01
steps = 50
residual_every = 10
";

const SMALL_TRAJECTORIES: &str = "scenario = \"trajectories\"
seed = 3
x_min = -15.0
x_max = 15.0
n_points = 512
sigma = 1.0
dt = 0.01
steps = 100
record_every = 10
n_particles = 2000
n_bins = 30
";

#[test]
fn validate_accepts_every_shipped_scenario() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut seen = 0;
    for entry in fs::read_dir(root).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let o = qcwave(&["validate", path.to_str().unwrap()]);
            assert!(o.status.success(), "{}: {}", path.display(), stderr(&o));
            seen += 1;
        }
    }
    assert!(seen >= 9);
}

#[test]
fn out_of_range_lambda_is_a_located_config_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), "bad.toml", "scenario = \"spectrum\"\nlambda = 1.5\n");
    let out = tmp.path().join("out");
    let o = run("run", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("line 2"), "{msg}");
    assert!(msg.contains("lambda"), "{msg}");
    assert!(!out.exists(), "no outputs may be written on a config error");
}

#[test]
fn unknown_keys_and_bad_syntax_are_config_errors() {
    let tmp = TempDir::new().unwrap();
    let unknown = config(tmp.path(), "unknown.toml", "scenario = \"evolve\"\nsteps = 10\nwobble = 3\n");
    let o = qcwave(&["validate", unknown.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("wobble"));

    let broken = config(tmp.path(), "broken.toml", "scenario = \"evolve\"\ndt = = 1\n");
    assert_eq!(qcwave(&["validate", broken.to_str().unwrap()]).status.code(), Some(2));

    let missing = tmp.path().join("nope.toml");
    assert_eq!(qcwave(&["validate", missing.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn empty_sweep_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(
        tmp.path(),
        "sweep.toml",
        "scenario = \"lambda_sweep\"\nsweep_scenario = \"spectrum\"\nlambdas = []\n",
    );
    let out = tmp.path().join("out");
    let o = run("sweep", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("empty"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn evolve_writes_outputs_and_manifest() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), "evolve.toml", SMALL_EVOLVE);
    let out = tmp.path().join("out");
    let o = run("run", &cfg, &out, &["--snapshots", "5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for name in ["field_final.csv", "trace.csv", "q_final.csv", "summary.json", "manifest.json"] {
        assert!(out.join(name).is_file(), "missing {name}");
    }
    let snapshots = fs::read_dir(&out)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().starts_with("snapshot_"))
        .count();
    assert_eq!(snapshots, 6, "initial state plus five snapshots");

    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["scenario"], "evolve");
    assert_eq!(manifest["status"], "ok");
    assert_eq!(manifest["config"]["n_points"], 256);
    assert!(manifest["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
    assert!(manifest["outputs"].as_array().unwrap().iter().any(|f| f == "trace.csv"));
}

#[test]
fn every_csv_is_rectangular_with_a_header() {
    let tmp = TempDir::new().unwrap();
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let jobs = [
        ("evolve", config(tmp.path(), "evolve.toml", SMALL_EVOLVE), "run"),
        ("trajectories", config(tmp.path(), "traj.toml", SMALL_TRAJECTORIES), "run"),
        ("spectrum", root.join("spectrum.toml"), "run"),
        ("epr", root.join("epr.toml"), "run"),
        ("pointer", root.join("measure_pointer.toml"), "run"),
        ("dot", root.join("dot_predict.toml"), "run"),
        ("sweep", root.join("sweep_spectrum.toml"), "sweep"),
    ];
    for (name, cfg, sub) in jobs {
        let out = tmp.path().join(name);
        let o = run(sub, &cfg, &out, &[]);
        assert!(o.status.success(), "{name}: {}", stderr(&o));
        let mut csvs = 0;
        for entry in fs::read_dir(&out).unwrap() {
            let path = entry.unwrap().path();
            if path.extension().is_none_or(|e| e != "csv") {
                continue;
            }
            csvs += 1;
            let text = fs::read_to_string(&path).unwrap();
            let mut lines = text.lines();
            let header = lines.next().unwrap_or_default();
            assert!(
                header.split(',').all(|h| !h.is_empty() && h.parse::<f64>().is_err()),
                "{}: header {header:?}",
                path.display()
            );
            let names: std::collections::HashSet<&str> = header.split(',').collect();
            let width = header.split(',').count();
            assert_eq!(names.len(), width, "{}: duplicate columns", path.display());
            for (i, line) in lines.enumerate() {
                assert_eq!(line.split(',').count(), width, "{} row {}", path.display(), i + 1);
            }
        }
        assert!(csvs > 0, "{name} wrote no CSV");
    }
}

#[test]
fn spectrum_at_half_lambda_halves_the_ground_level() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(
        tmp.path(),
        "spec.toml",
        "scenario = \"spectrum\"\nlength = 1.0\nn_max = 3\nlambda = 0.5\n",
    );
    let out = tmp.path().join("out");
    assert!(run("run", &cfg, &out, &[]).status.success());
    let text = fs::read_to_string(out.join("levels.csv")).unwrap();
    let first: Vec<f64> = text.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    let pi2 = std::f64::consts::PI.powi(2);
    assert_eq!(first[0], 1.0);
    assert!((first[3] - pi2 / 4.0).abs() < 1e-12, "{}", first[3]);
}

#[test]
fn stern_gerlach_fractions_follow_the_born_weights() {
    let tmp = TempDir::new().unwrap();
    let cfg = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/measure_sg.toml");
    let out = tmp.path().join("out");
    let o = run("run", &cfg, &out, &["--seed", "42"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary = json(&out.join("summary.json"));
    for f in summary["branch_fractions"].as_array().unwrap() {
        assert!((f.as_f64().unwrap() - 0.5).abs() <= 0.015, "{f}");
    }
    let rho = json(&out.join("rho_summary.json"));
    assert_eq!(rho["offdiag_maxabs"], 0.0);
}

#[test]
fn same_seed_gives_identical_bytes() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), "traj.toml", SMALL_TRAJECTORIES);
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    assert!(run("run", &cfg, &a, &[]).status.success());
    assert!(run("run", &cfg, &b, &[]).status.success());
    assert!(run("run", &cfg, &c, &["--seed", "4"]).status.success());
    for name in ["trajectories.csv", "field_final.csv", "trace.csv", "summary.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    assert_ne!(fs::read(a.join("trajectories.csv")).unwrap(), fs::read(c.join("trajectories.csv")).unwrap());
}

#[test]
fn failed_check_exits_four_unless_checks_are_off() {
    let tmp = TempDir::new().unwrap();
    let body = format!("{SMALL_TRAJECTORIES}chi2_tolerance = 1e-300\n");
    let cfg = config(tmp.path(), "strict.toml", &body);
    let out = tmp.path().join("strict");
    let o = run("run", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stderr(&o).contains("equivariance_chi2"));
    assert_eq!(json(&out.join("manifest.json"))["status"], "checks_failed");

    let out = tmp.path().join("lenient");
    let o = run("run", &cfg, &out, &["--no-checks"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(json(&out.join("manifest.json"))["checks_enabled"], false);
}

#[test]
fn norm_drift_abort_exits_three_with_manifest_only() {
    let tmp = TempDir::new().unwrap();
    let body = format!("{SMALL_EVOLVE}norm_tolerance = 1e-300\n");
    let cfg = config(tmp.path(), "drift.toml", &body);
    let out = tmp.path().join("out");
    let o = run("run", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let names: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names, vec!["manifest.json".to_string()]);
    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["status"], "numeric_abort");
    assert!(manifest["error"].as_str().unwrap().contains("drift"));
}

#[test]
fn unwritable_output_directory_exits_one() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), "evolve.toml", SMALL_EVOLVE);
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "not a directory").unwrap();
    let o = run("run", &cfg, &blocker.join("out"), &[]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}
