//! Scenario runner: parse a TOML config, validate every parameter, run the
//! scenario and write CSV/JSON artifacts plus a manifest.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 config error, 3 numeric abort,
//! 4 invariant check failed.

pub mod config;
pub mod plan;
pub mod run;

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use config::{ConfigError, ScenarioConfig};
use plan::{Overrides, Plan};
use run::{Artifacts, Check, RunError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_INVARIANT: i32 = 4;

pub const MANIFEST: &str = "manifest.json";
pub const SUMMARY: &str = "summary.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Run,
    Sweep,
    Validate,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub scenario: String,
    pub seed: u64,
    pub config: Value,
    pub started: String,
    pub finished: String,
    pub status: &'static str,
    pub error: Option<String>,
    pub outputs: Vec<String>,
    pub checks_enabled: bool,
    pub checks: Vec<Check>,
}

/// Outcome of [`run_file`] as seen from the command line.
#[derive(Debug)]
pub struct Report {
    pub code: i32,
    pub message: String,
    pub out_dir: Option<PathBuf>,
}

fn config_failure(path: &Path, e: ConfigError) -> Report {
    Report {
        code: EXIT_CONFIG,
        message: format!("{}: {e}", path.display()),
        out_dir: None,
    }
}

/// Parse and validate without running.
pub fn load(path: &Path, overrides: &Overrides, mode: Mode) -> Result<(ScenarioConfig, Plan), ConfigError> {
    let src = fs::read_to_string(path).map_err(|e| ConfigError {
        message: format!("cannot read config: {e}"),
        line: None,
        column: None,
    })?;
    let cfg = ScenarioConfig::parse(&src)?;
    let plan = match mode {
        Mode::Sweep => plan::build_sweep(&cfg, &src, overrides)?,
        Mode::Run | Mode::Validate => plan::build(&cfg, &src, overrides)?,
    };
    Ok((cfg, plan))
}

/// Config echo without unset keys.
fn echo(cfg: &ScenarioConfig) -> Value {
    match serde_json::to_value(cfg) {
        Ok(Value::Object(map)) => Value::Object(map.into_iter().filter(|(_, v)| !v.is_null()).collect()),
        Ok(other) => other,
        Err(_) => Value::Null,
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

fn write_all(dir: &Path, artifacts: &Artifacts) -> std::io::Result<Vec<String>> {
    fs::create_dir_all(dir)?;
    let mut names = Vec::with_capacity(artifacts.files.len() + 1);
    for (name, bytes) in &artifacts.files {
        fs::write(dir.join(name), bytes)?;
        names.push(name.clone());
    }
    let mut summary = serde_json::to_vec_pretty(&artifacts.summary)?;
    summary.push(b'\n');
    fs::write(dir.join(SUMMARY), summary)?;
    names.push(SUMMARY.to_string());
    Ok(names)
}

fn write_manifest(dir: &Path, manifest: &RunManifest) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let mut bytes = serde_json::to_vec_pretty(manifest)?;
    bytes.push(b'\n');
    fs::write(dir.join(MANIFEST), bytes)
}

/// Full `run`/`sweep`/`validate` pipeline for one config file.
pub fn run_file(path: &Path, overrides: &Overrides, mode: Mode) -> Report {
    let (cfg, plan) = match load(path, overrides, mode) {
        Ok(p) => p,
        Err(e) => return config_failure(path, e),
    };
    if mode == Mode::Validate {
        return Report {
            code: EXIT_OK,
            message: format!("{}: valid {} config", path.display(), plan.kind.name()),
            out_dir: None,
        };
    }
    let started = now();
    let result = run::execute(&plan);
    let mut manifest = RunManifest {
        tool: "qcwave",
        version: env!("CARGO_PKG_VERSION"),
        scenario: plan.kind.name().to_string(),
        seed: plan.seed,
        config: echo(&cfg),
        started,
        finished: String::new(),
        status: "ok",
        error: None,
        outputs: Vec::new(),
        checks_enabled: plan.checks,
        checks: Vec::new(),
    };
    let dir = plan.out_dir.clone();
    let (code, message) = match result {
        Ok(artifacts) => {
            let failed: Vec<&str> = artifacts.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
            let (code, message) = if failed.is_empty() {
                (EXIT_OK, format!("{} finished; outputs in {}", plan.kind.name(), dir.display()))
            } else {
                manifest.status = "checks_failed";
                (EXIT_INVARIANT, format!("invariant checks failed: {}", failed.join(", ")))
            };
            match write_all(&dir, &artifacts) {
                Ok(names) => manifest.outputs = names,
                Err(e) => {
                    return Report {
                        code: EXIT_IO,
                        message: format!("cannot write outputs: {e}"),
                        out_dir: Some(dir),
                    }
                }
            }
            manifest.checks = artifacts.checks;
            (code, message)
        }
        Err(e) => {
            let code = match e {
                RunError::Numeric(_) => EXIT_NUMERIC,
                RunError::Invariant(_) => EXIT_INVARIANT,
            };
            manifest.status = if code == EXIT_NUMERIC { "numeric_abort" } else { "invariant_failure" };
            manifest.error = Some(e.to_string());
            (code, e.to_string())
        }
    };
    manifest.finished = now();
    manifest.outputs.push(MANIFEST.to_string());
    if let Err(e) = write_manifest(&dir, &manifest) {
        return Report {
            code: EXIT_IO,
            message: format!("cannot write manifest: {e}"),
            out_dir: Some(dir),
        };
    }
    Report {
        code,
        message,
        out_dir: Some(dir),
    }
}
