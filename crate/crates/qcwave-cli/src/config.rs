//! Flat TOML scenario configuration.
//!
//! Every key lives at the top level except `schedule`/`schedule2`, which are
//! inline tables tagged by `kind`. Unknown keys are rejected.

use std::fmt;

use qcwave::dynamics::{QRefresh, Scheme};
use qcwave::schedule::LambdaSchedule;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Evolve,
    Evolve2d,
    Spectrum,
    Trajectories,
    MeasureSg,
    MeasurePointer,
    Epr,
    LambdaSweep,
    DotPredict,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Evolve => "evolve",
            Self::Evolve2d => "evolve2d",
            Self::Spectrum => "spectrum",
            Self::Trajectories => "trajectories",
            Self::MeasureSg => "measure_sg",
            Self::MeasurePointer => "measure_pointer",
            Self::Epr => "epr",
            Self::LambdaSweep => "lambda_sweep",
            Self::DotPredict => "dot_predict",
        }
    }
}

/// Inner scenario of a λ sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    /// Ground-state energy of the box.
    Spectrum,
    /// Free-packet spreading.
    Evolve,
    /// Off-diagonal magnitude of a two-state superposition.
    Superposition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    #[default]
    Free,
    Harmonic,
    /// Hard walls at the grid ends; requires the Crank-Nicolson scheme.
    Box,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    #[default]
    Gaussian,
    BoxEigenstate,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Option<ScenarioKind>,
    pub seed: Option<u64>,
    pub out_dir: Option<String>,

    pub hbar: Option<f64>,
    pub mass: Option<f64>,
    pub mass2: Option<f64>,
    pub lambda: Option<f64>,
    pub lambda2: Option<f64>,
    pub schedule: Option<LambdaSchedule>,
    pub schedule2: Option<LambdaSchedule>,

    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub n_points: Option<usize>,
    pub y_min: Option<f64>,
    pub y_max: Option<f64>,
    pub n_points_y: Option<usize>,

    pub potential: Option<PotentialKind>,
    pub omega: Option<f64>,
    pub initial: Option<InitialState>,
    pub level: Option<usize>,
    pub x0: Option<f64>,
    pub y0: Option<f64>,
    pub sigma: Option<f64>,
    pub sigma_y: Option<f64>,
    pub p0: Option<f64>,
    pub p0_y: Option<f64>,

    pub dt: Option<f64>,
    pub steps: Option<usize>,
    pub scheme: Option<Scheme>,
    pub q_refresh: Option<QRefresh>,
    pub norm_tolerance: Option<f64>,
    pub residual_every: Option<usize>,
    pub residual_tolerance: Option<f64>,
    pub snapshot_every: Option<usize>,

    pub n_particles: Option<usize>,
    pub record_every: Option<usize>,
    pub n_bins: Option<usize>,
    pub chi2_tolerance: Option<f64>,
    pub second_order_tolerance: Option<f64>,

    pub length: Option<f64>,
    pub n_max: Option<usize>,
    pub stationary_points: Option<usize>,

    pub mu_b: Option<f64>,
    pub db_dz: Option<f64>,
    pub tau: Option<f64>,
    pub c_plus: Option<f64>,
    pub c_minus: Option<f64>,

    pub g: Option<f64>,
    pub duration: Option<f64>,
    pub eigenvalues: Option<Vec<f64>>,
    /// `[re, im]` pairs.
    pub coefficients: Option<Vec<[f64; 2]>>,
    pub pointer_center: Option<f64>,
    pub pointer_sigma: Option<f64>,

    pub delta: Option<f64>,
    pub delta_ab: Option<f64>,
    pub delta_big_ab: Option<f64>,
    pub energy: Option<f64>,
    pub v_value: Option<f64>,
    pub q_value: Option<f64>,

    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    pub n_times: Option<usize>,

    pub lambdas: Option<Vec<f64>>,
    pub sweep_scenario: Option<SweepKind>,
}

/// Parse or validation failure, with the location of the offending key.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub message: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "line {l}, column {c}: {}", self.message),
            _ => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// 1-based line and column of byte `offset` in `src`.
fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(before.len(), |p| before.len() - p - 1) + 1;
    (line, col)
}

impl ScenarioConfig {
    pub fn parse(src: &str) -> Result<Self, ConfigError> {
        toml::from_str(src).map_err(|e| {
            let (line, column) = match e.span() {
                Some(span) => {
                    let (l, c) = line_col(src, span.start);
                    (Some(l), Some(c))
                }
                None => (None, None),
            };
            ConfigError {
                message: e.message().trim().to_string(),
                line,
                column,
            }
        })
    }
}

/// Finds where `key` is assigned in `src` (a dotted key looks inside the
/// parent's inline table). Falls back to no location.
pub fn locate(src: &str, key: &str) -> (Option<usize>, Option<usize>) {
    let (parent, child) = match key.split_once('.') {
        Some((p, c)) => (p, Some(c)),
        None => (key, None),
    };
    for (i, line) in src.split_inclusive('\n').enumerate() {
        let trimmed = line.trim_start();
        let indent = line.len() - trimmed.len();
        if let Some(rest) = trimmed.strip_prefix(parent) {
            if rest.trim_start().starts_with('=') {
                let col = match child.and_then(|c| find_word(line, c)) {
                    Some(c) => c,
                    None => indent,
                };
                return (Some(i + 1), Some(col + 1));
            }
        }
    }
    (None, None)
}

fn find_word(line: &str, word: &str) -> Option<usize> {
    let bytes = line.as_bytes();
    let mut start = 0;
    while let Some(p) = line[start..].find(word) {
        let at = start + p;
        let before_ok = at == 0 || !(bytes[at - 1].is_ascii_alphanumeric() || bytes[at - 1] == b'_');
        let end = at + word.len();
        let after_ok = end >= bytes.len() || !(bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_');
        if before_ok && after_ok {
            return Some(at);
        }
        start = at + word.len();
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_config_with_schedule() {
        let cfg = ScenarioConfig::parse(
            "scenario = \"dot_predict\"\nschedule = { kind = \"logistic\", b = 10.0, t0 = 0.5 }\nn_max = 4\n",
        )
        .unwrap();
        assert_eq!(cfg.scenario, Some(ScenarioKind::DotPredict));
        assert_eq!(cfg.schedule, Some(LambdaSchedule::Logistic { b: 10.0, t0: 0.5 }));
        assert_eq!(cfg.n_max, Some(4));
    }

    #[test]
    fn unknown_keys_report_their_line() {
        let err = ScenarioConfig::parse("scenario = \"spectrum\"\nlambdaa = 0.5\n").unwrap_err();
        assert_eq!(err.line, Some(2));
        assert!(err.message.contains("lambdaa"), "{}", err.message);
        let err = ScenarioConfig::parse("scenario = \"spectrum\"\nn_max = \"three\"\n").unwrap_err();
        assert_eq!(err.line, Some(2));
    }

    #[test]
    fn locates_keys() {
        let src = "scenario = \"x\"\n  lambda = 1.5\nschedule = { kind = \"step\", t0 = 1 }\n";
        assert_eq!(locate(src, "lambda"), (Some(2), Some(3)));
        assert_eq!(locate(src, "schedule.t0"), (Some(3), Some(29)));
        assert_eq!(locate(src, "missing"), (None, None));
        assert_eq!(line_col("ab\ncd", 4), (2, 2));
    }
}
