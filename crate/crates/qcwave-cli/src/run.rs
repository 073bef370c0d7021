//! Scenario execution. Results are assembled in memory; the caller writes
//! them only once the whole run has finished.

use qcwave::density::{epr_rho, f_of_lambda, superposition_rho, DensityMatrix, PhaseScale};
use qcwave::dynamics::{
    evolve, evolve_two_dof, pointer_density, pointer_final_state, stationary_solve, stern_gerlach_evolve,
    EvolutionTrace, StationaryConfig,
};
use qcwave::io::{self, fmt_f64};
use qcwave::potential::quantum_potentials;
use qcwave::schedule::tabulate;
use qcwave::spectra::{box_levels, predict_dot_levels, spacing_ratio};
use qcwave::trajectories::{
    assign_branches, branch_fractions, chi2_distance, integrate_guidance, sample_initial, second_order_check,
    BranchSupport, ForceSnapshots, SnapshotGuidance,
};
use qcwave::{ComplexField, Error, Grid};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::plan::*;

/// Outcome of one built-in invariant check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub limit: f64,
}

impl Check {
    /// Passes when `value <= limit`.
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            passed: value <= limit,
            value,
            limit,
        }
    }

    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self {
            name: name.into(),
            passed: ok,
            value: if ok { 1.0 } else { 0.0 },
            limit: 1.0,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    /// File name (inside the output directory) and contents.
    pub files: Vec<(String, Vec<u8>)>,
    pub summary: Value,
    pub checks: Vec<Check>,
}

impl Artifacts {
    fn file(&mut self, name: impl Into<String>, f: impl FnOnce(&mut Vec<u8>) -> qcwave::Result<()>) -> qcwave::Result<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.files.push((name.into(), buf));
        Ok(())
    }
}

/// Why a run stopped early.
#[derive(Debug)]
pub enum RunError {
    /// NaN, norm drift, failed convergence.
    Numeric(Error),
    /// Invariant violated badly enough that the scenario cannot finish.
    Invariant(Error),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Numeric(e) => write!(f, "numeric abort: {e}"),
            Self::Invariant(e) => write!(f, "invariant failure: {e}"),
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::BranchesNotSeparated { .. } => Self::Invariant(e),
            other => Self::Numeric(other),
        }
    }
}

type RunResult<T> = Result<T, RunError>;

pub fn execute(plan: &Plan) -> RunResult<Artifacts> {
    let mut out = match &plan.scenario {
        Scenario::Evolve(p) => run_evolve(p)?,
        Scenario::Spectrum(p) => run_spectrum(p)?,
        Scenario::Trajectories(p) => run_trajectories(p, plan.seed)?,
        Scenario::MeasureSg(p) => run_sg(p, plan.seed)?,
        Scenario::MeasurePointer(p) => run_pointer(p)?,
        Scenario::Epr(p) => run_epr(p)?,
        Scenario::DotPredict(p) => run_dot(p)?,
        Scenario::Sweep(p) => run_sweep(p)?,
    };
    if !plan.checks {
        out.checks.clear();
    }
    Ok(out)
}

fn propagate(p: &EvolvePlan) -> qcwave::Result<(ComplexField, EvolutionTrace)> {
    match p.psi.grid() {
        Grid::One(_) => evolve(&p.psi, &p.v, &p.evo),
        Grid::Two(_) => evolve_two_dof(&p.psi, &p.v, &p.evo),
    }
}

fn moments(psi: &ComplexField) -> Value {
    let axes: Vec<Value> = (0..psi.dofs().len())
        .map(|k| json!({ "mean": psi.mean_position(k), "spread": psi.position_spread(k) }))
        .collect();
    Value::Array(axes)
}

fn run_evolve(p: &EvolvePlan) -> RunResult<Artifacts> {
    let (psi, trace) = propagate(p)?;
    let mut out = Artifacts::default();
    out.file("field_final.csv", |w| io::write_field_csv(w, &psi))?;
    out.file("trace.csv", |w| io::write_trace_csv(w, &trace))?;
    if let Grid::One(g) = psi.grid() {
        let q = quantum_potentials(&psi, p.evo.scheme.boundary())?;
        out.file("q_final.csv", |w| io::write_q_csv(w, g, &q[0]))?;
    }
    if p.write_snapshots {
        for (k, (_, snap)) in trace.snapshots.iter().enumerate() {
            out.file(format!("snapshot_{k:04}.csv"), |w| io::write_field_csv(w, snap))?;
        }
    }
    let drift = trace.max_norm_drift();
    out.checks.push(Check::at_most("norm_drift_per_step", drift, p.evo.norm_tolerance));
    if let (Some(hj), Some(cont)) = (trace.max_hj_residual(), trace.max_continuity_residual()) {
        out.checks.push(Check::at_most("hj_residual", hj, p.residual_tolerance));
        out.checks.push(Check::at_most("continuity_residual", cont, p.residual_tolerance));
    }
    out.summary = json!({
        "t_final": trace.times.last(),
        "initial": moments(&p.psi),
        "final": moments(&psi),
        "max_norm_drift": drift,
        "max_hj_residual": trace.max_hj_residual(),
        "max_continuity_residual": trace.max_continuity_residual(),
        "lambda_final": trace.lambdas.last(),
    });
    Ok(out)
}

struct SolverRow {
    n: usize,
    solver: f64,
    formula: f64,
    error: f64,
}

fn stationary_rows(p: &SpectrumPlan, lambda: f64) -> qcwave::Result<Vec<SolverRow>> {
    if p.stationary_points == 0 {
        return Ok(Vec::new());
    }
    let grid = qcwave::Grid1D::new(0.0, p.spec.length, p.stationary_points)?;
    let v = vec![0.0; grid.len()];
    let cfg = StationaryConfig {
        mass: p.spec.mass,
        hbar: p.spec.hbar,
        ..StationaryConfig::default()
    };
    (1..=p.spec.n_max)
        .into_par_iter()
        .map(|n| {
            let s = stationary_solve(&grid, &v, lambda, n, &cfg)?;
            let formula = (1.0 - lambda) * p.spec.energy(n);
            // relative error, absolute when the level collapses to zero
            let error = if formula == 0.0 {
                s.energy.abs()
            } else {
                ((s.energy - formula) / formula).abs()
            };
            Ok(SolverRow {
                n,
                solver: s.energy,
                formula,
                error,
            })
        })
        .collect()
}

const SPECTRUM_TOL: f64 = 1e-3;

fn run_spectrum(p: &SpectrumPlan) -> RunResult<Artifacts> {
    let table = box_levels(&p.spec, p.lambda)?;
    let rows = stationary_rows(p, p.lambda)?;
    let mut out = Artifacts::default();
    out.file("levels.csv", |w| io::write_levels_csv(w, &table))?;
    if !rows.is_empty() {
        let cells: Vec<Vec<String>> = rows
            .iter()
            .map(|r| vec![r.n.to_string(), fmt_f64(r.solver), fmt_f64(r.formula), fmt_f64(r.error)])
            .collect();
        out.file("stationary.csv", |w| io::write_table_csv(w, &["n", "E_solver", "E_box", "error"], &cells))?;
        let worst = rows.iter().map(|r| r.error).fold(0.0, f64::max);
        out.checks.push(Check::at_most("stationary_vs_box", worst, SPECTRUM_TOL));
    }
    let ratio = spacing_ratio(p.lambda)?;
    let spacing_err = table
        .rows
        .windows(2)
        .map(|w| {
            let quantum = w[1].e_n - w[0].e_n;
            ((w[1].e_n_lambda - w[0].e_n_lambda) / quantum - ratio).abs()
        })
        .fold(0.0, f64::max);
    out.checks.push(Check::at_most("spacing_ratio", spacing_err, 1e-12));
    out.summary = json!({
        "lambda": p.lambda,
        "levels": table.rows.iter().map(|r| json!({"n": r.n, "E_n": r.e_n, "E_n_lambda": r.e_n_lambda})).collect::<Vec<_>>(),
        "stationary": rows.iter().map(|r| json!({"n": r.n, "E": r.solver, "error": r.error})).collect::<Vec<_>>(),
    });
    Ok(out)
}

fn run_trajectories(p: &TrajectoryPlan, seed: u64) -> RunResult<Artifacts> {
    let (psi, trace) = propagate(&p.evolve)?;
    let boundary = p.evolve.evo.scheme.boundary();
    let grid = *p.evolve.psi.grid();
    let initial = sample_initial(&p.evolve.psi.density(), &grid, p.n_particles, seed)?;
    let guide = SnapshotGuidance::from_fields(&trace.snapshots, boundary)?;
    let evo = &p.evolve.evo;
    let ens = integrate_guidance(&initial, &guide, evo.t0, evo.dt, evo.n_steps, p.record_every, seed)?;

    let g1 = *grid.as_1d().expect("trajectory scenarios are one-dimensional");
    let chi2 = chi2_distance(&ens.final_coordinates(0), &psi.density(), &g1, p.n_bins)?;
    let mut out = Artifacts::default();
    out.file("trajectories.csv", |w| io::write_trajectories_csv(w, &ens))?;
    out.file("field_final.csv", |w| io::write_field_csv(w, &psi))?;
    out.file("trace.csv", |w| io::write_trace_csv(w, &trace))?;
    out.checks.push(Check::at_most("norm_drift_per_step", trace.max_norm_drift(), evo.norm_tolerance));
    out.checks.push(Check::at_most("equivariance_chi2", chi2, p.chi2_tolerance));
    out.checks.push(Check::holds("ordering_preserved", ens.ordering_preserved()));
    let mut second = Value::Null;
    if let Some(tol) = p.second_order_tolerance {
        let recorded: Vec<_> = trace.snapshots.iter().step_by(p.record_every).cloned().collect();
        let forces = ForceSnapshots::new(&recorded, &p.evolve.v, boundary)?;
        let report = second_order_check(&ens, &forces)?;
        out.checks.push(Check::at_most("second_order_relative", report.max_rel, tol));
        second = json!({"max_abs": report.max_abs, "max_rel": report.max_rel, "samples": report.samples});
    }
    let exited = ens.exited.iter().filter(|e| **e).count();
    out.summary = json!({
        "n_particles": ens.n_particles(),
        "seed": seed,
        "chi2": chi2,
        "exited": exited,
        "final": moments(&psi),
        "second_order": second,
    });
    Ok(out)
}

/// Three-sigma binomial band for a branch fraction.
fn binomial_band(p: f64, n: usize) -> f64 {
    3.0 * (p * (1.0 - p) / n as f64).sqrt()
}

fn run_sg(p: &SternGerlachPlan, seed: u64) -> RunResult<Artifacts> {
    let outcome = stern_gerlach_evolve(&p.sg, p.lambda2, &p.evo)?;
    let boundary = p.evo.scheme.boundary();
    let grid = Grid::One(p.sg.grid);
    let initial = sample_initial(&outcome.snapshots[0].1.density(), &grid, p.n_particles, seed)?;
    let guide = SnapshotGuidance::from_spinors(&outcome.snapshots, boundary)?;
    let mut ens = integrate_guidance(&initial, &guide, p.evo.t0, p.evo.dt, p.evo.n_steps, p.record_every, seed)?;
    let supports: Vec<BranchSupport> = (0..2)
        .map(|b| BranchSupport {
            center: outcome.centers[b],
            width: outcome.widths[b],
        })
        .collect();
    let both = outcome.weights.iter().all(|w| *w > 0.0);
    let fractions = if both {
        let ids = assign_branches(&mut ens, &supports, 0)?;
        branch_fractions(&ids, 2)
    } else {
        // a single branch: every particle belongs to it
        let id = if outcome.weights[0] > 0.0 { 0 } else { 1 };
        ens.branch_id.iter_mut().for_each(|b| *b = id);
        branch_fractions(&ens.branch_id, 2)
    };
    let unassigned = 1.0 - fractions.iter().sum::<f64>();

    let mut out = Artifacts::default();
    out.file("trajectories.csv", |w| io::write_trajectories_csv(w, &ens))?;
    out.file("rho.csv", |w| io::write_matrix_csv(w, &outcome.rho))?;
    let rho_summary = outcome.rho.summary();
    out.file("rho_summary.json", |w| io::write_summary_json(w, &rho_summary))?;
    let n = p.n_particles;
    for (b, name) in ["plus", "minus"].iter().enumerate() {
        let expected = outcome.weights[b];
        out.checks.push(Check::at_most(
            format!("branch_fraction_{name}"),
            (fractions[b] - expected).abs(),
            binomial_band(expected, n).max(1.0 / n as f64),
        ));
    }
    out.checks.push(Check::holds("branches_separated", outcome.separated || !both));
    out.checks.push(Check::holds("rho_physical", outcome.rho.check_physical(1e-12)));
    if p.lambda2 == 1.0 {
        out.checks.push(Check::at_most("rho_offdiagonal", rho_summary.offdiag_maxabs, 1e-15));
    }
    out.summary = json!({
        "n_particles": n,
        "seed": seed,
        "branch_fractions": fractions,
        "unassigned_fraction": unassigned,
        "expected_fractions": outcome.weights,
        "centers": outcome.centers,
        "widths": outcome.widths,
        "separation": outcome.separation,
        "predicted_separation": outcome.predicted_separation,
        "rho": rho_summary,
    });
    Ok(out)
}

fn run_pointer(p: &PointerPlan) -> RunResult<Artifacts> {
    let outcome = pointer_final_state(&p.coefficients, &p.packet, &p.coupling, p.hbar)?;
    let density = pointer_density(&outcome, &p.packet, &p.grid);
    let total = p.grid.integrate(density.iter().cloned());
    let mut out = Artifacts::default();
    let rows: Vec<Vec<String>> = density
        .iter()
        .enumerate()
        .map(|(i, d)| vec![fmt_f64(p.grid.x(i)), fmt_f64(*d)])
        .collect();
    out.file("pointer.csv", |w| io::write_table_csv(w, &["y", "density"], &rows))?;
    let worst_overlap = outcome
        .overlaps
        .iter()
        .enumerate()
        .flat_map(|(i, r)| r.iter().enumerate().filter(move |(j, _)| *j != i).map(|(_, v)| *v))
        .fold(0.0, f64::max);
    out.checks.push(Check::at_most("pointer_norm", (total - 1.0).abs(), 1e-6));
    out.checks.push(Check::holds(
        "overlaps_bounded",
        outcome.overlaps.iter().flatten().all(|v| (0.0..=1.0 + 1e-12).contains(v)),
    ));
    out.summary = json!({
        "branches": outcome.branches.iter().map(|b| json!({
            "q": b.q, "probability": b.coefficient.norm_sqr(), "center": b.center
        })).collect::<Vec<_>>(),
        "max_cross_overlap": worst_overlap,
        "overlaps": outcome.overlaps,
        "integrated_density": total,
    });
    Ok(out)
}

fn run_epr(p: &EprPlan) -> RunResult<Artifacts> {
    let rho = epr_rho(p.classical, p.delta_ab, p.delta_big_ab);
    let reduced = rho.partial_trace(&[2, 3]);
    let summary = rho.summary();
    let mut out = Artifacts::default();
    out.file("rho.csv", |w| io::write_matrix_csv(w, &rho))?;
    out.file("rho_ab.csv", |w| io::write_matrix_csv(w, &reduced))?;
    out.file("rho_summary.json", |w| io::write_summary_json(w, &summary))?;
    out.checks.push(Check::holds("rho_physical", rho.check_physical(1e-12)));
    out.checks.push(Check::holds("reduced_physical", reduced.check_physical(1e-12)));
    if p.classical {
        let diag: Vec<f64> = (0..rho.entries().nrows()).map(|i| rho.entries()[(i, i)].re).collect();
        let halves = diag.iter().filter(|d| (**d - 0.5).abs() < 1e-15).count();
        out.checks.push(Check::at_most("rho_offdiagonal", summary.offdiag_maxabs, 1e-15));
        out.checks.push(Check::holds("two_half_entries", halves == 2));
    }
    out.summary = json!({
        "classical_apparatus": p.classical,
        "rho": summary,
        "reduced_ab": reduced.summary(),
    });
    Ok(out)
}

fn run_dot(p: &DotPlan) -> RunResult<Artifacts> {
    let levels = predict_dot_levels(&p.spec, &p.schedule, &p.times)?;
    let table = tabulate(&p.schedule, &p.times)?;
    let mut out = Artifacts::default();
    out.file("levels.csv", |w| io::write_predictions_csv(w, &levels))?;
    out.file("schedule.csv", |w| io::write_schedule_csv(w, &table))?;
    let n_max = p.spec.n_max;
    let mut spacing_err = 0.0f64;
    for chunk in levels.chunks(n_max) {
        for w in chunk.windows(2) {
            let quantum = p.spec.energy(w[1].n) - p.spec.energy(w[0].n);
            spacing_err = spacing_err.max(((w[1].energy - w[0].energy) / quantum - (1.0 - w[0].lambda)).abs());
        }
    }
    out.checks.push(Check::at_most("spacing_ratio", spacing_err, 1e-12));
    out.checks.push(Check::holds("lambda_in_range", table.iter().all(|(_, l)| (0.0..=1.0).contains(l))));
    out.summary = json!({
        "n_times": p.times.len(),
        "lambda_first": table.first().map(|r| r.1),
        "lambda_last": table.last().map(|r| r.1),
        "ground_first": levels.first().map(|l| l.energy),
        "ground_last": levels.iter().rev().find(|l| l.n == 1).map(|l| l.energy),
    });
    Ok(out)
}

/// One sweep row; `None` metrics mark a failed inner run.
struct SweepRow {
    lambda: f64,
    metrics: Result<Vec<f64>, String>,
}

fn sweep_metrics(inner: &SweepInner, lambda: f64) -> qcwave::Result<Vec<f64>> {
    match inner {
        SweepInner::Spectrum(p) => {
            let formula = box_levels(&p.spec, lambda)?.rows[0].e_n_lambda;
            let solver = if p.stationary_points > 0 {
                let plan = SpectrumPlan {
                    spec: qcwave::spectra::BoxSpec { n_max: 1, ..p.spec },
                    ..p.clone()
                };
                stationary_rows(&plan, lambda)?[0].solver
            } else {
                f64::NAN
            };
            Ok(vec![formula, solver])
        }
        SweepInner::Evolve(p) => {
            let mut p = p.clone();
            p.psi = p.psi.with_lambdas(&[lambda])?;
            let (psi, trace) = propagate(&p)?;
            let t = trace.times.last().copied().unwrap_or(0.0) - p.evo.t0;
            let s0 = p.psi.position_spread(0);
            let s1 = psi.position_spread(0);
            Ok(vec![s1, (s1 - s0) / t, trace.max_norm_drift()])
        }
        SweepInner::Superposition(p) => {
            let classical = lambda == 1.0;
            let f = match p.energy {
                Some((e, v, q)) => f_of_lambda(e, v, q, lambda)?,
                None => PhaseScale::unit(),
            };
            let rho = superposition_rho(p.a, p.b, p.delta, f, classical)?;
            let s = rho.summary();
            Ok(vec![f.f_value, s.offdiag_maxabs, s.purity])
        }
    }
}

fn sweep_header(inner: &SweepInner) -> Vec<&'static str> {
    match inner {
        SweepInner::Spectrum(_) => vec!["lambda", "e1_box", "e1_solver", "ok"],
        SweepInner::Evolve(_) => vec!["lambda", "sigma_final", "spreading_rate", "max_norm_drift", "ok"],
        SweepInner::Superposition(_) => vec!["lambda", "f", "offdiag_maxabs", "purity", "ok"],
    }
}

fn run_sweep(p: &SweepPlan) -> RunResult<Artifacts> {
    let rows: Vec<SweepRow> = p
        .lambdas
        .par_iter()
        .map(|&lambda| SweepRow {
            lambda,
            metrics: sweep_metrics(&p.inner, lambda).map_err(|e| e.to_string()),
        })
        .collect();
    let header = sweep_header(&p.inner);
    let width = header.len() - 2;
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut c = vec![fmt_f64(r.lambda)];
            match &r.metrics {
                Ok(m) => {
                    c.extend(m.iter().map(|v| fmt_f64(*v)));
                    c.push("true".into());
                }
                Err(_) => {
                    c.extend(std::iter::repeat_n(String::new(), width));
                    c.push("false".into());
                }
            }
            c
        })
        .collect();
    let mut out = Artifacts::default();
    out.file("sweep.csv", |w| io::write_table_csv(w, &header, &cells))?;
    let failed: Vec<Value> = rows
        .iter()
        .filter_map(|r| r.metrics.as_ref().err().map(|e| json!({"lambda": r.lambda, "error": e})))
        .collect();
    out.checks.push(Check::at_most("failed_rows", failed.len() as f64, 0.0));

    match &p.inner {
        SweepInner::Spectrum(s) if s.stationary_points > 0 => {
            let worst = rows
                .iter()
                .filter_map(|r| r.metrics.as_ref().ok())
                .map(|m| if m[0] == 0.0 { m[1].abs() } else { ((m[1] - m[0]) / m[0]).abs() })
                .fold(0.0, f64::max);
            out.checks.push(Check::at_most("stationary_vs_box", worst, SPECTRUM_TOL));
        }
        SweepInner::Evolve(e) if e.free => {
            let mut pairs: Vec<(f64, f64)> = rows
                .iter()
                .filter_map(|r| r.metrics.as_ref().ok().map(|m| (r.lambda, m[0])))
                .collect();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            pairs.dedup_by(|a, b| a.0 == b.0);
            let decreasing = pairs.windows(2).all(|w| w[1].1 < w[0].1);
            out.checks.push(Check::holds("spread_decreasing_in_lambda", decreasing));
        }
        _ => {}
    }
    out.summary = json!({
        "columns": header,
        "rows": rows.iter().map(|r| json!({
            "lambda": r.lambda,
            "metrics": r.metrics.as_ref().ok(),
        })).collect::<Vec<_>>(),
        "failed": failed,
    });
    Ok(out)
}
