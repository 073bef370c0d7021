//! Strang-split time stepping of `iħ∂ψ/∂t = (T + V − Σλᵢ Qᵢ) ψ`.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::residuals::hj_continuity_residuals;
use super::tridiag::thomas_constant;
use crate::error::{Error, Result};
use crate::field::{node_mask, ComplexField, NODE_EPS};
use crate::grid::{Boundary, Grid, Grid1D};
use crate::potential::quantum_potentials;
use crate::schedule::{lambda_at, LambdaSchedule};
use crate::stencil::{along_axis, first_derivative};

/// Accepted deviation of the input norm from one before it is rescaled.
pub const INPUT_NORM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Kinetic step by FFT on a periodic domain.
    #[default]
    SplitOperator,
    /// Kinetic step by Crank-Nicolson finite differences between hard walls.
    CrankNicolson,
}

impl Scheme {
    pub fn boundary(self) -> Boundary {
        match self {
            Self::SplitOperator => Boundary::Periodic,
            Self::CrankNicolson => Boundary::Dirichlet,
        }
    }
}

/// When the quantum potential is recomputed from `|ψ|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QRefresh {
    /// Before each of the two potential half-steps.
    #[default]
    EverySubstep,
    /// Once per step, reused for both half-steps.
    EveryStep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub n_steps: usize,
    #[serde(default)]
    pub scheme: Scheme,
    /// One schedule per degree of freedom; empty keeps the field's own λ.
    #[serde(default)]
    pub schedules: Vec<LambdaSchedule>,
    #[serde(default)]
    pub q_refresh: QRefresh,
    #[serde(default = "default_norm_tolerance")]
    pub norm_tolerance: f64,
    #[serde(default)]
    pub t0: f64,
    /// Keep a snapshot every this many steps (and the initial state).
    #[serde(default)]
    pub snapshot_every: Option<usize>,
    /// Evaluate residual diagnostics on every this many steps.
    #[serde(default)]
    pub residual_every: Option<usize>,
}

fn default_norm_tolerance() -> f64 {
    1e-8
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            n_steps: 1,
            scheme: Scheme::default(),
            schedules: Vec::new(),
            q_refresh: QRefresh::default(),
            norm_tolerance: default_norm_tolerance(),
            t0: 0.0,
            snapshot_every: None,
            residual_every: None,
        }
    }
}

impl EvolutionConfig {
    pub fn new(dt: f64, n_steps: usize) -> Self {
        Self {
            dt,
            n_steps,
            ..Self::default()
        }
    }

    pub fn validate(&self, n_dof: usize) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be > 0, got {}", self.dt)));
        }
        if self.n_steps == 0 {
            return Err(Error::InvalidParameter("n_steps must be >= 1".into()));
        }
        if !(self.norm_tolerance > 0.0) {
            return Err(Error::InvalidParameter("norm_tolerance must be > 0".into()));
        }
        if !self.schedules.is_empty() && self.schedules.len() != n_dof {
            return Err(Error::InvalidParameter(format!(
                "{} schedules for {n_dof} degrees of freedom",
                self.schedules.len()
            )));
        }
        if self.snapshot_every == Some(0) || self.residual_every == Some(0) {
            return Err(Error::InvalidParameter("sampling intervals must be >= 1".into()));
        }
        self.schedules.iter().try_for_each(LambdaSchedule::validate)
    }

    fn lambdas_at(&self, t: f64, fallback: &[f64]) -> Result<Vec<f64>> {
        if self.schedules.is_empty() {
            return Ok(fallback.to_vec());
        }
        self.schedules.iter().map(|s| lambda_at(s, t)).collect()
    }
}

/// Per-step record of an evolution run. Residual entries are `None` on
/// steps that were not sampled.
#[derive(Debug, Clone, Default)]
pub struct EvolutionTrace {
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    pub hj_residual: Vec<Option<f64>>,
    pub continuity_residual: Vec<Option<f64>>,
    /// λ of each degree of freedom used for the step ending at `times[k]`.
    pub lambdas: Vec<Vec<f64>>,
    pub snapshots: Vec<(f64, ComplexField)>,
}

impl EvolutionTrace {
    pub fn max_norm_drift(&self) -> f64 {
        self.norms.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max)
    }

    pub fn max_hj_residual(&self) -> Option<f64> {
        self.hj_residual.iter().flatten().cloned().reduce(f64::max)
    }

    pub fn max_continuity_residual(&self) -> Option<f64> {
        self.continuity_residual.iter().flatten().cloned().reduce(f64::max)
    }
}

/// Evolve a 1D field.
pub fn evolve(psi: &ComplexField, v: &[f64], cfg: &EvolutionConfig) -> Result<(ComplexField, EvolutionTrace)> {
    if psi.grid().dims() != 1 {
        return Err(Error::Unsupported("evolve takes a 1D field; use evolve_two_dof".into()));
    }
    propagate(psi, v, cfg)
}

/// Evolve a field of two degrees of freedom on a 2D grid.
pub fn evolve_two_dof(psi: &ComplexField, v: &[f64], cfg: &EvolutionConfig) -> Result<(ComplexField, EvolutionTrace)> {
    if psi.grid().dims() != 2 {
        return Err(Error::Unsupported("evolve_two_dof takes a 2D field".into()));
    }
    propagate(psi, v, cfg)
}

fn propagate(psi: &ComplexField, v: &[f64], cfg: &EvolutionConfig) -> Result<(ComplexField, EvolutionTrace)> {
    let grid = *psi.grid();
    cfg.validate(grid.dims())?;
    if v.len() != grid.len() {
        return Err(Error::ShapeMismatch {
            expected: grid.len(),
            got: v.len(),
        });
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("non-finite potential".into()));
    }
    let n0 = psi.norm_sqr();
    if (n0 - 1.0).abs() > INPUT_NORM_TOL {
        return Err(Error::NotNormalized(n0));
    }
    let boundary = cfg.scheme.boundary();
    let hbar = psi.hbar();
    let masses: Vec<f64> = psi.dofs().iter().map(|d| d.mass).collect();
    let field_lambdas: Vec<f64> = psi.dofs().iter().map(|d| d.lambda).collect();
    // With a quantum correction in play the spectral factor uses the Cayley
    // angle 2·atan(a/2) instead of a = ħk²dt/2m: the kick from λQ shears
    // every mode by about λa, and a rotation past π would turn that shear
    // into exponential growth at the grid scale. The Cayley angle stays
    // below π, which keeps every mode bounded for λ ≤ 1.
    let corrected = field_lambdas.iter().any(|&l| l != 0.0) || !cfg.schedules.is_empty();
    let kinetic = Kinetic::new(&grid, &masses, hbar, cfg.dt, cfg.scheme, corrected);

    let mut state = psi.clone().with_lambdas(&cfg.lambdas_at(cfg.t0, &field_lambdas)?)?;
    if cfg.scheme == Scheme::CrankNicolson {
        kinetic.pin_walls(state.values_mut());
    }
    state.normalize()?;

    let mut trace = EvolutionTrace::default();
    let mut norm = state.norm_sqr();
    trace.times.push(cfg.t0);
    trace.norms.push(norm);
    trace.hj_residual.push(None);
    trace.continuity_residual.push(None);
    trace.lambdas.push(state.dofs().iter().map(|d| d.lambda).collect());
    if cfg.snapshot_every.is_some() {
        trace.snapshots.push((cfg.t0, state.clone()));
    }

    let mut kinetics = vec![(1usize, kinetic)];
    for step in 1..=cfg.n_steps {
        let t_start = cfg.t0 + (step - 1) as f64 * cfg.dt;
        let t_end = cfg.t0 + step as f64 * cfg.dt;
        let lambdas = cfg.lambdas_at(t_start + 0.5 * cfg.dt, &field_lambdas)?;
        state = state.with_lambdas(&lambdas)?;
        let sample = cfg.residual_every.is_some_and(|k| step % k == 0);
        let before = sample.then(|| state.clone());

        let quantum = lambdas.iter().any(|&l| l != 0.0);
        let parts = if quantum { substeps(&state, &lambdas, boundary, cfg.dt) } else { 1 };
        if !kinetics.iter().any(|(k, _)| *k == parts) {
            let sub = cfg.dt / parts as f64;
            kinetics.push((parts, Kinetic::new(&grid, &masses, hbar, sub, cfg.scheme, corrected)));
        }
        let kinetic = &kinetics.iter().find(|(k, _)| *k == parts).expect("cached above").1;
        let half = cfg.dt / (2.0 * hbar * parts as f64);
        for _ in 0..parts {
            let mut veff = effective(&state, v, &lambdas, boundary, quantum)?;
            kick(state.values_mut(), &veff, half);
            kinetic.apply(state.values_mut());
            if quantum && cfg.q_refresh == QRefresh::EverySubstep {
                veff = effective(&state, v, &lambdas, boundary, quantum)?;
            }
            kick(state.values_mut(), &veff, half);
        }

        if !state.is_finite() {
            return Err(Error::NonFinite { step });
        }
        let next = state.norm_sqr();
        let drift = (next - norm).abs();
        if !(drift <= cfg.norm_tolerance) {
            return Err(Error::NormDrift {
                step,
                drift,
                tolerance: cfg.norm_tolerance,
            });
        }
        norm = next;

        trace.times.push(t_end);
        trace.norms.push(norm);
        trace.lambdas.push(lambdas);
        match before {
            Some(prev) => {
                let r = hj_continuity_residuals(&prev, &state, v, cfg.dt, boundary)?;
                trace.hj_residual.push(Some(r.hj_max));
                trace.continuity_residual.push(Some(r.continuity_max));
            }
            None => {
                trace.hj_residual.push(None);
                trace.continuity_residual.push(None);
            }
        }
        if cfg.snapshot_every.is_some_and(|k| step % k == 0) {
            trace.snapshots.push((t_end, state.clone()));
        }
    }
    Ok((state, trace))
}

/// Most Strang substeps a single step is split into.
pub const MAX_SUBSTEPS: usize = 256;

/// Courant number allowed for the correction's transport.
const COURANT: f64 = 0.25;

/// Substeps needed while the quantum correction is active.
///
/// Splitting `T` from `−λQ` leaves a first-order transport at speed
/// `ħ|∂ψ|/(m|ψ|)` (the osmotic plus current velocity) that is stepped
/// explicitly, so it obeys a Courant limit; on fine grids the limit binds in
/// the far tails, just inside the node mask.
fn substeps(state: &ComplexField, lambdas: &[f64], boundary: Boundary, dt: f64) -> usize {
    let grid = state.grid();
    let shape = match grid {
        Grid::One(g) => (1, g.len()),
        Grid::Two(g) => g.shape(),
    };
    let values = state.values();
    let r: Vec<f64> = values.iter().map(|v| v.norm()).collect();
    let mask = node_mask(&r, NODE_EPS);
    let mut parts = 1.0f64;
    for (k, (dof, &l)) in state.dofs().iter().zip(lambdas).enumerate() {
        if l == 0.0 {
            continue;
        }
        let axis = grid.axis(k);
        let line = if grid.dims() == 1 { 1 } else { k };
        let grad = along_axis(values, shape, line, |f| first_derivative(f, axis.dx(), boundary));
        let speed = grad
            .iter()
            .zip(&r)
            .zip(&mask)
            .filter(|(_, &m)| !m)
            .map(|((g, &rv), _)| g.norm() / rv)
            .fold(0.0, f64::max)
            * state.hbar()
            / dof.mass;
        parts = parts.max((speed * dt / (COURANT * axis.dx())).ceil());
    }
    (parts as usize).clamp(1, MAX_SUBSTEPS)
}

fn effective(
    state: &ComplexField,
    v: &[f64],
    lambdas: &[f64],
    boundary: Boundary,
    quantum: bool,
) -> Result<Vec<f64>> {
    if !quantum {
        return Ok(v.to_vec());
    }
    let q = quantum_potentials(state, boundary)?;
    let mut correction = vec![0.0; v.len()];
    for (qk, &l) in q.iter().zip(lambdas) {
        if l != 0.0 {
            correction.iter_mut().zip(qk).for_each(|(c, qv)| *c += l * qv);
        }
    }
    Ok(v.iter().zip(&correction).map(|(vv, c)| vv - c).collect())
}

/// `ψ ← exp(−i V · scale) ψ` pointwise.
fn kick(values: &mut [Complex64], v: &[f64], scale: f64) {
    for (p, &vv) in values.iter_mut().zip(v) {
        *p *= Complex64::from_polar(1.0, -vv * scale);
    }
}

enum AxisKinetic {
    Spectral {
        forward: Arc<dyn Fft<f64>>,
        inverse: Arc<dyn Fft<f64>>,
        phase: Vec<Complex64>,
    },
    CrankNicolson {
        lhs_diag: Complex64,
        lhs_off: Complex64,
        rhs_diag: Complex64,
        rhs_off: Complex64,
    },
}

impl AxisKinetic {
    fn new(axis: &Grid1D, mass: f64, hbar: f64, dt: f64, scheme: Scheme, cayley: bool, planner: &mut FftPlanner<f64>) -> Self {
        match scheme {
            Scheme::SplitOperator => {
                let n = axis.len();
                let scale = 1.0 / n as f64;
                let phase = axis
                    .wavenumbers()
                    .into_iter()
                    .map(|k| {
                        let a = hbar * k * k * dt / (2.0 * mass);
                        let angle = if cayley { 2.0 * (0.5 * a).atan() } else { a };
                        Complex64::from_polar(scale, -angle)
                    })
                    .collect();
                Self::Spectral {
                    forward: planner.plan_fft_forward(n),
                    inverse: planner.plan_fft_inverse(n),
                    phase,
                }
            }
            Scheme::CrankNicolson => {
                let a = hbar * dt / (4.0 * mass * axis.dx() * axis.dx());
                let i = Complex64::i();
                Self::CrankNicolson {
                    lhs_diag: 1.0 + 2.0 * a * i,
                    lhs_off: -a * i,
                    rhs_diag: 1.0 - 2.0 * a * i,
                    rhs_off: a * i,
                }
            }
        }
    }

    fn apply_line(&self, line: &mut [Complex64]) {
        match self {
            Self::Spectral { forward, inverse, phase } => {
                forward.process(line);
                line.iter_mut().zip(phase).for_each(|(v, p)| *v *= p);
                inverse.process(line);
            }
            Self::CrankNicolson {
                lhs_diag,
                lhs_off,
                rhs_diag,
                rhs_off,
            } => {
                let n = line.len();
                let mut rhs: Vec<Complex64> = (1..n - 1)
                    .map(|j| rhs_diag * line[j] + rhs_off * (line[j - 1] + line[j + 1]))
                    .collect();
                thomas_constant(*lhs_diag, *lhs_off, &mut rhs);
                line[0] = Complex64::default();
                line[n - 1] = Complex64::default();
                line[1..n - 1].copy_from_slice(&rhs);
            }
        }
    }
}

/// Full kinetic step, one factor per axis (the axis operators commute).
struct Kinetic {
    axes: Vec<AxisKinetic>,
    shape: (usize, usize),
}

impl Kinetic {
    fn new(grid: &Grid, masses: &[f64], hbar: f64, dt: f64, scheme: Scheme, cayley: bool) -> Self {
        let mut planner = FftPlanner::new();
        let (axes, shape) = match grid {
            Grid::One(g) => (vec![AxisKinetic::new(g, masses[0], hbar, dt, scheme, cayley, &mut planner)], (1, g.len())),
            Grid::Two(g) => (
                vec![
                    AxisKinetic::new(&g.axis1, masses[0], hbar, dt, scheme, cayley, &mut planner),
                    AxisKinetic::new(&g.axis2, masses[1], hbar, dt, scheme, cayley, &mut planner),
                ],
                g.shape(),
            ),
        };
        Self { axes, shape }
    }

    fn apply(&self, values: &mut [Complex64]) {
        let (n1, n2) = self.shape;
        match self.axes.as_slice() {
            [only] => only.apply_line(values),
            [a1, a2] => {
                let mut column = vec![Complex64::default(); n1];
                for i2 in 0..n2 {
                    for i1 in 0..n1 {
                        column[i1] = values[i1 * n2 + i2];
                    }
                    a1.apply_line(&mut column);
                    for i1 in 0..n1 {
                        values[i1 * n2 + i2] = column[i1];
                    }
                }
                for row in values.chunks_mut(n2) {
                    a2.apply_line(row);
                }
            }
            _ => unreachable!(),
        }
    }

    fn pin_walls(&self, values: &mut [Complex64]) {
        let (n1, n2) = self.shape;
        for i1 in 0..n1 {
            for i2 in 0..n2 {
                let wall = i2 == 0 || i2 == n2 - 1 || (self.axes.len() == 2 && (i1 == 0 || i1 == n1 - 1));
                if wall {
                    values[i1 * n2 + i2] = Complex64::default();
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Dof;
    use crate::grid::Grid2D;
    use std::f64::consts::PI;

    fn gaussian(grid: Grid1D, x0: f64, sigma: f64, p0: f64, lambda: f64) -> ComplexField {
        ComplexField::from_fn_1d(grid, Dof::new(1.0, lambda).unwrap(), 1.0, |x| {
            Complex64::from_polar((-(x - x0).powi(2) / (4.0 * sigma * sigma)).exp(), p0 * x)
        })
        .unwrap()
        .normalized()
        .unwrap()
    }

    #[test]
    fn one_step_preserves_norm_in_both_limits() {
        let g = Grid1D::centered(256, 0.1).unwrap();
        for lambda in [0.0, 1.0] {
            let psi = gaussian(g, 0.3, 1.0, 0.7, lambda);
            let v: Vec<f64> = g.points().iter().map(|x| 0.1 * x * x).collect();
            let (out, trace) = evolve(&psi, &v, &EvolutionConfig::new(1e-3, 1)).unwrap();
            assert!((out.norm_sqr() - 1.0).abs() < 1e-8);
            assert_eq!(trace.norms.len(), 2);
        }
    }

    #[test]
    fn free_gaussian_spreads_as_predicted() {
        let g = Grid1D::centered(512, 40.0 / 512.0).unwrap();
        let psi = gaussian(g, 0.0, 1.0, 0.0, 0.0);
        let (out, trace) = evolve(&psi, &vec![0.0; 512], &EvolutionConfig::new(0.01, 200)).unwrap();
        assert!((out.position_spread(0) - 2f64.sqrt()).abs() < 1e-3);
        assert!(trace.max_norm_drift() < 1e-10);
    }

    #[test]
    fn crank_nicolson_box_eigenstate_is_stationary() {
        let g = Grid1D::new(0.0, 1.0, 201).unwrap();
        let psi = ComplexField::from_fn_1d(g, Dof::quantum(1.0), 1.0, |x| Complex64::new((PI * x).sin(), 0.0))
            .unwrap()
            .normalized()
            .unwrap();
        let mut cfg = EvolutionConfig::new(1e-3, 100);
        cfg.scheme = Scheme::CrankNicolson;
        let (out, _) = evolve(&psi, &vec![0.0; 201], &cfg).unwrap();
        let overlap = psi.inner(&out).unwrap().norm();
        assert!((overlap - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_input() {
        let g = Grid1D::centered(64, 0.1).unwrap();
        let psi = gaussian(g, 0.0, 0.5, 0.0, 0.0);
        assert!(evolve(&psi, &[0.0; 3], &EvolutionConfig::new(1e-3, 1)).is_err());
        assert!(evolve(&psi, &[0.0; 64], &EvolutionConfig::new(0.0, 1)).is_err());
        assert!(evolve(&psi, &[0.0; 64], &EvolutionConfig::new(1e-3, 0)).is_err());
        let unnormalized = psi.with_values(psi.values().iter().map(|v| v * 2.0).collect()).unwrap();
        assert!(matches!(
            evolve(&unnormalized, &[0.0; 64], &EvolutionConfig::new(1e-3, 1)),
            Err(Error::NotNormalized(_))
        ));
        let mut cfg = EvolutionConfig::new(1e-3, 50);
        cfg.norm_tolerance = 1e-300;
        // round-off alone exceeds a 1e-300 budget
        let v: Vec<f64> = g.points().iter().map(|x| 50.0 * x * x).collect();
        assert!(matches!(evolve(&psi, &v, &cfg), Err(Error::NormDrift { .. })));
    }

    #[test]
    fn nan_potential_is_rejected_and_nan_state_aborts() {
        let g = Grid1D::centered(64, 0.1).unwrap();
        let psi = gaussian(g, 0.0, 0.5, 0.0, 0.0);
        let mut v = vec![0.0; 64];
        v[3] = f64::NAN;
        assert!(evolve(&psi, &v, &EvolutionConfig::new(1e-3, 1)).is_err());
        let huge = vec![1e308; 64];
        let r = evolve(&psi, &huge, &EvolutionConfig::new(1e10, 1));
        assert!(r.is_err());
    }

    #[test]
    fn two_dof_product_state_stays_product() {
        let a = Grid1D::centered(64, 0.25).unwrap();
        let b = Grid1D::centered(48, 0.3).unwrap();
        let g = Grid2D::new(a, b);
        let fa = gaussian(a, 0.5, 1.0, 0.3, 0.0);
        let fb = gaussian(b, -0.4, 0.8, -0.2, 0.0);
        let va: Vec<f64> = a.points().iter().map(|x| 0.2 * x * x).collect();
        let vb: Vec<f64> = b.points().iter().map(|y| 0.1 * y * y).collect();
        let dofs = [Dof::quantum(1.0), Dof::quantum(1.0)];
        let joint = ComplexField::from_fn_2d(g, dofs, 1.0, |x, y| {
            let i = a.locate(x).round() as usize;
            let j = b.locate(y).round() as usize;
            fa.values()[i] * fb.values()[j]
        })
        .unwrap();
        let v: Vec<f64> = (0..64).flat_map(|i| vb.iter().map(|vy| va[i] + vy).collect::<Vec<_>>()).collect();
        let cfg = EvolutionConfig::new(0.01, 100);
        let (out, trace) = evolve_two_dof(&joint, &v, &cfg).unwrap();
        let (oa, _) = evolve(&fa, &va, &cfg).unwrap();
        let (ob, _) = evolve(&fb, &vb, &cfg).unwrap();
        let product: Vec<Complex64> =
            (0..64).flat_map(|i| ob.values().iter().map(|w| oa.values()[i] * w).collect::<Vec<_>>()).collect();
        let product = out.with_values(product).unwrap();
        let fidelity = out.inner(&product).unwrap().norm_sqr();
        assert!(fidelity > 1.0 - 1e-6, "fidelity {fidelity}");
        assert!(trace.max_norm_drift() < 1e-8);
    }

    #[test]
    fn classical_packet_stays_rigid_where_kinetic_phase_wraps() {
        // ħk²dt/2m reaches ~6 at the grid scale here
        let g = Grid1D::new(-20.0, 20.0, 1024).unwrap();
        let psi = gaussian(g, -5.0, 1.0, 2.0, 1.0);
        let (out, _) = evolve(&psi, &vec![0.0; 1024], &EvolutionConfig::new(0.002, 1000)).unwrap();
        assert!((out.position_spread(0) - 1.0).abs() < 1e-3, "{}", out.position_spread(0));
        assert!((out.mean_position(0) - (-1.0)).abs() < 1e-3);
    }

    #[test]
    fn intermediate_lambda_spreads_with_reduced_rate() {
        let g = Grid1D::new(-20.0, 20.0, 1024).unwrap();
        for lambda in [0.25, 0.5, 0.75] {
            let psi = gaussian(g, 0.0, 1.0, 0.0, lambda);
            let (out, _) = evolve(&psi, &vec![0.0; 1024], &EvolutionConfig::new(0.001, 2000)).unwrap();
            let expected = (1.0 + (1.0 - lambda)).sqrt();
            assert!((out.position_spread(0) - expected).abs() < 1e-3, "λ={lambda}: {}", out.position_spread(0));
        }
    }

    #[test]
    fn fine_grid_tails_need_and_get_substeps() {
        let g = Grid1D::centered(8192, 1.0 / 512.0).unwrap();
        let psi = gaussian(g, 0.0, 0.5, 1.0, 1.0);
        assert!(substeps(&psi, &[1.0], Boundary::Periodic, 1e-3) > 1);
        assert_eq!(substeps(&psi, &[0.0], Boundary::Periodic, 1e-3), 1);
        let mut cfg = EvolutionConfig::new(1e-3, 100);
        cfg.residual_every = Some(25);
        let (out, trace) = evolve(&psi, &vec![0.0; g.len()], &cfg).unwrap();
        assert!(trace.max_hj_residual().unwrap() < 1e-3);
        assert!(trace.max_continuity_residual().unwrap() < 1e-3);
        assert!((out.position_spread(0) - 0.5).abs() < 1e-6);
    }
}
