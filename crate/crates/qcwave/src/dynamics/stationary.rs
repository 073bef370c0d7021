//! Self-consistent stationary states of `−(ħ²/2m)ψ'' + (V − λQ[ψ])ψ = Eψ`
//! between hard walls.
//!
//! Each iteration diagonalizes the three-point tridiagonal operator for the
//! current `Q` (Sturm bisection for the requested level, inverse iteration for
//! its vector), mixes the new amplitude with the previous one and recomputes
//! `Q` from the signed amplitude so it stays smooth through nodes.

use num_complex::Complex64;

use super::tridiag::{inverse_iteration, kth_eigenvalue};
use crate::error::{check_lambda, Error, Result};
use crate::field::{node_mask, ComplexField, Dof, NODE_EPS};
use crate::grid::{Boundary, Grid1D};
use crate::potential::quantum_potential;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryConfig {
    pub mass: f64,
    pub hbar: f64,
    pub max_iter: usize,
    /// Convergence threshold on `|ΔE|` between iterations.
    pub tol: f64,
    /// Weight of the new amplitude in the damped update.
    pub mixing: f64,
}

impl Default for StationaryConfig {
    fn default() -> Self {
        Self {
            mass: 1.0,
            hbar: 1.0,
            max_iter: 200,
            tol: 1e-10,
            mixing: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StationaryState {
    pub energy: f64,
    /// Real, normalized, zero on the walls.
    pub psi: ComplexField,
    pub iterations: usize,
    pub last_delta: f64,
}

/// Level `n_target` (1 = ground state) on a grid whose end samples are the
/// walls.
pub fn stationary_solve(
    grid: &Grid1D,
    v: &[f64],
    lambda: f64,
    n_target: usize,
    cfg: &StationaryConfig,
) -> Result<StationaryState> {
    check_lambda(lambda)?;
    let n = grid.len();
    if v.len() != n {
        return Err(Error::ShapeMismatch { expected: n, got: v.len() });
    }
    if n_target == 0 || n_target > n - 2 {
        return Err(Error::InvalidParameter(format!("level {n_target} out of range 1..={}", n - 2)));
    }
    if !(cfg.mixing > 0.0 && cfg.mixing <= 1.0) || !(cfg.tol > 0.0) || cfg.max_iter == 0 {
        return Err(Error::InvalidParameter("mixing in (0, 1], tol > 0, max_iter >= 1".into()));
    }
    let dof = Dof::new(cfg.mass, lambda)?;
    let dx = grid.dx();
    let h2m = cfg.hbar * cfg.hbar / (2.0 * cfg.mass);
    let off = vec![-h2m / (dx * dx); n - 3];
    let mut q = vec![0.0; n];
    let mut prev: Option<Vec<f64>> = None;
    let mut prev_energy = f64::NAN;
    let mut last_delta = f64::INFINITY;

    for iteration in 1..=cfg.max_iter {
        let diag: Vec<f64> = (1..n - 1).map(|i| 2.0 * h2m / (dx * dx) + v[i] - lambda * q[i]).collect();
        let energy = kth_eigenvalue(&diag, &off, n_target - 1);
        let start = prev.as_ref().map(|p| p[1..n - 1].to_vec());
        let interior = inverse_iteration(&diag, &off, energy, start.as_deref());
        let mut psi = vec![0.0; n];
        psi[1..n - 1].copy_from_slice(&interior);
        normalize(&mut psi, dx);
        align_sign(&mut psi, prev.as_deref());

        if iteration > 1 {
            last_delta = (energy - prev_energy).abs();
        }
        if lambda == 0.0 || last_delta < cfg.tol {
            return Ok(StationaryState {
                energy,
                psi: to_field(grid, &psi, dof, cfg.hbar)?,
                iterations: iteration,
                last_delta: if lambda == 0.0 { 0.0 } else { last_delta },
            });
        }

        let mixed = match &prev {
            Some(p) => {
                let mut m: Vec<f64> = p.iter().zip(&psi).map(|(a, b)| (1.0 - cfg.mixing) * a + cfg.mixing * b).collect();
                normalize(&mut m, dx);
                m
            }
            None => psi,
        };
        let magnitude: Vec<f64> = mixed.iter().map(|v| v.abs()).collect();
        let mask = node_mask(&magnitude, NODE_EPS);
        q = quantum_potential(&mixed, grid, cfg.mass, cfg.hbar, &mask, Boundary::Dirichlet)?;
        prev = Some(mixed);
        prev_energy = energy;
    }
    Err(Error::NonConvergence {
        iterations: cfg.max_iter,
        last_delta,
    })
}

fn normalize(psi: &mut [f64], dx: f64) {
    let norm = (psi.iter().map(|v| v * v).sum::<f64>() * dx).sqrt();
    psi.iter_mut().for_each(|v| *v /= norm);
}

/// Keep the overlap with the previous iterate positive; without one, make
/// the first significant sample positive.
fn align_sign(psi: &mut [f64], prev: Option<&[f64]>) {
    let flip = match prev {
        Some(p) => p.iter().zip(psi.iter()).map(|(a, b)| a * b).sum::<f64>() < 0.0,
        None => {
            let max = psi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            psi.iter().find(|v| v.abs() > 1e-3 * max).is_some_and(|v| *v < 0.0)
        }
    };
    if flip {
        psi.iter_mut().for_each(|v| *v = -*v);
    }
}

fn to_field(grid: &Grid1D, psi: &[f64], dof: Dof, hbar: f64) -> Result<ComplexField> {
    ComplexField::new(*grid, psi.iter().map(|&v| Complex64::new(v, 0.0)).collect(), vec![dof], hbar)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn box_grid() -> Grid1D {
        Grid1D::new(0.0, 1.0, 1001).unwrap()
    }

    #[test]
    fn box_examples() {
        let g = box_grid();
        let v = vec![0.0; g.len()];
        let cfg = StationaryConfig::default();
        let e0 = PI * PI / 2.0;
        let s = stationary_solve(&g, &v, 0.0, 1, &cfg).unwrap();
        assert!((s.energy - e0).abs() / e0 < 1e-3);
        let s = stationary_solve(&g, &v, 0.5, 1, &cfg).unwrap();
        assert!((s.energy - 0.5 * e0).abs() / (0.5 * e0) < 1e-3, "{}", s.energy);
        let s = stationary_solve(&g, &v, 1.0, 1, &cfg).unwrap();
        assert!(s.energy.abs() < 1e-3, "{}", s.energy);
    }

    #[test]
    fn eigenfunctions_are_sines() {
        let g = box_grid();
        let v = vec![0.0; g.len()];
        for n in 1..=3 {
            for lambda in [0.0, 0.6, 1.0] {
                let s = stationary_solve(&g, &v, lambda, n, &StationaryConfig::default()).unwrap();
                let err: f64 = s
                    .psi
                    .values()
                    .iter()
                    .zip(g.points())
                    .map(|(p, x)| (p.re - 2f64.sqrt() * (n as f64 * PI * x).sin()).powi(2))
                    .sum::<f64>()
                    * g.dx();
                assert!(err.sqrt() < 1e-3, "n={n} lambda={lambda}: {}", err.sqrt());
            }
        }
    }

    #[test]
    fn harmonic_well_ground_state() {
        let g = Grid1D::new(-8.0, 8.0, 1601).unwrap();
        let v: Vec<f64> = g.points().iter().map(|x| 0.5 * x * x).collect();
        let s = stationary_solve(&g, &v, 0.0, 1, &StationaryConfig::default()).unwrap();
        assert!((s.energy - 0.5).abs() < 1e-4);
        let s = stationary_solve(&g, &v, 0.0, 2, &StationaryConfig::default()).unwrap();
        assert!((s.energy - 1.5).abs() < 1e-4);
    }

    #[test]
    fn reports_non_convergence_and_bad_input() {
        let g = box_grid();
        let v = vec![0.0; g.len()];
        let cfg = StationaryConfig {
            max_iter: 1,
            ..StationaryConfig::default()
        };
        assert!(matches!(
            stationary_solve(&g, &v, 0.5, 1, &cfg),
            Err(Error::NonConvergence { iterations: 1, .. })
        ));
        assert!(stationary_solve(&g, &v, 1.5, 1, &StationaryConfig::default()).is_err());
        assert!(stationary_solve(&g, &v, 0.5, 0, &StationaryConfig::default()).is_err());
        assert!(stationary_solve(&g, &v[1..], 0.5, 1, &StationaryConfig::default()).is_err());
    }
}
