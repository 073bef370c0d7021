//! Residuals of the modified Hamilton-Jacobi and continuity equations between
//! two consecutive snapshots.
//!
//! Time derivatives are forward differences centred on the half step; spatial
//! terms are averaged over the two snapshots, so both residuals are second
//! order in `dt`. Points with `R < RESIDUAL_MASK · max R` on either snapshot,
//! their two neighbours on each side, and the two outermost cells of a
//! non-periodic line are excluded: `∇²R/R` is dominated by round-off there.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::{Boundary, Grid};
use crate::potential::quantum_potentials;
use crate::stencil::{along_axis, first_derivative};

pub const RESIDUAL_MASK: f64 = 1e-4;
const DILATE: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    pub hj_max: f64,
    pub continuity_max: f64,
}

struct Spatial {
    /// `Σ (∂ₖS)²/2mₖ + (1−λₖ)Qₖ`
    hj: Vec<f64>,
    /// `Σ ∂ₖ jₖ`
    divergence: Vec<f64>,
}

fn shape(grid: &Grid) -> (usize, usize) {
    match grid {
        Grid::One(g) => (1, g.len()),
        Grid::Two(g) => g.shape(),
    }
}

/// Axis index as used by `along_axis` for the `k`-th degree of freedom.
fn line_axis(grid: &Grid, k: usize) -> usize {
    match grid {
        Grid::One(_) => 1,
        Grid::Two(_) => k,
    }
}

fn spatial_terms(psi: &ComplexField, boundary: Boundary, need_q: bool) -> Result<Spatial> {
    let grid = psi.grid();
    let shape = shape(grid);
    let hbar = psi.hbar();
    let values = psi.values();
    let density = psi.density();
    let q = if need_q { Some(quantum_potentials(psi, boundary)?) } else { None };
    let mut hj = vec![0.0; values.len()];
    let mut divergence = vec![0.0; values.len()];
    for (k, dof) in psi.dofs().iter().enumerate() {
        let axis = grid.axis(k);
        let la = line_axis(grid, k);
        let grad = along_axis(values, shape, la, |l| first_derivative(l, axis.dx(), boundary));
        // j = (ħ/m) Im(ψ* ∂ψ);  ∂S = ħ Im(ψ* ∂ψ) / |ψ|²
        let flux_core: Vec<f64> = values.iter().zip(&grad).map(|(p, d)| (p.conj() * d).im).collect();
        let flux: Vec<f64> = flux_core.iter().map(|c| hbar * c / dof.mass).collect();
        let div = along_axis(&flux, shape, la, |l| first_derivative(l, axis.dx(), boundary));
        for i in 0..values.len() {
            let ds = if density[i] > 0.0 { hbar * flux_core[i] / density[i] } else { 0.0 };
            hj[i] += ds * ds / (2.0 * dof.mass);
            if let Some(q) = &q {
                hj[i] += (1.0 - dof.lambda) * q[k][i];
            }
            divergence[i] += div[i];
        }
    }
    Ok(Spatial { hj, divergence })
}

fn excluded(psi0: &ComplexField, psi1: &ComplexField, boundary: Boundary) -> Vec<bool> {
    let (n1, n2) = shape(psi0.grid());
    let two_d = matches!(psi0.grid(), Grid::Two(_));
    let mut low = vec![false; n1 * n2];
    for psi in [psi0, psi1] {
        let r: Vec<f64> = psi.values().iter().map(|v| v.norm()).collect();
        let max = r.iter().cloned().fold(0.0, f64::max);
        for (l, &rv) in low.iter_mut().zip(&r) {
            *l |= rv < RESIDUAL_MASK * max;
        }
    }
    let mut out = low.clone();
    let d = DILATE as isize;
    for i1 in 0..n1 as isize {
        for i2 in 0..n2 as isize {
            if !low[(i1 as usize) * n2 + i2 as usize] {
                continue;
            }
            for a in -d..=d {
                for b in -d..=d {
                    if !two_d && a != 0 {
                        continue;
                    }
                    let (j1, j2) = (i1 + a, i2 + b);
                    let (j1, j2) = if boundary == Boundary::Periodic {
                        (j1.rem_euclid(n1 as isize), j2.rem_euclid(n2 as isize))
                    } else {
                        (j1, j2)
                    };
                    if (0..n1 as isize).contains(&j1) && (0..n2 as isize).contains(&j2) {
                        out[j1 as usize * n2 + j2 as usize] = true;
                    }
                }
            }
        }
    }
    if boundary != Boundary::Periodic {
        for i1 in 0..n1 {
            for i2 in 0..n2 {
                let near_edge = i2 < DILATE || i2 + DILATE >= n2 || (two_d && (i1 < DILATE || i1 + DILATE >= n1));
                if near_edge {
                    out[i1 * n2 + i2] = true;
                }
            }
        }
    }
    out
}

/// Max-norm residuals over the retained points. Uses λ and masses from
/// `psi1`. Returns zeros if every point is excluded.
pub fn hj_continuity_residuals(
    psi0: &ComplexField,
    psi1: &ComplexField,
    v: &[f64],
    dt: f64,
    boundary: Boundary,
) -> Result<Residuals> {
    if psi0.grid() != psi1.grid() {
        return Err(Error::GridMismatch);
    }
    if v.len() != psi0.values().len() {
        return Err(Error::ShapeMismatch {
            expected: psi0.values().len(),
            got: v.len(),
        });
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter("dt must be > 0".into()));
    }
    let need_q = psi1.dofs().iter().any(|d| d.lambda != 1.0);
    let lambdas: Vec<f64> = psi1.dofs().iter().map(|d| d.lambda).collect();
    let s0 = spatial_terms(&psi0.clone().with_lambdas(&lambdas)?, boundary, need_q)?;
    let s1 = spatial_terms(psi1, boundary, need_q)?;
    let skip = excluded(psi0, psi1, boundary);
    let hbar = psi1.hbar();

    let mut hj_max = 0.0f64;
    let mut cont_max = 0.0f64;
    for i in 0..v.len() {
        if skip[i] {
            continue;
        }
        let (a, b): (Complex64, Complex64) = (psi0.values()[i], psi1.values()[i]);
        let ds_dt = hbar * (b * a.conj()).arg() / dt;
        let hj = ds_dt + 0.5 * (s0.hj[i] + s1.hj[i]) + v[i];
        let cont = (b.norm_sqr() - a.norm_sqr()) / dt + 0.5 * (s0.divergence[i] + s1.divergence[i]);
        hj_max = hj_max.max(hj.abs());
        cont_max = cont_max.max(cont.abs());
    }
    Ok(Residuals {
        hj_max,
        continuity_max: cont_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Dof;
    use crate::grid::Grid1D;
    use std::f64::consts::PI;

    #[test]
    fn exact_plane_wave() {
        // one period [0, 1) sampled by 1024 points
        let p = Grid1D::new(0.0, 1.0 - 1.0 / 1024.0, 1024).unwrap();
        let k = 2.0 * PI / p.period();
        let dt = 1e-3;
        let make = |t: f64| {
            ComplexField::from_fn_1d(p, Dof::quantum(1.0), 1.0, |x| Complex64::from_polar(1.0, k * x - 0.5 * k * k * t))
                .unwrap()
        };
        let r = hj_continuity_residuals(&make(0.0), &make(dt), &vec![0.0; 1024], dt, Boundary::Periodic).unwrap();
        assert!(r.hj_max < 1e-6, "{}", r.hj_max);
        assert!(r.continuity_max < 1e-6);
    }

    #[test]
    fn unrelated_snapshots_are_detected() {
        let g = Grid1D::centered(256, 0.05).unwrap();
        let a = ComplexField::from_fn_1d(g, Dof::quantum(1.0), 1.0, |x| Complex64::from_polar((-x * x).exp(), 0.0)).unwrap();
        let b = ComplexField::from_fn_1d(g, Dof::quantum(1.0), 1.0, |x| {
            Complex64::from_polar((-(x - 1.0).powi(2)).exp(), 3.0 * x)
        })
        .unwrap();
        let r = hj_continuity_residuals(&a, &b, &vec![0.0; 256], 1e-3, Boundary::Periodic).unwrap();
        assert!(r.hj_max > 1.0 && r.continuity_max > 1.0);
    }
}
