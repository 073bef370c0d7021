//! Quantum potential `Q = −(ħ²/2m) ∇²R / R` and the effective potential
//! `V − Σ λᵢ Qᵢ`.
//!
//! The amplitude may be passed signed (a real stationary state), in which case
//! `∇²R / R` is continuous through the sign changes.

use crate::error::{check_lambda, Error, Result};
use crate::field::{ComplexField, NODE_EPS};
use crate::grid::{Boundary, Grid, Grid1D, Grid2D};
use crate::stencil::{along_axis, second_derivative};

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField {
    pub grid: Grid,
    pub v: Vec<f64>,
    /// One quantum potential per degree of freedom.
    pub q: Vec<Vec<f64>>,
    pub lambdas: Vec<f64>,
    pub effective: Vec<f64>,
}

impl PotentialField {
    pub fn from_field(field: &ComplexField, v: &[f64], boundary: Boundary) -> Result<Self> {
        let q = quantum_potentials(field, boundary)?;
        let lambdas: Vec<f64> = field.dofs().iter().map(|d| d.lambda).collect();
        let refs: Vec<&[f64]> = q.iter().map(Vec::as_slice).collect();
        let effective = effective_potential(v, &refs, &lambdas)?;
        Ok(Self {
            grid: *field.grid(),
            v: v.to_vec(),
            q,
            lambdas,
            effective,
        })
    }
}

fn check_amplitude(r: &[f64]) -> Result<f64> {
    let max = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return Err(Error::NullAmplitude);
    }
    if !max.is_finite() {
        return Err(Error::InvalidParameter("non-finite amplitude".into()));
    }
    Ok(max)
}

/// `R` clamped away from zero, keeping its sign.
#[inline]
fn clamp_denominator(r: f64, floor: f64) -> f64 {
    if r.abs() >= floor {
        r
    } else if r < 0.0 {
        -floor
    } else {
        floor
    }
}

/// Replace masked samples by the value of the nearest unmasked sample
/// (the left one on ties). Returns false if every sample is masked.
pub fn extend_over_mask(values: &mut [f64], mask: &[bool]) -> bool {
    let n = values.len();
    let mut left: Vec<Option<usize>> = vec![None; n];
    let mut last = None;
    for i in 0..n {
        if !mask[i] {
            last = Some(i);
        }
        left[i] = last;
    }
    if last.is_none() {
        return false;
    }
    let mut right = None;
    for i in (0..n).rev() {
        if !mask[i] {
            right = Some(i);
            continue;
        }
        let src = match (left[i], right) {
            (Some(l), Some(r)) => {
                if i - l <= r - i {
                    l
                } else {
                    r
                }
            }
            (Some(l), None) => l,
            (None, Some(r)) => r,
            (None, None) => unreachable!(),
        };
        values[i] = values[src];
    }
    true
}

pub fn quantum_potential(
    r: &[f64],
    grid: &Grid1D,
    mass: f64,
    hbar: f64,
    node_mask: &[bool],
    boundary: Boundary,
) -> Result<Vec<f64>> {
    if r.len() != grid.len() || node_mask.len() != grid.len() {
        return Err(Error::ShapeMismatch {
            expected: grid.len(),
            got: r.len().min(node_mask.len()),
        });
    }
    let max = check_amplitude(r)?;
    let floor = NODE_EPS * max;
    let lap = second_derivative(r, grid.dx(), boundary);
    let pref = -hbar * hbar / (2.0 * mass);
    let mut q: Vec<f64> = lap
        .iter()
        .zip(r)
        .map(|(l, &rv)| pref * l / clamp_denominator(rv, floor))
        .collect();
    extend_over_mask(&mut q, node_mask);
    Ok(q)
}

/// Row-major `(n1, n2)` amplitude; returns `(Q₁, Q₂)`.
#[allow(clippy::too_many_arguments)]
pub fn quantum_potential_2d(
    r: &[f64],
    grid: &Grid2D,
    mass1: f64,
    mass2: f64,
    hbar: f64,
    node_mask: &[bool],
    boundary: Boundary,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if r.len() != grid.len() || node_mask.len() != grid.len() {
        return Err(Error::ShapeMismatch {
            expected: grid.len(),
            got: r.len().min(node_mask.len()),
        });
    }
    let max = check_amplitude(r)?;
    let floor = NODE_EPS * max;
    let shape = grid.shape();
    let mut out = Vec::with_capacity(2);
    for (axis, mass, g) in [(0, mass1, &grid.axis1), (1, mass2, &grid.axis2)] {
        let lap = along_axis(r, shape, axis, |line| second_derivative(line, g.dx(), boundary));
        let pref = -hbar * hbar / (2.0 * mass);
        let mut q: Vec<f64> = lap
            .iter()
            .zip(r)
            .map(|(l, &rv)| pref * l / clamp_denominator(rv, floor))
            .collect();
        extend_over_mask_2d(&mut q, node_mask, shape);
        out.push(q);
    }
    let q2 = out.pop().unwrap();
    let q1 = out.pop().unwrap();
    Ok((q1, q2))
}

/// Row-wise extension, then fully masked rows copy the nearest filled row.
pub(crate) fn extend_over_mask_2d(values: &mut [f64], mask: &[bool], (n1, n2): (usize, usize)) {
    let mut filled = vec![false; n1];
    for i in 0..n1 {
        let row = i * n2..(i + 1) * n2;
        filled[i] = extend_over_mask(&mut values[row.clone()], &mask[row]);
    }
    let row_mask: Vec<bool> = filled.iter().map(|f| !f).collect();
    let mut idx: Vec<f64> = (0..n1).map(|i| i as f64).collect();
    if !extend_over_mask(&mut idx, &row_mask) {
        return;
    }
    for (i, src) in idx.into_iter().enumerate() {
        let src = src as usize;
        if src != i {
            let (a, b) = (src * n2, i * n2);
            for k in 0..n2 {
                values[b + k] = values[a + k];
            }
        }
    }
}

/// Quantum potential of every degree of freedom of `field`, from `|ψ|`.
pub fn quantum_potentials(field: &ComplexField, boundary: Boundary) -> Result<Vec<Vec<f64>>> {
    let r: Vec<f64> = field.values().iter().map(|v| v.norm()).collect();
    let mask = crate::field::node_mask(&r, NODE_EPS);
    let hbar = field.hbar();
    match field.grid() {
        Grid::One(g) => Ok(vec![quantum_potential(
            &r,
            g,
            field.dofs()[0].mass,
            hbar,
            &mask,
            boundary,
        )?]),
        Grid::Two(g) => {
            let (q1, q2) = quantum_potential_2d(
                &r,
                g,
                field.dofs()[0].mass,
                field.dofs()[1].mass,
                hbar,
                &mask,
                boundary,
            )?;
            Ok(vec![q1, q2])
        }
    }
}

pub fn effective_potential(v: &[f64], qs: &[&[f64]], lambdas: &[f64]) -> Result<Vec<f64>> {
    if qs.len() != lambdas.len() {
        return Err(Error::InvalidParameter(format!(
            "{} quantum potentials but {} lambdas",
            qs.len(),
            lambdas.len()
        )));
    }
    for &l in lambdas {
        check_lambda(l)?;
    }
    for q in qs {
        if q.len() != v.len() {
            return Err(Error::ShapeMismatch {
                expected: v.len(),
                got: q.len(),
            });
        }
    }
    Ok(v.iter()
        .enumerate()
        .map(|(i, &vi)| vi - qs.iter().zip(lambdas).map(|(q, l)| l * q[i]).sum::<f64>())
        .collect())
}
