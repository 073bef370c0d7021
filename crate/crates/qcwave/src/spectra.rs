//! Closed-form particle-in-a-box levels across λ, the scaled canonical
//! commutator and Bohmian momentum relations.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_lambda, Error, Result};
use crate::schedule::{lambda_at, LambdaSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxSpec {
    pub length: f64,
    pub mass: f64,
    pub hbar: f64,
    pub n_max: usize,
}

impl Default for BoxSpec {
    fn default() -> Self {
        Self {
            length: 1.0,
            mass: 1.0,
            hbar: 1.0,
            n_max: 3,
        }
    }
}

impl BoxSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("length", self.length), ("mass", self.mass), ("hbar", self.hbar)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.n_max == 0 {
            return Err(Error::InvalidParameter("n_max must be >= 1".into()));
        }
        Ok(())
    }

    /// `n² π² ħ² / 2 m L²`.
    pub fn energy(&self, n: usize) -> f64 {
        let n = n as f64;
        n * n * PI * PI * self.hbar * self.hbar / (2.0 * self.mass * self.length * self.length)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    pub n: usize,
    pub e_n: f64,
    pub q_n: f64,
    pub e_n_lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelTable {
    pub lambda: f64,
    pub rows: Vec<LevelRow>,
}

pub fn box_levels(spec: &BoxSpec, lambda: f64) -> Result<LevelTable> {
    spec.validate()?;
    check_lambda(lambda)?;
    let rows = (1..=spec.n_max)
        .map(|n| {
            let e_n = spec.energy(n);
            // in a box the quantum potential of level n equals its energy
            let q_n = e_n;
            LevelRow {
                n,
                e_n,
                q_n,
                e_n_lambda: (1.0 - lambda) * q_n,
            }
        })
        .collect();
    Ok(LevelTable { lambda, rows })
}

pub fn spacing_ratio(lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(1.0 - lambda)
}

/// `(E_{n+1,λ} − E_{nλ}) / (E_{n+1} − E_n)` for every adjacent pair.
pub fn spacing_ratios(quantum: &LevelTable, scaled: &LevelTable) -> Result<Vec<f64>> {
    if quantum.rows.len() != scaled.rows.len() || quantum.rows.len() < 2 {
        return Err(Error::InvalidParameter("tables need matching rows and at least two levels".into()));
    }
    Ok(quantum
        .rows
        .windows(2)
        .zip(scaled.rows.windows(2))
        .map(|(q, s)| (s[1].e_n_lambda - s[0].e_n_lambda) / (q[1].e_n_lambda - q[0].e_n_lambda))
        .collect())
}

/// `[p̂(λ), q] = −i √(1−λ) ħ`.
pub fn commutator_scale(lambda: f64, hbar: f64) -> Result<Complex64> {
    check_lambda(lambda)?;
    Ok(Complex64::new(0.0, -(1.0 - lambda).sqrt() * hbar))
}

/// Fourier differentiation matrix on `n` periodic samples of period `period`.
pub fn spectral_derivative_matrix(n: usize, period: f64) -> DMatrix<f64> {
    assert!(n % 2 == 0, "spectral derivative matrix needs an even size");
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            let d = i as f64 - j as f64;
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            sign * PI / period / (PI * d / n as f64).tan()
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommutatorCheck {
    pub expected: Complex64,
    /// Max over test vectors and interior samples of `|[p̂,q]f − c f| / max|f|`.
    pub max_deviation: f64,
}

/// Build `p̂(λ) = √(1−λ)(−iħD)` and `q = diag(x)` on `n_points` periodic
/// samples and compare `[p̂(λ), q]` against `−i√(1−λ)ħ` on smooth,
/// localized test vectors.
pub fn commutator_check(lambda: f64, hbar: f64, n_points: usize) -> Result<CommutatorCheck> {
    let expected = commutator_scale(lambda, hbar)?;
    if n_points < 16 || n_points % 2 != 0 {
        return Err(Error::InvalidParameter("n_points must be even and >= 16".into()));
    }
    let dx = 1.0;
    let period = n_points as f64 * dx;
    let x: Vec<f64> = (0..n_points).map(|i| (i as f64 - n_points as f64 / 2.0) * dx).collect();
    let d = spectral_derivative_matrix(n_points, period).map(|v| Complex64::new(v, 0.0));
    let p = d * Complex64::new(0.0, -hbar * (1.0 - lambda).sqrt());
    let q = DMatrix::from_diagonal(&DVector::from_iterator(n_points, x.iter().map(|&v| Complex64::new(v, 0.0))));
    let comm = &p * &q - &q * &p;

    let width = 4.0 * dx;
    let k_max = 0.5 * PI / dx;
    let mut max_dev = 0.0f64;
    for &k in &[0.0, 0.25 * k_max, 0.5 * k_max] {
        for &shift in &[-0.1 * period, 0.0, 0.07 * period] {
            let f = DVector::from_iterator(
                n_points,
                x.iter().map(|&xi| {
                    let g = (-(xi - shift).powi(2) / (2.0 * width * width)).exp();
                    Complex64::from_polar(g, k * xi)
                }),
            );
            let lhs = &comm * &f;
            let scale = f.iter().map(|v| v.norm()).fold(0.0, f64::max);
            let lo = n_points / 10;
            for i in lo..n_points - lo {
                max_dev = max_dev.max((lhs[i] - expected * f[i]).norm() / scale);
            }
        }
    }
    Ok(CommutatorCheck {
        expected,
        max_deviation: max_dev,
    })
}

/// `p = √(2m[E − (V+Q) + λQ])`; at λ = 1 this is `√(2m[E − V])`.
pub fn bohmian_momentum(e: f64, v: f64, q: f64, lambda: f64, mass: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let radicand = if lambda == 1.0 {
        2.0 * mass * (e - v)
    } else {
        2.0 * mass * (e - (v + q) + lambda * q)
    };
    if radicand < 0.0 {
        return Err(Error::ClassicallyForbidden(radicand));
    }
    Ok(radicand.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DotLevel {
    pub t: f64,
    pub lambda: f64,
    pub n: usize,
    pub energy: f64,
}

/// Box levels `E_{nλ(t)}` for every time in `t_grid`.
pub fn predict_dot_levels(spec: &BoxSpec, schedule: &LambdaSchedule, t_grid: &[f64]) -> Result<Vec<DotLevel>> {
    schedule.validate()?;
    let mut out = Vec::with_capacity(t_grid.len() * spec.n_max);
    for &t in t_grid {
        let lambda = lambda_at(schedule, t)?;
        for row in box_levels(spec, lambda)?.rows {
            out.push(DotLevel {
                t,
                lambda,
                n: row.n,
                energy: row.e_n_lambda,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_level_examples() {
        let spec = BoxSpec::default();
        let t0 = box_levels(&spec, 0.0).unwrap();
        assert!((t0.rows[0].e_n - 4.934802200544679).abs() < 1e-12);
        assert_eq!(t0.rows[0].e_n_lambda, t0.rows[0].e_n);
        let t1 = box_levels(&spec, 1.0).unwrap();
        assert!(t1.rows.iter().all(|r| r.e_n_lambda == 0.0));
        let t = box_levels(&spec, 0.25).unwrap();
        assert!((t.rows[1].e_n_lambda - 1.5 * PI * PI).abs() < 1e-12);
        for w in t0.rows.windows(2) {
            assert!(w[1].e_n > w[0].e_n);
        }
        for l in [0.1, 0.6, 0.9] {
            for r in box_levels(&spec, l).unwrap().rows {
                assert!((r.e_n_lambda - (1.0 - l) * r.e_n).abs() <= 1e-12 * r.e_n);
            }
        }
        assert!(box_levels(&spec, -0.1).is_err());
        assert!(box_levels(&BoxSpec { length: 0.0, ..spec }, 0.0).is_err());
    }

    #[test]
    fn spacing() {
        assert_eq!(spacing_ratio(0.0).unwrap(), 1.0);
        assert_eq!(spacing_ratio(0.5).unwrap(), 0.5);
        let spec = BoxSpec { n_max: 12, ..Default::default() };
        let q = box_levels(&spec, 0.0).unwrap();
        for l in [0.0, 0.3, 0.5, 0.99, 1.0] {
            let s = box_levels(&spec, l).unwrap();
            for r in spacing_ratios(&q, &s).unwrap() {
                assert!((r - (1.0 - l)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn commutator_values() {
        assert_eq!(commutator_scale(0.0, 1.0).unwrap(), Complex64::new(0.0, -1.0));
        assert_eq!(commutator_scale(1.0, 1.0).unwrap(), Complex64::new(0.0, 0.0));
        assert!((commutator_scale(0.75, 1.0).unwrap() - Complex64::new(0.0, -0.5)).norm() < 1e-15);
        assert!((commutator_scale(0.0, 2.5).unwrap() - Complex64::new(0.0, -2.5)).norm() < 1e-15);
    }

    #[test]
    fn commutator_matrix_check() {
        for n in [64, 256] {
            for l in [0.0, 0.5, 1.0] {
                let c = commutator_check(l, 1.0, n).unwrap();
                assert!(c.max_deviation < 1e-6, "n={n} λ={l}: {}", c.max_deviation);
            }
        }
    }

    #[test]
    fn derivative_matrix_differentiates_trig() {
        let n = 32;
        let d = spectral_derivative_matrix(n, 2.0 * PI);
        let x: Vec<f64> = (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect();
        let f = DVector::from_iterator(n, x.iter().map(|v| (3.0 * v).sin()));
        let df = d * f;
        for (i, xi) in x.iter().enumerate() {
            assert!((df[i] - 3.0 * (3.0 * xi).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn momentum_examples() {
        let spec = BoxSpec::default();
        let e1 = spec.energy(1);
        assert_eq!(bohmian_momentum(e1, 0.0, e1, 0.0, 1.0).unwrap(), 0.0);
        assert_eq!(bohmian_momentum(2.0, 0.0, 0.7, 1.0, 1.0).unwrap(), 2.0);
        assert!((bohmian_momentum(1.0, 0.0, 1.0, 0.5, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(
            bohmian_momentum(0.5, 0.0, 1.0, 0.0, 1.0),
            Err(Error::ClassicallyForbidden(_))
        ));
        // nondecreasing in λ when Q > 0
        let mut prev = 0.0;
        for k in 0..=100 {
            let p = bohmian_momentum(3.0, 0.5, 1.2, k as f64 / 100.0, 1.0).unwrap();
            assert!(p >= prev);
            prev = p;
        }
    }

    #[test]
    fn dot_predictions() {
        let spec = BoxSpec::default();
        let times = [0.0, 5.0, 10.0, 1000.0];
        let stat = predict_dot_levels(&spec, &LambdaSchedule::constant(0.0), &times).unwrap();
        for lvl in &stat {
            assert_eq!(lvl.energy, spec.energy(lvl.n));
        }
        let logi = LambdaSchedule::Logistic { b: 2.0, t0: 10.0 };
        let rows = predict_dot_levels(&spec, &logi, &times).unwrap();
        for lvl in rows.iter().filter(|l| l.t == 10.0) {
            assert_eq!(lvl.energy, 0.5 * spec.energy(lvl.n));
        }
        for lvl in rows.iter().filter(|l| l.t == 1000.0) {
            assert!(lvl.energy.abs() < 1e-300);
        }
    }
}
