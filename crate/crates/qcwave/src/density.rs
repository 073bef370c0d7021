//! λ-dependent density matrices for superpositions, entangled pairs and
//! measurement records.
//!
//! A subsystem flagged classical has its phase-bearing (off-diagonal) blocks
//! replaced by zero. For `0 < λ < 1` only the interference phase is rescaled
//! by `f(λ)`; magnitudes are untouched.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_lambda, Error, Result};

pub type CMatrix = DMatrix<Complex64>;

const NORM_TOL: f64 = 1e-12;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn check_unit(a: f64, b: f64) -> Result<()> {
    let total = a * a + b * b;
    if (total - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized(total));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleOrigin {
    Direct,
    FromEnergy { e: f64, v: f64, q: f64, lambda: f64 },
}

/// Momentum scale factor `f(λ)` defined by `p²(λ) = p_q² f²(λ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseScale {
    pub f_value: f64,
    pub origin: ScaleOrigin,
}

impl PhaseScale {
    pub fn direct(f_value: f64) -> Result<Self> {
        if !(f_value >= 0.0 && f_value.is_finite()) {
            return Err(Error::InvalidParameter(format!("phase scale must be >= 0, got {f_value}")));
        }
        Ok(Self {
            f_value,
            origin: ScaleOrigin::Direct,
        })
    }

    pub fn unit() -> Self {
        Self {
            f_value: 1.0,
            origin: ScaleOrigin::Direct,
        }
    }
}

/// `f = √(1 + λQ / (E − (V+Q)))`.
pub fn f_of_lambda(e: f64, v: f64, q: f64, lambda: f64) -> Result<PhaseScale> {
    check_lambda(lambda)?;
    let pq = e - (v + q);
    if pq == 0.0 {
        return Err(Error::BohmianRest);
    }
    let radicand = 1.0 + lambda * q / pq;
    if radicand < 0.0 {
        return Err(Error::ClassicallyForbidden(radicand));
    }
    Ok(PhaseScale {
        f_value: radicand.sqrt(),
        origin: ScaleOrigin::FromEnergy { e, v, q, lambda },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub trace: f64,
    pub purity: f64,
    pub min_eigenvalue: f64,
    pub offdiag_maxabs: f64,
}

/// Properties shared by every density matrix.
pub trait DensityMatrix {
    fn entries(&self) -> &CMatrix;
    fn labels(&self) -> &[String];

    fn trace(&self) -> Complex64 {
        self.entries().trace()
    }

    fn purity(&self) -> f64 {
        let m = self.entries();
        (m * m).trace().re
    }

    fn hermiticity_error(&self) -> f64 {
        let m = self.entries();
        (m - m.adjoint()).iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    fn min_eigenvalue(&self) -> f64 {
        let m = self.entries();
        // symmetrize to guard the solver against round-off asymmetry
        let h = (m + m.adjoint()) * c(0.5);
        h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    fn offdiag_maxabs(&self) -> f64 {
        let m = self.entries();
        let mut best = 0.0f64;
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if i != j {
                    best = best.max(m[(i, j)].norm());
                }
            }
        }
        best
    }

    fn is_diagonal(&self) -> bool {
        self.offdiag_maxabs() == 0.0
    }

    fn summary(&self) -> Summary {
        Summary {
            trace: self.trace().re,
            purity: self.purity(),
            min_eigenvalue: self.min_eigenvalue(),
            offdiag_maxabs: self.offdiag_maxabs(),
        }
    }

    /// Hermitian, unit trace and positive semidefinite within `tol`.
    fn check_physical(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
            && (self.trace() - c(1.0)).norm() <= tol
            && self.min_eigenvalue() >= -tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QubitDensityMatrix {
    pub entries: CMatrix,
    pub labels: Vec<String>,
}

impl DensityMatrix for QubitDensityMatrix {
    fn entries(&self) -> &CMatrix {
        &self.entries
    }

    fn labels(&self) -> &[String] {
        &self.labels
    }
}

impl QubitDensityMatrix {
    /// Zero the off-diagonal entries.
    pub fn classicalize(&self) -> Self {
        Self {
            entries: dephase(&self.entries, &[2], 0),
            labels: self.labels.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointDensityMatrix {
    pub entries: CMatrix,
    /// Dimension of each tensor factor, outermost first.
    pub dims: Vec<usize>,
    pub labels: Vec<String>,
    pub lambdas: Vec<f64>,
}

impl DensityMatrix for JointDensityMatrix {
    fn entries(&self) -> &CMatrix {
        &self.entries
    }

    fn labels(&self) -> &[String] {
        &self.labels
    }
}

impl JointDensityMatrix {
    /// Zero every entry whose row and column differ in subsystem `k`.
    pub fn classicalize_subsystem(&self, k: usize) -> Self {
        let mut lambdas = self.lambdas.clone();
        if let Some(l) = lambdas.get_mut(k) {
            *l = 1.0;
        }
        Self {
            entries: dephase(&self.entries, &self.dims, k),
            dims: self.dims.clone(),
            labels: self.labels.clone(),
            lambdas,
        }
    }

    /// Trace out the listed subsystems.
    pub fn partial_trace(&self, traced: &[usize]) -> JointDensityMatrix {
        let keep: Vec<usize> = (0..self.dims.len()).filter(|k| !traced.contains(k)).collect();
        let kept_dims: Vec<usize> = keep.iter().map(|&k| self.dims[k]).collect();
        let n_out: usize = kept_dims.iter().product();
        let mut out = CMatrix::zeros(n_out, n_out);
        let n = self.entries.nrows();
        for i in 0..n {
            let di = digits(i, &self.dims);
            for j in 0..n {
                let dj = digits(j, &self.dims);
                if traced.iter().any(|&k| di[k] != dj[k]) {
                    continue;
                }
                let oi = compose(&keep.iter().map(|&k| di[k]).collect::<Vec<_>>(), &kept_dims);
                let oj = compose(&keep.iter().map(|&k| dj[k]).collect::<Vec<_>>(), &kept_dims);
                out[(oi, oj)] += self.entries[(i, j)];
            }
        }
        let labels = (0..n_out).map(|i| product_label(i, &kept_dims)).collect();
        JointDensityMatrix {
            entries: out,
            dims: kept_dims,
            labels,
            lambdas: keep.iter().filter_map(|&k| self.lambdas.get(k).copied()).collect(),
        }
    }
}

fn digits(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        out[k] = index % dims[k];
        index /= dims[k];
    }
    out
}

fn compose(d: &[usize], dims: &[usize]) -> usize {
    d.iter().zip(dims).fold(0, |acc, (&di, &n)| acc * n + di)
}

fn dephase(m: &CMatrix, dims: &[usize], k: usize) -> CMatrix {
    let mut out = m.clone();
    for i in 0..m.nrows() {
        let di = digits(i, dims);
        for j in 0..m.ncols() {
            if di[k] != digits(j, dims)[k] {
                out[(i, j)] = Complex64::default();
            }
        }
    }
    out
}

/// `+`/`-` labels for a product basis of qubits.
fn product_label(index: usize, dims: &[usize]) -> String {
    digits(index, dims)
        .iter()
        .map(|&d| if d == 0 { '+' } else { '-' })
        .collect()
}

fn qubit_labels(n: usize) -> Vec<String> {
    let dims = vec![2; n];
    (0..1 << n).map(|i| product_label(i, &dims)).collect()
}

fn outer(i: usize, j: usize, n: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    m[(i, j)] = c(1.0);
    m
}

/// `[[a², ab e^{−ifδ}], [ab e^{ifδ}, b²]]`, or `diag(a², b²)` when classical.
pub fn superposition_rho(a: f64, b: f64, delta: f64, f: PhaseScale, classical: bool) -> Result<QubitDensityMatrix> {
    check_unit(a, b)?;
    let phase = f.f_value * delta;
    let mut m = CMatrix::zeros(2, 2);
    m[(0, 0)] = c(a * a);
    m[(1, 1)] = c(b * b);
    if !classical {
        m[(0, 1)] = Complex64::from_polar(a * b, -phase);
        m[(1, 0)] = Complex64::from_polar(a * b, phase);
    }
    Ok(QubitDensityMatrix {
        entries: m,
        labels: vec!["u".into(), "v".into()],
    })
}

/// `|c⟩⟨c|` for a normalized coefficient vector (complex amplitudes).
pub fn pure_state_rho(coeffs: &[Complex64]) -> Result<CMatrix> {
    let total: f64 = coeffs.iter().map(|v| v.norm_sqr()).sum();
    if (total - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized(total));
    }
    let n = coeffs.len();
    Ok(CMatrix::from_fn(n, n, |i, j| coeffs[i] * coeffs[j].conj()))
}

/// `diag(a²,b²) ⊗ diag(b²,a²) + C₁ ⊗ C₂` where `Cᵢ` carries the phase
/// `fᵢδᵢ` and is zero for a classical subsystem.
pub fn joint_rho(
    a: f64,
    b: f64,
    delta: [f64; 2],
    f: [PhaseScale; 2],
    classical: [bool; 2],
) -> Result<JointDensityMatrix> {
    check_unit(a, b)?;
    let d1 = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(a * a), c(b * b)]));
    let d2 = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(b * b), c(a * a)]));
    let coherence = |k: usize| -> CMatrix {
        let mut m = CMatrix::zeros(2, 2);
        if !classical[k] {
            let phase = f[k].f_value * delta[k];
            m[(0, 1)] = Complex64::from_polar(a * b, phase);
            m[(1, 0)] = Complex64::from_polar(a * b, -phase);
        }
        m
    };
    let entries = d1.kronecker(&d2) + coherence(0).kronecker(&coherence(1));
    Ok(JointDensityMatrix {
        entries,
        dims: vec![2, 2],
        labels: qubit_labels(2),
        lambdas: classical.iter().map(|&cl| if cl { 1.0 } else { 0.0 }).collect(),
    })
}

/// Spin system ⊗ pointer after a Stern-Gerlach interaction.
pub fn measurement_rho(c_plus: f64, c_minus: f64, delta1: f64, apparatus_classical: bool) -> Result<JointDensityMatrix> {
    check_unit(c_plus, c_minus)?;
    let sys_pp = outer(0, 0, 2) * c(c_plus * c_plus);
    let sys_mm = outer(1, 1, 2) * c(c_minus * c_minus);
    let sys_pm = outer(0, 1, 2) * Complex64::from_polar(c_plus * c_minus, delta1);
    let sys_mp = outer(1, 0, 2) * Complex64::from_polar(c_plus * c_minus, -delta1);
    let (app_pm, app_mp) = if apparatus_classical {
        (CMatrix::zeros(2, 2), CMatrix::zeros(2, 2))
    } else {
        (outer(0, 1, 2), outer(1, 0, 2))
    };
    let entries = sys_pp.kronecker(&outer(0, 0, 2))
        + sys_mm.kronecker(&outer(1, 1, 2))
        + sys_pm.kronecker(&app_pm)
        + sys_mp.kronecker(&app_mp);
    Ok(JointDensityMatrix {
        entries,
        dims: vec![2, 2],
        labels: qubit_labels(2),
        lambdas: vec![0.0, if apparatus_classical { 1.0 } else { 0.0 }],
    })
}

/// EPR-Bohm pair `a ⊗ b` with apparatus `A ⊗ B`, 16×16 in the `a,b,A,B`
/// product basis (`+` = index 0).
pub fn epr_rho(apparatus_classical: bool, delta_ab: f64, delta_big_ab: f64) -> JointDensityMatrix {
    let dims = [2usize; 4];
    let up_down = compose(&[0, 1, 0, 1], &dims);
    let down_up = compose(&[1, 0, 1, 0], &dims);
    let mut m = CMatrix::zeros(16, 16);
    m[(up_down, up_down)] = c(0.5);
    m[(down_up, down_up)] = c(0.5);
    if !apparatus_classical {
        m[(up_down, down_up)] = -Complex64::from_polar(0.5, delta_ab + delta_big_ab);
        m[(down_up, up_down)] = -Complex64::from_polar(0.5, -(delta_ab + delta_big_ab));
    }
    let app = if apparatus_classical { 1.0 } else { 0.0 };
    JointDensityMatrix {
        entries: m,
        dims: dims.to_vec(),
        labels: qubit_labels(4),
        lambdas: vec![0.0, 0.0, app, app],
    }
}
