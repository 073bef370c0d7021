//! Wave fields on uniform grids and their polar decomposition.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_lambda, Error, Result};
use crate::grid::{Grid, Grid1D, Grid2D};

/// Amplitudes below `NODE_EPS * max(R)` are treated as nodes.
pub const NODE_EPS: f64 = 1e-8;

/// Per-degree-of-freedom parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dof {
    pub mass: f64,
    pub lambda: f64,
}

impl Dof {
    pub fn new(mass: f64, lambda: f64) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidParameter(format!("mass must be > 0, got {mass}")));
        }
        check_lambda(lambda)?;
        Ok(Self { mass, lambda })
    }

    pub fn quantum(mass: f64) -> Self {
        Self { mass, lambda: 0.0 }
    }
}

impl Default for Dof {
    fn default() -> Self {
        Self {
            mass: 1.0,
            lambda: 0.0,
        }
    }
}

/// Complex samples of a wave function on a 1D or 2D grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: Grid,
    values: Vec<Complex64>,
    dofs: Vec<Dof>,
    hbar: f64,
}

impl ComplexField {
    pub fn new(grid: impl Into<Grid>, values: Vec<Complex64>, dofs: Vec<Dof>, hbar: f64) -> Result<Self> {
        let grid = grid.into();
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if dofs.len() != grid.dims() {
            return Err(Error::InvalidParameter(format!(
                "{} degrees of freedom for a {}-D grid",
                dofs.len(),
                grid.dims()
            )));
        }
        for d in &dofs {
            Dof::new(d.mass, d.lambda)?;
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::InvalidParameter(format!("hbar must be > 0, got {hbar}")));
        }
        Ok(Self {
            grid,
            values,
            dofs,
            hbar,
        })
    }

    /// 1D field with `m = hbar = 1`, `lambda = 0`.
    pub fn natural_1d(grid: Grid1D, values: Vec<Complex64>) -> Result<Self> {
        Self::new(grid, values, vec![Dof::default()], 1.0)
    }

    pub fn from_fn_1d(grid: Grid1D, dof: Dof, hbar: f64, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let values = grid.points().into_iter().map(f).collect();
        Self::new(grid, values, vec![dof], hbar)
    }

    pub fn from_fn_2d(
        grid: Grid2D,
        dofs: [Dof; 2],
        hbar: f64,
        f: impl Fn(f64, f64) -> Complex64,
    ) -> Result<Self> {
        let xs = grid.axis1.points();
        let ys = grid.axis2.points();
        let values = xs
            .iter()
            .flat_map(|&x| ys.iter().map(move |&y| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self::new(grid, values, dofs.to_vec(), hbar)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn dofs(&self) -> &[Dof] {
        &self.dofs
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn with_lambdas(mut self, lambdas: &[f64]) -> Result<Self> {
        if lambdas.len() != self.dofs.len() {
            return Err(Error::InvalidParameter("one lambda per degree of freedom".into()));
        }
        for (d, &l) in self.dofs.iter_mut().zip(lambdas) {
            check_lambda(l)?;
            d.lambda = l;
        }
        Ok(self)
    }

    /// Same metadata, new samples.
    pub fn with_values(&self, values: Vec<Complex64>) -> Result<Self> {
        Self::new(self.grid, values, self.dofs.clone(), self.hbar)
    }

    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    /// `∫|ψ|²` as a Riemann sum over the samples.
    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn is_null(&self) -> bool {
        self.values.iter().all(|v| *v == Complex64::new(0.0, 0.0))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm_sqr();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::NullField);
        }
        let s = n.sqrt().recip();
        self.values.iter_mut().for_each(|v| *v *= s);
        Ok(())
    }

    pub fn normalized(mut self) -> Result<Self> {
        self.normalize()?;
        Ok(self)
    }

    /// `⟨self|other⟩` on the shared grid.
    pub fn inner(&self, other: &ComplexField) -> Result<Complex64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let s: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(s * self.grid.cell_volume())
    }

    /// Mean position along `axis` under `|ψ|²`.
    pub fn mean_position(&self, axis: usize) -> f64 {
        self.moments(axis).0
    }

    /// Standard deviation of position along `axis` under `|ψ|²`.
    pub fn position_spread(&self, axis: usize) -> f64 {
        self.moments(axis).1
    }

    fn moments(&self, axis: usize) -> (f64, f64) {
        let marginal = self.marginal(axis);
        let g = self.grid.axis(axis);
        let total: f64 = marginal.iter().sum();
        let mean = marginal.iter().enumerate().map(|(i, p)| p * g.x(i)).sum::<f64>() / total;
        let var = marginal
            .iter()
            .enumerate()
            .map(|(i, p)| p * (g.x(i) - mean).powi(2))
            .sum::<f64>()
            / total;
        (mean, var.sqrt())
    }

    /// Unnormalized marginal density along `axis` (sum over the other axis).
    pub fn marginal(&self, axis: usize) -> Vec<f64> {
        match &self.grid {
            Grid::One(_) => self.density(),
            Grid::Two(g) => {
                let (n1, n2) = g.shape();
                let mut out = vec![0.0; if axis == 0 { n1 } else { n2 }];
                for i1 in 0..n1 {
                    for i2 in 0..n2 {
                        let p = self.values[g.index(i1, i2)].norm_sqr();
                        out[if axis == 0 { i1 } else { i2 }] += p;
                    }
                }
                out
            }
        }
    }
}

/// Amplitude/action decomposition `ψ = R exp(iS/ħ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarField {
    pub grid: Grid,
    pub r: Vec<f64>,
    pub s: Vec<f64>,
    pub node_mask: Vec<bool>,
    pub dofs: Vec<Dof>,
}

impl PolarField {
    pub fn node_count(&self) -> usize {
        self.node_mask.iter().filter(|&&m| m).count()
    }
}

/// Mark samples whose amplitude is below `eps * max(R)`.
pub fn node_mask(r: &[f64], eps: f64) -> Vec<bool> {
    let max = r.iter().cloned().fold(0.0, f64::max);
    r.iter().map(|&v| v < eps * max).collect()
}

/// Unwrap phases along one scan line, skipping masked samples.
fn unwrap_line(phase: &mut [f64], mask: &[bool]) {
    let mut last: Option<f64> = None;
    for (p, &m) in phase.iter_mut().zip(mask) {
        if m {
            continue;
        }
        if let Some(prev) = last {
            let d = *p - prev;
            *p -= 2.0 * PI * (d / (2.0 * PI)).round();
        }
        last = Some(*p);
    }
}

pub fn to_polar(field: &ComplexField) -> Result<PolarField> {
    if !field.is_finite() {
        return Err(Error::InvalidParameter("field has non-finite samples".into()));
    }
    if field.is_null() {
        return Err(Error::NullField);
    }
    let r: Vec<f64> = field.values.iter().map(|v| v.norm()).collect();
    let mask = node_mask(&r, NODE_EPS);
    let mut phase: Vec<f64> = field.values.iter().map(|v| v.arg()).collect();
    match &field.grid {
        Grid::One(_) => unwrap_line(&mut phase, &mask),
        Grid::Two(g) => {
            let (n1, n2) = g.shape();
            // axis1 along the first column, then every row along axis2
            let mut col: Vec<f64> = (0..n1).map(|i| phase[i * n2]).collect();
            let col_mask: Vec<bool> = (0..n1).map(|i| mask[i * n2]).collect();
            unwrap_line(&mut col, &col_mask);
            for i in 0..n1 {
                phase[i * n2] = col[i];
                let row = i * n2..(i + 1) * n2;
                unwrap_line(&mut phase[row.clone()], &mask[row]);
            }
        }
    }
    let hbar = field.hbar;
    Ok(PolarField {
        grid: field.grid,
        r,
        s: phase.into_iter().map(|p| hbar * p).collect(),
        node_mask: mask,
        dofs: field.dofs.clone(),
    })
}

pub fn recompose(polar: &PolarField, hbar: f64) -> Result<ComplexField> {
    let values = polar
        .r
        .iter()
        .zip(&polar.s)
        .map(|(&r, &s)| Complex64::from_polar(r, s / hbar))
        .collect();
    ComplexField::new(polar.grid, values, polar.dofs.clone(), hbar)
}

/// `a ψ₁ + b ψ₂` with `|a|² + |b|² = 1`.
pub fn superpose(
    a: Complex64,
    psi1: &ComplexField,
    b: Complex64,
    psi2: &ComplexField,
    renormalize: bool,
) -> Result<ComplexField> {
    let total = a.norm_sqr() + b.norm_sqr();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::NotNormalized(total));
    }
    if psi1.grid != psi2.grid {
        return Err(Error::GridMismatch);
    }
    let values = psi1
        .values
        .iter()
        .zip(&psi2.values)
        .map(|(p, q)| a * p + b * q)
        .collect();
    let out = psi1.with_values(values)?;
    if renormalize {
        out.normalized()
    } else {
        Ok(out)
    }
}

/// How the interference phase of [`entangled_polar`] combines the two
/// subsystem phase differences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossPhase {
    /// `cos(δ₁ − δ₂)` with `δᵢ = (Sᵢ₊ − Sᵢ₋)/ħ`; equals `|aψ₁₊ψ₂₋ + bψ₁₋ψ₂₊|²`.
    #[default]
    Consistent,
    /// `cos(δ₁ + δ₂)` with `δᵢ = (Sᵢ₊ − Sᵢ₋)/ħ`.
    SumOfDifferences,
}

/// One subsystem's `±` components sampled on its own axis.
#[derive(Debug, Clone, Copy)]
pub struct QubitBranches<'a> {
    pub r_plus: &'a [f64],
    pub r_minus: &'a [f64],
    pub s_plus: &'a [f64],
    pub s_minus: &'a [f64],
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntangledPolar {
    /// `(n1, n2)`, row-major with subsystem 1 outer.
    pub shape: (usize, usize),
    pub r_sq: Vec<f64>,
    pub s: Vec<f64>,
    /// True where both the numerator and denominator of the phase vanish.
    pub node_mask: Vec<bool>,
}

/// Joint amplitude and action of `a ψ₁₊(x₁)ψ₂₋(x₂) + b ψ₁₋(x₁)ψ₂₊(x₂)`.
pub fn entangled_polar(
    a: f64,
    b: f64,
    sys1: QubitBranches<'_>,
    sys2: QubitBranches<'_>,
    hbar: f64,
    cross: CrossPhase,
) -> Result<EntangledPolar> {
    let total = a * a + b * b;
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::NotNormalized(total));
    }
    let n1 = sys1.r_plus.len();
    let n2 = sys2.r_plus.len();
    for (len, want) in [
        (sys1.r_minus.len(), n1),
        (sys1.s_plus.len(), n1),
        (sys1.s_minus.len(), n1),
        (sys2.r_minus.len(), n2),
        (sys2.s_plus.len(), n2),
        (sys2.s_minus.len(), n2),
    ] {
        if len != want {
            return Err(Error::ShapeMismatch { expected: want, got: len });
        }
    }
    let mut r_sq = Vec::with_capacity(n1 * n2);
    let mut s = Vec::with_capacity(n1 * n2);
    let mut mask = Vec::with_capacity(n1 * n2);
    for i in 0..n1 {
        let (r1p, r1m, s1p, s1m) = (sys1.r_plus[i], sys1.r_minus[i], sys1.s_plus[i], sys1.s_minus[i]);
        let delta1 = (s1p - s1m) / hbar;
        for j in 0..n2 {
            let (r2p, r2m, s2p, s2m) = (sys2.r_plus[j], sys2.r_minus[j], sys2.s_plus[j], sys2.s_minus[j]);
            let delta2 = (s2p - s2m) / hbar;
            let cross_phase = match cross {
                CrossPhase::Consistent => delta1 - delta2,
                CrossPhase::SumOfDifferences => delta1 + delta2,
            };
            r_sq.push(
                a * a * r1p * r1p * r2m * r2m
                    + b * b * r1m * r1m * r2p * r2p
                    + 2.0 * a * b * r1p * r1m * r2p * r2m * cross_phase.cos(),
            );
            let phase_a = (s1p + s2m) / hbar;
            let phase_b = (s1m + s2p) / hbar;
            let num = a * r1p * r2m * phase_a.sin() + b * r1m * r2p * phase_b.sin();
            let den = a * r1p * r2m * phase_a.cos() + b * r1m * r2p * phase_b.cos();
            let node = num == 0.0 && den == 0.0;
            mask.push(node);
            s.push(if node { f64::NAN } else { hbar * num.atan2(den) });
        }
    }
    Ok(EntangledPolar {
        shape: (n1, n2),
        r_sq,
        s,
        node_mask: mask,
    })
}

/// Two-component (spin up/down) field on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorField {
    pub up: ComplexField,
    pub down: ComplexField,
}

impl SpinorField {
    pub fn new(up: ComplexField, down: ComplexField) -> Result<Self> {
        if up.grid != down.grid || up.dofs != down.dofs || up.hbar != down.hbar {
            return Err(Error::GridMismatch);
        }
        Ok(Self { up, down })
    }

    /// `(c₊|u₊⟩ + c₋|u₋⟩) f(x)`.
    pub fn from_spatial(c_plus: Complex64, c_minus: Complex64, spatial: &ComplexField) -> Result<Self> {
        let up = spatial.with_values(spatial.values().iter().map(|v| c_plus * v).collect())?;
        let down = spatial.with_values(spatial.values().iter().map(|v| c_minus * v).collect())?;
        Self::new(up, down)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.up.norm_sqr() + self.down.norm_sqr()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm_sqr();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::NullField);
        }
        let s = n.sqrt().recip();
        self.up.values_mut().iter_mut().for_each(|v| *v *= s);
        self.down.values_mut().iter_mut().for_each(|v| *v *= s);
        Ok(())
    }

    /// `|ψ₊|² + |ψ₋|²`.
    pub fn density(&self) -> Vec<f64> {
        self.up
            .values()
            .iter()
            .zip(self.down.values())
            .map(|(u, d)| u.norm_sqr() + d.norm_sqr())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid() -> Grid1D {
        Grid1D::new(-10.0, 10.0, 256).unwrap()
    }

    fn gaussian(x: f64, x0: f64, sigma: f64) -> f64 {
        (-(x - x0).powi(2) / (4.0 * sigma * sigma)).exp()
    }

    #[test]
    fn plane_wave_polar() {
        let f = ComplexField::from_fn_1d(grid(), Dof::default(), 1.0, |x| Complex64::from_polar(1.0, x)).unwrap();
        let p = to_polar(&f).unwrap();
        assert!(p.r.iter().all(|r| (r - 1.0).abs() < 1e-14));
        let g = grid();
        let offset = p.s[0] - g.x(0);
        for (i, s) in p.s.iter().enumerate() {
            assert!((s - g.x(i) - offset).abs() < 1e-10);
        }
        assert_eq!(p.node_count(), 0);
    }

    #[test]
    fn real_positive_field_has_constant_phase() {
        let f = ComplexField::from_fn_1d(grid(), Dof::default(), 1.0, |x| gaussian(x, 0.0, 1.0).into()).unwrap();
        let p = to_polar(&f).unwrap();
        assert!(p.s.iter().all(|&s| s == 0.0));
        for (r, v) in p.r.iter().zip(f.values()) {
            assert_eq!(*r, v.re);
        }
    }

    #[test]
    fn cosine_nodes_are_masked() {
        // sample exactly at x = π/2 + nπ
        let g = Grid1D::new(-PI / 2.0, 5.0 * PI / 2.0, 301).unwrap();
        let f = ComplexField::from_fn_1d(g, Dof::default(), 1.0, |x| {
            (Complex64::from_polar(1.0, x) + Complex64::from_polar(1.0, -x)) / 2f64.sqrt()
        })
        .unwrap();
        let p = to_polar(&f).unwrap();
        for i in 0..g.len() {
            let expected = 2f64.sqrt() * g.x(i).cos().abs();
            assert!((p.r[i] - expected).abs() < 1e-12);
        }
        for i in [0, 100, 200, 300] {
            assert!(p.node_mask[i], "node at sample {i}");
        }
        assert!(!p.node_mask[50]);
    }

    #[test]
    fn null_field_rejected() {
        let f = ComplexField::natural_1d(grid(), vec![Complex64::default(); 256]).unwrap();
        assert!(matches!(to_polar(&f), Err(Error::NullField)));
    }

    #[test]
    fn recompose_examples() {
        let g = grid();
        let polar = PolarField {
            grid: g.into(),
            r: vec![1.0; g.len()],
            s: g.points(),
            node_mask: vec![false; g.len()],
            dofs: vec![Dof::default()],
        };
        let f = recompose(&polar, 1.0).unwrap();
        for (i, v) in f.values().iter().enumerate() {
            assert!((v - Complex64::from_polar(1.0, g.x(i))).norm() < 1e-15);
        }
        let polar = PolarField {
            r: g.points().iter().map(|&x| gaussian(x, 0.0, 1.0)).collect(),
            s: vec![0.0; g.len()],
            ..polar
        };
        let f = recompose(&polar, 1.0).unwrap();
        assert!(f.values().iter().all(|v| v.im == 0.0 && v.re >= 0.0));
    }

    #[test]
    fn superpose_cases() {
        let g = grid();
        let psi1 = ComplexField::from_fn_1d(g, Dof::default(), 1.0, |x| gaussian(x, -3.0, 0.7).into())
            .unwrap()
            .normalized()
            .unwrap();
        let id = superpose(1.0.into(), &psi1, 0.0.into(), &psi1, false).unwrap();
        assert_eq!(id.values(), psi1.values());

        let minus = psi1.with_values(psi1.values().iter().map(|v| -v).collect()).unwrap();
        let s = 0.5f64.sqrt();
        let zero = superpose(s.into(), &psi1, s.into(), &minus, false).unwrap();
        assert!(zero.is_null());
        assert!(matches!(superpose(s.into(), &psi1, s.into(), &minus, true), Err(Error::NullField)));

        // odd partner is orthogonal to the even one
        let psi2 = ComplexField::from_fn_1d(g, Dof::default(), 1.0, |x| (x * gaussian(x, 0.0, 1.0)).into())
            .unwrap()
            .normalized()
            .unwrap();
        let psi1 = ComplexField::from_fn_1d(g, Dof::default(), 1.0, |x| gaussian(x, 0.0, 1.0).into())
            .unwrap()
            .normalized()
            .unwrap();
        assert!(psi1.inner(&psi2).unwrap().norm() < 1e-14);
        let mix = superpose(0.6.into(), &psi1, 0.8.into(), &psi2, false).unwrap();
        assert!((mix.norm_sqr() - 1.0).abs() < 1e-10);

        assert!(matches!(
            superpose(0.6.into(), &psi1, 0.6.into(), &psi2, false),
            Err(Error::NotNormalized(_))
        ));
        let other = ComplexField::from_fn_1d(Grid1D::new(-5.0, 5.0, 256).unwrap(), Dof::default(), 1.0, |_| 1.0.into()).unwrap();
        assert!(matches!(
            superpose(0.6.into(), &psi1, 0.8.into(), &other, false),
            Err(Error::GridMismatch)
        ));
    }

    #[test]
    fn spinor_normalization() {
        let f = ComplexField::from_fn_1d(grid(), Dof::default(), 1.0, |x| gaussian(x, 0.0, 1.0).into()).unwrap();
        let mut sp = SpinorField::from_spatial(0.6.into(), 0.8.into(), &f).unwrap();
        sp.normalize().unwrap();
        assert!((sp.norm_sqr() - 1.0).abs() < 1e-12);
        assert!((sp.up.norm_sqr() - 0.36).abs() < 1e-12);
    }

    fn entangled_inputs(n: usize, seed: u64) -> [Vec<f64>; 8] {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut smooth = |amp: bool| -> Vec<f64> {
            let c: Vec<(f64, f64)> = (0..4).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(0.0..PI))).collect();
            (0..n)
                .map(|i| {
                    let x = i as f64 / n as f64 * 2.0 * PI;
                    let v: f64 = c.iter().enumerate().map(|(k, (a, p))| a * ((k + 1) as f64 * x + p).sin()).sum();
                    if amp { 1.0 + 0.2 * v } else { 3.0 * v }
                })
                .collect()
        };
        [
            smooth(true),
            smooth(true),
            smooth(true),
            smooth(true),
            smooth(false),
            smooth(false),
            smooth(false),
            smooth(false),
        ]
    }

    #[test]
    fn entangled_product_state() {
        let [r1p, r1m, r2p, r2m, s1p, s1m, s2p, s2m] = entangled_inputs(16, 3);
        let sys1 = QubitBranches { r_plus: &r1p, r_minus: &r1m, s_plus: &s1p, s_minus: &s1m };
        let sys2 = QubitBranches { r_plus: &r2p, r_minus: &r2m, s_plus: &s2p, s_minus: &s2m };
        let out = entangled_polar(1.0, 0.0, sys1, sys2, 1.0, CrossPhase::Consistent).unwrap();
        for i in 0..16 {
            for j in 0..16 {
                let k = i * 16 + j;
                assert!((out.r_sq[k] - (r1p[i] * r2m[j]).powi(2)).abs() < 1e-12);
                let d = out.s[k] - (s1p[i] + s2m[j]);
                let wrapped = d - 2.0 * PI * (d / (2.0 * PI)).round();
                assert!(wrapped.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn entangled_zero_phase() {
        let [r1p, r1m, r2p, r2m, ..] = entangled_inputs(8, 5);
        let zeros = vec![0.0; 8];
        let sys1 = QubitBranches { r_plus: &r1p, r_minus: &r1m, s_plus: &zeros, s_minus: &zeros };
        let sys2 = QubitBranches { r_plus: &r2p, r_minus: &r2m, s_plus: &zeros, s_minus: &zeros };
        let s = 0.5f64.sqrt();
        for cross in [CrossPhase::Consistent, CrossPhase::SumOfDifferences] {
            let out = entangled_polar(s, s, sys1, sys2, 1.0, cross).unwrap();
            for i in 0..8 {
                for j in 0..8 {
                    let k = i * 8 + j;
                    let want = 0.5 * ((r1p[i] * r2m[j]).powi(2) + (r1m[i] * r2p[j]).powi(2))
                        + r1p[i] * r1m[i] * r2p[j] * r2m[j];
                    assert!((out.r_sq[k] - want).abs() < 1e-12);
                    assert!(out.s[k].abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn entangled_node_is_masked() {
        let one = [1.0; 8];
        let mut r1 = [1.0; 8];
        r1[3] = 0.0;
        let zero = [0.0; 8];
        let s = 0.5f64.sqrt();
        let sys1 = QubitBranches { r_plus: &r1, r_minus: &r1, s_plus: &zero, s_minus: &zero };
        let sys2 = QubitBranches { r_plus: &one, r_minus: &one, s_plus: &zero, s_minus: &zero };
        let out = entangled_polar(s, s, sys1, sys2, 1.0, CrossPhase::Consistent).unwrap();
        for j in 0..8 {
            assert!(out.node_mask[3 * 8 + j]);
            assert!(out.s[3 * 8 + j].is_nan());
            assert!(!out.node_mask[2 * 8 + j]);
        }
    }

    /// Brute-force `|a ψ₁₊ψ₂₋ + b ψ₁₋ψ₂₊|²` and its phase.
    fn direct(a: f64, b: f64, v: &[f64; 8], hbar: f64) -> (f64, Complex64) {
        let [r1p, r1m, r2p, r2m, s1p, s1m, s2p, s2m] = *v;
        let psi = |r: f64, s: f64| Complex64::from_polar(r, s / hbar);
        let total = a * psi(r1p, s1p) * psi(r2m, s2m) + b * psi(r1m, s1m) * psi(r2p, s2p);
        (total.norm_sqr(), total)
    }

    proptest! {
        #[test]
        fn entangled_matches_direct_sum(seed in 0u64..100, theta in 0.0f64..(PI / 2.0), hbar in 0.5f64..2.0) {
            let n = 12;
            let [r1p, r1m, r2p, r2m, s1p, s1m, s2p, s2m] = entangled_inputs(n, seed);
            let (a, b) = (theta.cos(), theta.sin());
            let sys1 = QubitBranches { r_plus: &r1p, r_minus: &r1m, s_plus: &s1p, s_minus: &s1m };
            let sys2 = QubitBranches { r_plus: &r2p, r_minus: &r2m, s_plus: &s2p, s_minus: &s2m };
            let out = entangled_polar(a, b, sys1, sys2, hbar, CrossPhase::Consistent).unwrap();
            for i in 0..n {
                for j in 0..n {
                    let k = i * n + j;
                    let (want, psi) = direct(a, b, &[r1p[i], r1m[i], r2p[j], r2m[j], s1p[i], s1m[i], s2p[j], s2m[j]], hbar);
                    prop_assert!((out.r_sq[k] - want).abs() < 1e-10);
                    if psi.norm() > 1e-6 {
                        let rebuilt = Complex64::from_polar(out.r_sq[k].max(0.0).sqrt(), out.s[k] / hbar);
                        prop_assert!((rebuilt - psi).norm() < 1e-8);
                    }
                }
            }
        }

        #[test]
        fn polar_round_trip(seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let g = Grid1D::new(0.0, 2.0 * PI, 128).unwrap();
            let modes: Vec<(f64, f64, f64)> = (0..5)
                .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0 * PI)))
                .collect();
            let f = ComplexField::from_fn_1d(g, Dof::default(), 1.0, |x| {
                let amp = 2.0 + modes.iter().enumerate().map(|(k, m)| 0.3 * m.0 * ((k + 1) as f64 * x).cos()).sum::<f64>();
                let ph: f64 = modes.iter().enumerate().map(|(k, m)| 4.0 * m.1 * ((k + 1) as f64 * x + m.2).sin()).sum();
                Complex64::from_polar(amp, ph)
            }).unwrap();
            let p = to_polar(&f).unwrap();
            prop_assert_eq!(p.node_count(), 0);
            let back = recompose(&p, 1.0).unwrap();
            let err = f.values().iter().zip(back.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            prop_assert!(err < 1e-10);
            let n_polar: f64 = p.r.iter().map(|r| r * r).sum::<f64>() * g.dx();
            prop_assert!((n_polar - f.norm_sqr()).abs() <= 1e-12 * f.norm_sqr());
            for w in p.s.windows(2) {
                prop_assert!((w[1] - w[0]).abs() < PI);
            }
        }
    }
}
