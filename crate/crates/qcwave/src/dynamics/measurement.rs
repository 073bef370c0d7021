//! Impulsive measurement interactions: a von Neumann pointer and a
//! Stern-Gerlach spin splitter.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::evolve::{evolve, EvolutionConfig, EvolutionTrace};
use crate::density::{measurement_rho, JointDensityMatrix};
use crate::error::{check_lambda, Error, Result};
use crate::field::{ComplexField, Dof, SpinorField};
use crate::grid::Grid1D;

const COEFF_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointerCoupling {
    pub g: f64,
    pub eigenvalues: Vec<f64>,
    pub duration: f64,
}

/// Gaussian pointer `ψ₂₀(y) ∝ exp(−(y − center)² / 2σ²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointerPacket {
    pub center: f64,
    pub sigma: f64,
}

impl PointerPacket {
    pub fn amplitude(&self, y: f64, shift: f64) -> f64 {
        let s2 = self.sigma * self.sigma;
        (std::f64::consts::PI * s2).powf(-0.25) * (-(y - self.center - shift).powi(2) / (2.0 * s2)).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointerBranch {
    pub q: f64,
    pub coefficient: Complex64,
    /// Pointer center after the interaction.
    pub center: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointerOutcome {
    pub branches: Vec<PointerBranch>,
    /// `∫ψ₂₀(y − y_q) ψ₂₀(y − y_q′) dy` for every pair of branches.
    pub overlaps: Vec<Vec<f64>>,
}

/// Branch `q` carries the pointer shifted by `g q t / ħ²`.
pub fn pointer_final_state(
    coefficients: &[Complex64],
    pointer: &PointerPacket,
    coupling: &PointerCoupling,
    hbar: f64,
) -> Result<PointerOutcome> {
    if coefficients.len() != coupling.eigenvalues.len() {
        return Err(Error::ShapeMismatch {
            expected: coupling.eigenvalues.len(),
            got: coefficients.len(),
        });
    }
    if !(coupling.duration > 0.0) {
        return Err(Error::InvalidParameter("interaction duration must be > 0".into()));
    }
    if !(pointer.sigma > 0.0) || !(hbar > 0.0) {
        return Err(Error::InvalidParameter("pointer sigma and hbar must be > 0".into()));
    }
    let total: f64 = coefficients.iter().map(|c| c.norm_sqr()).sum();
    if (total - 1.0).abs() > COEFF_TOL {
        return Err(Error::NotNormalized(total));
    }
    let branches: Vec<PointerBranch> = coupling
        .eigenvalues
        .iter()
        .zip(coefficients)
        .map(|(&q, &c)| PointerBranch {
            q,
            coefficient: c,
            center: pointer.center + coupling.g * q * coupling.duration / (hbar * hbar),
        })
        .collect();
    let overlaps = branches
        .iter()
        .map(|a| {
            branches
                .iter()
                .map(|b| (-(a.center - b.center).powi(2) / (4.0 * pointer.sigma * pointer.sigma)).exp())
                .collect()
        })
        .collect();
    Ok(PointerOutcome { branches, overlaps })
}

/// Pointer density `Σ|c_q|² ψ₂₀(y − y_q)²` (system states orthonormal).
pub fn pointer_density(outcome: &PointerOutcome, pointer: &PointerPacket, grid: &Grid1D) -> Vec<f64> {
    grid.points()
        .iter()
        .map(|&y| {
            outcome
                .branches
                .iter()
                .map(|b| b.coefficient.norm_sqr() * pointer.amplitude(y, b.center - pointer.center).powi(2))
                .sum()
        })
        .collect()
}

/// Spin-½ particle crossing an inhomogeneous field along `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SternGerlachConfig {
    pub mu_b: f64,
    pub db_dz: f64,
    /// Duration of the impulsive interaction.
    pub tau: f64,
    pub z0: f64,
    /// Position spread of the initial packet.
    pub sigma: f64,
    /// Wavenumber along the beam axis (the packet's `x` motion is uncoupled).
    #[serde(default)]
    pub k: f64,
    pub c_plus: f64,
    pub c_minus: f64,
    #[serde(default = "one")]
    pub mass: f64,
    #[serde(default = "one")]
    pub hbar: f64,
    /// λ of the particle's own degree of freedom.
    #[serde(default)]
    pub lambda: f64,
    pub grid: Grid1D,
}

fn one() -> f64 {
    1.0
}

impl SternGerlachConfig {
    pub fn validate(&self) -> Result<()> {
        let total = self.c_plus * self.c_plus + self.c_minus * self.c_minus;
        if (total - 1.0).abs() > COEFF_TOL {
            return Err(Error::NotNormalized(total));
        }
        if !(self.sigma > 0.0 && self.tau > 0.0 && self.mass > 0.0 && self.hbar > 0.0) {
            return Err(Error::InvalidParameter("sigma, tau, mass and hbar must be > 0".into()));
        }
        check_lambda(self.lambda)
    }

    /// Momentum transferred to each spin component, `μ_B (∂B/∂z) τ`.
    pub fn kick(&self) -> f64 {
        self.mu_b * self.db_dz * self.tau
    }

    fn branch_packet(&self, sign: f64) -> Result<ComplexField> {
        let dp = sign * self.kick();
        let s = self.sigma;
        let hbar = self.hbar;
        let z0 = self.z0;
        ComplexField::from_fn_1d(self.grid, Dof::new(self.mass, self.lambda)?, hbar, move |z| {
            Complex64::from_polar((-(z - z0).powi(2) / (4.0 * s * s)).exp(), dp * z / hbar)
        })?
        .normalized()
    }
}

#[derive(Debug, Clone)]
pub struct SternGerlachOutcome {
    pub spinor: SpinorField,
    /// Snapshots of the spinor if the evolution config asked for them.
    pub snapshots: Vec<(f64, SpinorField)>,
    /// `[+, −]` branch centers, spreads and Born weights.
    pub centers: [f64; 2],
    pub widths: [f64; 2],
    pub weights: [f64; 2],
    pub separation: f64,
    /// Expected separation `2Δp t / m` of the two centers.
    pub predicted_separation: f64,
    /// Centers farther apart than three branch widths.
    pub separated: bool,
    pub rho: JointDensityMatrix,
    pub traces: [Option<EvolutionTrace>; 2],
}

/// Kick the two spin components by `±Δp`, then evolve each branch freely.
pub fn stern_gerlach_evolve(cfg: &SternGerlachConfig, lambda2: f64, evo: &EvolutionConfig) -> Result<SternGerlachOutcome> {
    cfg.validate()?;
    check_lambda(lambda2)?;
    let weights = [cfg.c_plus * cfg.c_plus, cfg.c_minus * cfg.c_minus];
    let run = |sign: f64, weight: f64| -> Result<Option<(ComplexField, EvolutionTrace)>> {
        if weight == 0.0 {
            return Ok(None);
        }
        evolve(&cfg.branch_packet(sign)?, &vec![0.0; cfg.grid.len()], evo).map(Some)
    };
    let (up, down) = rayon::join(|| run(1.0, weights[0]), || run(-1.0, weights[1]));
    let (up, down) = (up?, down?);

    let template = cfg.branch_packet(1.0)?;
    let scaled = |branch: &Option<(ComplexField, EvolutionTrace)>, c: f64, k: Option<usize>| -> Result<ComplexField> {
        match (branch, k) {
            (Some((psi, _)), None) => psi.with_values(psi.values().iter().map(|v| v * c).collect()),
            (Some((_, trace)), Some(k)) => {
                let psi = &trace.snapshots[k].1;
                psi.with_values(psi.values().iter().map(|v| v * c).collect())
            }
            (None, _) => template.with_values(vec![Complex64::default(); cfg.grid.len()]),
        }
    };
    let spinor = SpinorField::new(scaled(&up, cfg.c_plus, None)?, scaled(&down, cfg.c_minus, None)?)?;
    let n_snap = up.as_ref().or(down.as_ref()).map_or(0, |(_, t)| t.snapshots.len());
    let snapshot_times: Vec<f64> = up
        .as_ref()
        .or(down.as_ref())
        .map(|(_, t)| t.snapshots.iter().map(|s| s.0).collect())
        .unwrap_or_default();
    let snapshots = (0..n_snap)
        .map(|k| {
            Ok((
                snapshot_times[k],
                SpinorField::new(scaled(&up, cfg.c_plus, Some(k))?, scaled(&down, cfg.c_minus, Some(k))?)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let moments = |branch: &Option<(ComplexField, EvolutionTrace)>| {
        branch.as_ref().map_or((f64::NAN, f64::NAN), |(psi, _)| (psi.mean_position(0), psi.position_spread(0)))
    };
    let (cp, wp) = moments(&up);
    let (cm, wm) = moments(&down);
    let elapsed = evo.dt * evo.n_steps as f64;
    let both = weights[0] > 0.0 && weights[1] > 0.0;
    let separation = if both { (cp - cm).abs() } else { 0.0 };
    let separated = both && separation > 3.0 * wp.max(wm);
    let rho = measurement_rho(cfg.c_plus, cfg.c_minus, 0.0, lambda2 == 1.0)?;
    Ok(SternGerlachOutcome {
        spinor,
        snapshots,
        centers: [cp, cm],
        widths: [wp, wm],
        weights,
        separation,
        predicted_separation: 2.0 * cfg.kick() * elapsed / cfg.mass,
        separated,
        rho,
        traces: [up.map(|b| b.1), down.map(|b| b.1)],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::DensityMatrix;

    fn coupling(g: f64) -> PointerCoupling {
        PointerCoupling {
            g,
            eigenvalues: vec![1.0, -1.0],
            duration: 1.0,
        }
    }

    #[test]
    fn pointer_examples() {
        let s = 0.5f64.sqrt();
        let c = [Complex64::new(s, 0.0), Complex64::new(s, 0.0)];
        let p = PointerPacket { center: 0.0, sigma: 1.0 };
        let out = pointer_final_state(&c, &p, &coupling(0.0), 1.0).unwrap();
        assert!(out.branches.iter().all(|b| b.center == 0.0));
        assert!(out.overlaps.iter().flatten().all(|&o| o == 1.0));

        let out = pointer_final_state(&c, &p, &coupling(1.0), 1.0).unwrap();
        assert_eq!(out.branches[0].center, 1.0);
        assert_eq!(out.branches[1].center, -1.0);

        let narrow = PointerPacket { center: 0.0, sigma: 0.1 };
        let out = pointer_final_state(&c, &narrow, &coupling(1.0), 1.0).unwrap();
        assert!(out.overlaps[0][1] < 1e-40);
        assert!((out.overlaps[0][1].ln() + 100.0).abs() < 1e-9);

        assert!(pointer_final_state(&[Complex64::new(1.0, 0.0); 2], &p, &coupling(1.0), 1.0).is_err());
    }

    #[test]
    fn overlap_matches_quadrature_and_decreases() {
        let p = PointerPacket { center: 0.3, sigma: 0.7 };
        let c = [Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)];
        let g = Grid1D::new(-15.0, 15.0, 6001).unwrap();
        let mut last = 1.0 + 1e-12;
        for gt in [0.0, 0.2, 0.5, 1.0, 2.0] {
            let out = pointer_final_state(&c, &p, &coupling(gt), 1.0).unwrap();
            let (a, b) = (out.branches[0].center - p.center, out.branches[1].center - p.center);
            let numeric = g.integrate(g.points().iter().map(|&y| p.amplitude(y, a) * p.amplitude(y, b)));
            assert!((numeric - out.overlaps[0][1]).abs() < 1e-10);
            assert!(out.overlaps[0][1] < last);
            last = out.overlaps[0][1];
        }
        let out = pointer_final_state(&c, &p, &coupling(1.0), 1.0).unwrap();
        let total = g.integrate(pointer_density(&out, &p, &g));
        assert!((total - 1.0).abs() < 1e-10);
    }

    fn sg(c_plus: f64, c_minus: f64) -> SternGerlachConfig {
        SternGerlachConfig {
            mu_b: 1.0,
            db_dz: 5.0,
            tau: 1.0,
            z0: 0.0,
            sigma: 1.0,
            k: 0.0,
            c_plus,
            c_minus,
            mass: 1.0,
            hbar: 1.0,
            lambda: 0.0,
            grid: Grid1D::centered(1024, 50.0 / 1023.0).unwrap(),
        }
    }

    #[test]
    fn stern_gerlach_examples() {
        let evo = EvolutionConfig::new(0.01, 200);
        let out = stern_gerlach_evolve(&sg(1.0, 0.0), 0.0, &evo).unwrap();
        assert_eq!(out.weights, [1.0, 0.0]);
        assert!((out.spinor.norm_sqr() - 1.0).abs() < 1e-10);
        assert!((out.centers[0] - 10.0).abs() < 1e-3);
        assert!(!out.separated);

        let s = 0.5f64.sqrt();
        let out = stern_gerlach_evolve(&sg(s, s), 1.0, &evo).unwrap();
        assert!((out.weights[0] - 0.5).abs() < 1e-10 && (out.weights[1] - 0.5).abs() < 1e-10);
        assert!((out.up_weight() - 0.5).abs() < 1e-10);
        assert!((out.separation - out.predicted_separation).abs() < 1e-3);
        assert!(out.separated);
        assert!(out.rho.is_diagonal());

        assert!(stern_gerlach_evolve(&sg(0.6, 0.6), 0.0, &evo).is_err());
    }

    impl SternGerlachOutcome {
        fn up_weight(&self) -> f64 {
            self.spinor.up.norm_sqr()
        }
    }
}
