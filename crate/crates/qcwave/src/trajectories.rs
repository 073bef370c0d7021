//! Particle ensembles guided by `v = (ħ/m) Im(ψ*∇ψ) / |ψ|²`.
//!
//! Initial positions are drawn from `|ψ|²` by inverse-CDF sampling with one
//! ChaCha8 stream per particle, so results do not depend on thread
//! scheduling. Paths are integrated with RK4 through velocity fields
//! interpolated linearly in time between snapshots and (bi)linearly in space.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::dynamics::RESIDUAL_MASK;
use crate::error::{Error, Result};
use crate::field::{ComplexField, SpinorField, NODE_EPS};
use crate::grid::{Boundary, Grid, Grid1D};
use crate::potential::{extend_over_mask, extend_over_mask_2d, quantum_potentials};
use crate::stencil::{along_axis, first_derivative};

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryEnsemble {
    pub seed: u64,
    pub n_dof: usize,
    pub times: Vec<f64>,
    /// `positions[p][k * n_dof + d]`: particle `p`, recorded time `k`, axis `d`.
    pub positions: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
    /// Branch label per particle; `-1` when unassigned.
    pub branch_id: Vec<i64>,
    /// Particles that left the grid and were frozen at its edge.
    pub exited: Vec<bool>,
}

impl TrajectoryEnsemble {
    pub fn n_particles(&self) -> usize {
        self.positions.len()
    }

    pub fn position(&self, particle: usize, k: usize) -> &[f64] {
        &self.positions[particle][k * self.n_dof..(k + 1) * self.n_dof]
    }

    pub fn velocity(&self, particle: usize, k: usize) -> &[f64] {
        &self.velocities[particle][k * self.n_dof..(k + 1) * self.n_dof]
    }

    /// Coordinate `axis` of every particle at recorded time `k`.
    pub fn coordinates_at(&self, k: usize, axis: usize) -> Vec<f64> {
        (0..self.n_particles()).map(|p| self.position(p, k)[axis]).collect()
    }

    pub fn final_coordinates(&self, axis: usize) -> Vec<f64> {
        self.coordinates_at(self.times.len() - 1, axis)
    }

    /// 1D flows cannot cross: true if the initial ordering of the retained
    /// particles holds at every recorded time.
    pub fn ordering_preserved(&self) -> bool {
        if self.n_dof != 1 {
            return true;
        }
        let mut order: Vec<usize> = (0..self.n_particles()).filter(|&p| !self.exited[p]).collect();
        order.sort_by(|&a, &b| self.position(a, 0)[0].total_cmp(&self.position(b, 0)[0]));
        (0..self.times.len()).all(|k| order.windows(2).all(|w| self.position(w[0], k)[0] <= self.position(w[1], k)[0]))
    }
}

fn particle_rng(seed: u64, particle: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(particle as u64);
    rng
}

/// Cell `i` spans `[xᵢ − dx/2, xᵢ + dx/2]` clipped to the grid.
fn cell(axis: &Grid1D, i: usize) -> (f64, f64) {
    let half = 0.5 * axis.dx();
    let x = axis.x(i);
    ((x - half).max(axis.x_min()), (x + half).min(axis.x_max()))
}

fn cumulative(weights: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    weights
        .map(|w| {
            acc += w;
            acc
        })
        .collect()
}

fn pick(cdf: &[f64], u: f64) -> usize {
    let target = u * cdf[cdf.len() - 1];
    // first cell whose cumulative weight exceeds the target; empty cells are
    // never chosen because their cumulative value equals their predecessor's
    cdf.partition_point(|&c| c <= target).min(cdf.len() - 1)
}

/// Born-rule initial positions: inverse-CDF sampling of the piecewise-constant
/// density, uniform within the chosen cell. 2D grids sample the axis-1
/// marginal, then the conditional along axis 2.
pub fn sample_initial(density: &[f64], grid: &Grid, n_particles: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if density.len() != grid.len() {
        return Err(Error::ShapeMismatch {
            expected: grid.len(),
            got: density.len(),
        });
    }
    if density.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
        return Err(Error::InvalidParameter("density must be finite and non-negative".into()));
    }
    match grid {
        Grid::One(g) => {
            let cdf = cumulative((0..g.len()).map(|i| {
                let (a, b) = cell(g, i);
                density[i] * (b - a)
            }));
            if !(cdf[cdf.len() - 1] > 0.0) {
                return Err(Error::ZeroMass);
            }
            Ok((0..n_particles)
                .into_par_iter()
                .map(|p| {
                    let mut rng = particle_rng(seed, p);
                    let i = pick(&cdf, rng.gen::<f64>());
                    let (a, b) = cell(g, i);
                    vec![a + (b - a) * rng.gen::<f64>()]
                })
                .collect())
        }
        Grid::Two(g) => {
            let (n1, n2) = g.shape();
            let rows: Vec<Vec<f64>> = (0..n1)
                .map(|i| {
                    cumulative((0..n2).map(|j| {
                        let (a, b) = cell(&g.axis2, j);
                        density[g.index(i, j)] * (b - a)
                    }))
                })
                .collect();
            let marginal = cumulative((0..n1).map(|i| {
                let (a, b) = cell(&g.axis1, i);
                rows[i][n2 - 1] * (b - a)
            }));
            if !(marginal[n1 - 1] > 0.0) {
                return Err(Error::ZeroMass);
            }
            Ok((0..n_particles)
                .into_par_iter()
                .map(|p| {
                    let mut rng = particle_rng(seed, p);
                    let i = pick(&marginal, rng.gen::<f64>());
                    let j = pick(&rows[i], rng.gen::<f64>());
                    let (a1, b1) = cell(&g.axis1, i);
                    let (a2, b2) = cell(&g.axis2, j);
                    vec![a1 + (b1 - a1) * rng.gen::<f64>(), a2 + (b2 - a2) * rng.gen::<f64>()]
                })
                .collect())
        }
    }
}

/// A time-dependent velocity field.
pub trait GuidanceField: Sync {
    fn n_dof(&self) -> usize;

    /// Velocity at `(t, x)` written to `out`; false if `x` is off the domain.
    fn velocity(&self, t: f64, x: &[f64], out: &mut [f64]) -> bool;

    /// Nearest point of the domain.
    fn clamp(&self, x: &mut [f64]);
}

/// Values of `f` sampled on a grid, interpolated (bi)linearly.
fn interpolate(grid: &Grid, f: &[f64], x: &[f64]) -> Option<f64> {
    fn bracket(axis: &Grid1D, x: f64) -> Option<(usize, f64)> {
        if !axis.contains(x) {
            return None;
        }
        let s = axis.locate(x);
        let i = (s.floor() as usize).min(axis.len() - 2);
        Some((i, s - i as f64))
    }
    match grid {
        Grid::One(g) => {
            let (i, w) = bracket(g, x[0])?;
            Some((1.0 - w) * f[i] + w * f[i + 1])
        }
        Grid::Two(g) => {
            let (i, u) = bracket(&g.axis1, x[0])?;
            let (j, w) = bracket(&g.axis2, x[1])?;
            let at = |a, b| f[g.index(a, b)];
            Some(
                (1.0 - u) * ((1.0 - w) * at(i, j) + w * at(i, j + 1))
                    + u * ((1.0 - w) * at(i + 1, j) + w * at(i + 1, j + 1)),
            )
        }
    }
}

fn shape_of(grid: &Grid) -> (usize, usize) {
    match grid {
        Grid::One(g) => (1, g.len()),
        Grid::Two(g) => g.shape(),
    }
}

fn line_axis(grid: &Grid, k: usize) -> usize {
    match grid {
        Grid::One(_) => 1,
        Grid::Two(_) => k,
    }
}

/// Derivative along `axis`: spectral on periodic grids, fourth-order
/// stencils otherwise.
fn gradient(values: &[Complex64], grid: &Grid, k: usize, boundary: Boundary) -> Vec<Complex64> {
    let axis = *grid.axis(k);
    let shape = shape_of(grid);
    if boundary != Boundary::Periodic {
        return along_axis(values, shape, line_axis(grid, k), |l| first_derivative(l, axis.dx(), boundary));
    }
    let n = axis.len();
    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);
    let mut ks = axis.wavenumbers();
    if n % 2 == 0 {
        // the Nyquist mode has no well-defined derivative
        ks[n / 2] = 0.0;
    }
    along_axis(values, shape, line_axis(grid, k), |line| {
        let mut buf = line.to_vec();
        forward.process(&mut buf);
        for (b, &kk) in buf.iter_mut().zip(&ks) {
            *b *= Complex64::new(0.0, kk / n as f64);
        }
        inverse.process(&mut buf);
        buf
    })
}

/// Guidance velocities of one or more components sharing a grid
/// (`Σ Im(ψₛ*∇ψₛ) / Σ|ψₛ|²`). Near-empty samples take the nearest valid value.
pub fn guidance_velocity(components: &[&ComplexField], boundary: Boundary) -> Result<Vec<Vec<f64>>> {
    let first = components.first().ok_or_else(|| Error::InvalidParameter("no components".into()))?;
    let grid = *first.grid();
    if components.iter().any(|c| *c.grid() != grid) {
        return Err(Error::GridMismatch);
    }
    let hbar = first.hbar();
    let mut density = vec![0.0; grid.len()];
    for c in components {
        density.iter_mut().zip(c.values()).for_each(|(d, v)| *d += v.norm_sqr());
    }
    let max = density.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return Err(Error::NullField);
    }
    let mask: Vec<bool> = density.iter().map(|&d| d < NODE_EPS * NODE_EPS * max).collect();
    let mut out = Vec::with_capacity(first.dofs().len());
    for (k, dof) in first.dofs().iter().enumerate() {
        let mut flux = vec![0.0; grid.len()];
        for c in components {
            let grad = gradient(c.values(), &grid, k, boundary);
            flux.iter_mut().zip(c.values().iter().zip(&grad)).for_each(|(f, (p, d))| *f += (p.conj() * d).im);
        }
        let mut v: Vec<f64> = flux
            .iter()
            .zip(&density)
            .map(|(f, &d)| if d > 0.0 { hbar * f / (dof.mass * d) } else { 0.0 })
            .collect();
        match grid {
            Grid::One(_) => {
                extend_over_mask(&mut v, &mask);
            }
            Grid::Two(g) => extend_over_mask_2d(&mut v, &mask, g.shape()),
        }
        out.push(v);
    }
    Ok(out)
}

/// Velocity fields tabulated at snapshot times.
#[derive(Debug, Clone)]
pub struct SnapshotGuidance {
    grid: Grid,
    times: Vec<f64>,
    /// `fields[snapshot][dof][grid index]`
    fields: Vec<Vec<Vec<f64>>>,
}

impl SnapshotGuidance {
    pub fn from_fields(snapshots: &[(f64, ComplexField)], boundary: Boundary) -> Result<Self> {
        let parts: Vec<(f64, Vec<&ComplexField>)> = snapshots.iter().map(|(t, f)| (*t, vec![f])).collect();
        Self::from_components(&parts, boundary)
    }

    pub fn from_spinors(snapshots: &[(f64, SpinorField)], boundary: Boundary) -> Result<Self> {
        let parts: Vec<(f64, Vec<&ComplexField>)> =
            snapshots.iter().map(|(t, s)| (*t, vec![&s.up, &s.down])).collect();
        Self::from_components(&parts, boundary)
    }

    fn from_components(parts: &[(f64, Vec<&ComplexField>)], boundary: Boundary) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidParameter("no snapshots".into()));
        }
        if parts.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidParameter("snapshot times must increase".into()));
        }
        let grid = *parts[0].1[0].grid();
        let fields = parts
            .par_iter()
            .map(|(_, comps)| guidance_velocity(comps, boundary))
            .collect::<Result<Vec<_>>>()?;
        if parts.iter().any(|(_, c)| *c[0].grid() != grid) {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            grid,
            times: parts.iter().map(|p| p.0).collect(),
            fields,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }
}

/// Bracketing snapshot indices and the weight of the later one; times beyond
/// the table are clamped.
fn time_bracket(times: &[f64], t: f64) -> (usize, usize, f64) {
    let n = times.len();
    if n == 1 || t <= times[0] {
        return (0, 0, 0.0);
    }
    if t >= times[n - 1] {
        return (n - 1, n - 1, 0.0);
    }
    let j = times.partition_point(|&s| s <= t).min(n - 1);
    let i = j - 1;
    (i, j, (t - times[i]) / (times[j] - times[i]))
}

impl GuidanceField for SnapshotGuidance {
    fn n_dof(&self) -> usize {
        self.grid.dims()
    }

    fn velocity(&self, t: f64, x: &[f64], out: &mut [f64]) -> bool {
        let (i, j, w) = time_bracket(&self.times, t);
        for (d, o) in out.iter_mut().enumerate() {
            let (Some(a), Some(b)) = (interpolate(&self.grid, &self.fields[i][d], x), interpolate(&self.grid, &self.fields[j][d], x))
            else {
                return false;
            };
            *o = (1.0 - w) * a + w * b;
        }
        true
    }

    fn clamp(&self, x: &mut [f64]) {
        for (d, v) in x.iter_mut().enumerate() {
            let a = self.grid.axis(d);
            *v = v.clamp(a.x_min(), a.x_max());
        }
    }
}

/// RK4 integration of every particle from `t0` for `n_steps` steps of `dt`,
/// recording every `record_every` steps (and the start).
pub fn integrate_guidance(
    initial: &[Vec<f64>],
    field: &impl GuidanceField,
    t0: f64,
    dt: f64,
    n_steps: usize,
    record_every: usize,
    seed: u64,
) -> Result<TrajectoryEnsemble> {
    let n_dof = field.n_dof();
    if initial.iter().any(|p| p.len() != n_dof) {
        return Err(Error::InvalidParameter(format!("positions must have {n_dof} coordinates")));
    }
    if !(dt > 0.0) || record_every == 0 {
        return Err(Error::InvalidParameter("dt > 0 and record_every >= 1 required".into()));
    }
    let times: Vec<f64> = (0..=n_steps)
        .filter(|s| s % record_every == 0)
        .map(|s| t0 + s as f64 * dt)
        .collect();
    let results: Vec<(Vec<f64>, Vec<f64>, bool)> = initial
        .par_iter()
        .map(|start| {
            let mut x = start.clone();
            let mut exited = false;
            let mut v = vec![0.0; n_dof];
            let mut pos = Vec::with_capacity(times.len() * n_dof);
            let mut vel = Vec::with_capacity(times.len() * n_dof);
            if !field.velocity(t0, &x, &mut v) {
                exited = true;
                field.clamp(&mut x);
                v.iter_mut().for_each(|c| *c = 0.0);
            }
            pos.extend_from_slice(&x);
            vel.extend_from_slice(&v);
            for step in 1..=n_steps {
                if !exited {
                    let t = t0 + (step - 1) as f64 * dt;
                    match rk4_step(field, t, dt, &x) {
                        Some(next) => x = next,
                        None => {
                            // leave along the current velocity and stop at the edge
                            exited = true;
                            if field.velocity(t, &x, &mut v) {
                                x.iter_mut().zip(&v).for_each(|(xi, vi)| *xi += dt * vi);
                            }
                            field.clamp(&mut x);
                        }
                    }
                }
                if step % record_every == 0 {
                    if exited || !field.velocity(t0 + step as f64 * dt, &x, &mut v) {
                        if !exited {
                            exited = true;
                            field.clamp(&mut x);
                        }
                        v.iter_mut().for_each(|c| *c = 0.0);
                    }
                    pos.extend_from_slice(&x);
                    vel.extend_from_slice(&v);
                }
            }
            (pos, vel, exited)
        })
        .collect();
    let n = initial.len();
    let mut ensemble = TrajectoryEnsemble {
        seed,
        n_dof,
        times,
        positions: Vec::with_capacity(n),
        velocities: Vec::with_capacity(n),
        branch_id: vec![-1; n],
        exited: Vec::with_capacity(n),
    };
    for (p, v, e) in results {
        ensemble.positions.push(p);
        ensemble.velocities.push(v);
        ensemble.exited.push(e);
    }
    Ok(ensemble)
}

fn rk4_step(field: &impl GuidanceField, t: f64, dt: f64, x: &[f64]) -> Option<Vec<f64>> {
    let n = x.len();
    let advance = |k: &[f64], h: f64| -> Vec<f64> { x.iter().zip(k).map(|(xi, ki)| xi + h * ki).collect() };
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let ok = field.velocity(t, x, &mut k1)
        && field.velocity(t + 0.5 * dt, &advance(&k1, 0.5 * dt), &mut k2)
        && field.velocity(t + 0.5 * dt, &advance(&k2, 0.5 * dt), &mut k3)
        && field.velocity(t + dt, &advance(&k3, dt), &mut k4);
    ok.then(|| (0..n).map(|d| x[d] + dt / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d])).collect())
}

/// Forces `−∂ₖ(V + (1−λₖ)Qₖ)` tabulated at snapshot times.
#[derive(Debug, Clone)]
pub struct ForceSnapshots {
    grid: Grid,
    times: Vec<f64>,
    forces: Vec<Vec<Vec<f64>>>,
    /// Samples near nodes, where `Q` is unreliable.
    excluded: Vec<Vec<bool>>,
    masses: Vec<f64>,
}

impl ForceSnapshots {
    pub fn new(snapshots: &[(f64, ComplexField)], v: &[f64], boundary: Boundary) -> Result<Self> {
        let first = &snapshots.first().ok_or_else(|| Error::InvalidParameter("no snapshots".into()))?.1;
        let grid = *first.grid();
        if v.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                got: v.len(),
            });
        }
        let shape = shape_of(&grid);
        let per_snapshot = snapshots
            .par_iter()
            .map(|(_, psi)| -> Result<(Vec<Vec<f64>>, Vec<bool>)> {
                let q = quantum_potentials(psi, boundary)?;
                let forces = psi
                    .dofs()
                    .iter()
                    .enumerate()
                    .map(|(k, dof)| {
                        let total: Vec<f64> = v.iter().zip(&q[k]).map(|(vv, qq)| vv + (1.0 - dof.lambda) * qq).collect();
                        let axis = grid.axis(k);
                        along_axis(&total, shape, line_axis(&grid, k), |l| first_derivative(l, axis.dx(), boundary))
                            .into_iter()
                            .map(|g| -g)
                            .collect()
                    })
                    .collect();
                let r: Vec<f64> = psi.values().iter().map(|z| z.norm()).collect();
                let max = r.iter().cloned().fold(0.0, f64::max);
                Ok((forces, r.iter().map(|&x| x < RESIDUAL_MASK * max).collect()))
            })
            .collect::<Result<Vec<_>>>()?;
        let (forces, excluded) = per_snapshot.into_iter().unzip();
        Ok(Self {
            grid,
            times: snapshots.iter().map(|s| s.0).collect(),
            forces,
            excluded,
            masses: first.dofs().iter().map(|d| d.mass).collect(),
        })
    }

    fn near_node(&self, snapshot: usize, x: &[f64]) -> bool {
        let mask = &self.excluded[snapshot];
        let near = |axis: &Grid1D, x: f64| -> Vec<usize> {
            let s = axis.locate(x).floor() as isize;
            (s - 2..=s + 3).filter(|&i| i >= 0 && (i as usize) < axis.len()).map(|i| i as usize).collect()
        };
        match &self.grid {
            Grid::One(g) => near(g, x[0]).into_iter().any(|i| mask[i]),
            Grid::Two(g) => {
                let rows = near(&g.axis1, x[0]);
                let cols = near(&g.axis2, x[1]);
                rows.iter().any(|&i| cols.iter().any(|&j| mask[g.index(i, j)]))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondOrderReport {
    /// Largest `|m ẍ − F|` over the retained samples.
    pub max_abs: f64,
    /// `max_abs` divided by the largest `|F|` seen (equal to `max_abs` when
    /// every force vanishes).
    pub max_rel: f64,
    pub force_scale: f64,
    pub samples: usize,
}

/// Compare `m ẍ` (central differences along each recorded path) with the
/// force field at the particle. Recorded times must coincide with snapshot
/// times and be uniformly spaced.
pub fn second_order_check(ensemble: &TrajectoryEnsemble, forces: &ForceSnapshots) -> Result<SecondOrderReport> {
    let nt = ensemble.times.len();
    if nt < 3 {
        return Err(Error::InvalidParameter("need at least three recorded times".into()));
    }
    let h = ensemble.times[1] - ensemble.times[0];
    let index: Vec<usize> = ensemble.times[1..nt - 1]
        .iter()
        .map(|&t| {
            forces
                .times
                .iter()
                .position(|&s| (s - t).abs() <= 1e-9 * h.max(1.0))
                .ok_or_else(|| Error::InvalidParameter(format!("no force snapshot at t = {t}")))
        })
        .collect::<Result<_>>()?;
    let per_particle: Vec<(f64, f64, usize)> = (0..ensemble.n_particles())
        .into_par_iter()
        .filter(|&p| !ensemble.exited[p])
        .map(|p| {
            let mut dev = 0.0f64;
            let mut scale = 0.0f64;
            let mut count = 0;
            for k in 1..nt - 1 {
                let s = index[k - 1];
                let x = ensemble.position(p, k);
                if forces.near_node(s, x) {
                    continue;
                }
                for d in 0..ensemble.n_dof {
                    let acc = (ensemble.position(p, k + 1)[d] - 2.0 * x[d] + ensemble.position(p, k - 1)[d]) / (h * h);
                    let Some(f) = interpolate(&forces.grid, &forces.forces[s][d], x) else {
                        continue;
                    };
                    dev = dev.max((forces.masses[d] * acc - f).abs());
                    scale = scale.max(f.abs());
                    count += 1;
                }
            }
            (dev, scale, count)
        })
        .collect();
    let max_abs = per_particle.iter().map(|r| r.0).fold(0.0, f64::max);
    let force_scale = per_particle.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(SecondOrderReport {
        max_abs,
        max_rel: if force_scale > 0.0 { max_abs / force_scale } else { max_abs },
        force_scale,
        samples: per_particle.iter().map(|r| r.2).sum(),
    })
}

/// A branch packet's support: center and spread along the assignment axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchSupport {
    pub center: f64,
    pub width: f64,
}

/// Half-width of a branch support in units of the packet spread.
pub const SUPPORT_WIDTHS: f64 = 4.0;

/// Label each particle by the branch whose support (`center ± 4 width`)
/// contains its final coordinate along `axis`; the nearest center wins
/// overlaps and particles outside every support get `-1`.
pub fn assign_branches(ensemble: &mut TrajectoryEnsemble, supports: &[BranchSupport], axis: usize) -> Result<Vec<i64>> {
    let max_width = supports.iter().map(|s| s.width).fold(0.0, f64::max);
    for (i, a) in supports.iter().enumerate() {
        for b in &supports[i + 1..] {
            let distance = (a.center - b.center).abs();
            if distance <= 3.0 * max_width {
                return Err(Error::BranchesNotSeparated {
                    distance,
                    width: max_width,
                });
            }
        }
    }
    let ids: Vec<i64> = ensemble
        .final_coordinates(axis)
        .iter()
        .map(|&x| {
            supports
                .iter()
                .enumerate()
                .filter(|(_, s)| (x - s.center).abs() <= SUPPORT_WIDTHS * s.width)
                .min_by(|a, b| (x - a.1.center).abs().total_cmp(&(x - b.1.center).abs()))
                .map_or(-1, |(i, _)| i as i64)
        })
        .collect();
    ensemble.branch_id = ids.clone();
    Ok(ids)
}

/// Fraction of all particles carrying each label `0..n_branches`.
pub fn branch_fractions(ids: &[i64], n_branches: usize) -> Vec<f64> {
    let mut counts = vec![0usize; n_branches];
    for &id in ids {
        if id >= 0 && (id as usize) < n_branches {
            counts[id as usize] += 1;
        }
    }
    counts.iter().map(|&c| c as f64 / ids.len().max(1) as f64).collect()
}

/// Symmetric χ² distance `½ Σ (p−q)² / (p+q)` between the histogram of
/// `samples` and the bin masses of a gridded density, over `n_bins` equal
/// bins spanning the grid.
pub fn chi2_distance(samples: &[f64], density: &[f64], grid: &Grid1D, n_bins: usize) -> Result<f64> {
    if density.len() != grid.len() || n_bins == 0 {
        return Err(Error::InvalidParameter("density must match the grid and n_bins >= 1".into()));
    }
    let (lo, hi) = (grid.x_min(), grid.x_max());
    let width = (hi - lo) / n_bins as f64;
    let bin = |x: f64| (((x - lo) / width).floor().max(0.0) as usize).min(n_bins - 1);
    let mut p = vec![0.0; n_bins];
    for &x in samples {
        p[bin(x)] += 1.0;
    }
    let n = samples.len().max(1) as f64;
    p.iter_mut().for_each(|v| *v /= n);

    // exact overlap of each piecewise-constant cell with each bin
    let mut q = vec![0.0; n_bins];
    for (i, &rho) in density.iter().enumerate() {
        let (a, b) = cell(grid, i);
        let (first, last) = (bin(a), bin(b));
        for (k, qk) in q.iter_mut().enumerate().take(last + 1).skip(first) {
            let (ba, bb) = (lo + k as f64 * width, lo + (k + 1) as f64 * width);
            let overlap = (b.min(bb) - a.max(ba)).max(0.0);
            *qk += rho * overlap;
        }
    }
    let total: f64 = q.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroMass);
    }
    q.iter_mut().for_each(|v| *v /= total);
    Ok(0.5
        * p.iter()
            .zip(&q)
            .filter(|(a, b)| *a + *b > 0.0)
            .map(|(a, b)| (a - b).powi(2) / (a + b))
            .sum::<f64>())
}
