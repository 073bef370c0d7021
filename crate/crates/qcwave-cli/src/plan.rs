//! Turns a parsed config into fully validated inputs. Nothing here touches
//! the filesystem or runs a simulation.

use std::fmt::Display;

use qcwave::density::PhaseScale;
use qcwave::dynamics::{EvolutionConfig, PointerCoupling, PointerPacket, Scheme, SternGerlachConfig};
use qcwave::schedule::LambdaSchedule;
use qcwave::spectra::BoxSpec;
use qcwave::{Complex64, ComplexField, Dof, Grid1D, Grid2D};

use crate::config::{locate, ConfigError, InitialState, PotentialKind, ScenarioConfig, ScenarioKind, SweepKind};

/// Command-line settings that override the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<std::path::PathBuf>,
    pub no_checks: bool,
    /// Number of evenly spaced field snapshots to write.
    pub snapshots: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct EvolvePlan {
    pub psi: ComplexField,
    pub v: Vec<f64>,
    pub evo: EvolutionConfig,
    pub residual_tolerance: f64,
    pub free: bool,
    pub write_snapshots: bool,
}

#[derive(Debug, Clone)]
pub struct SpectrumPlan {
    pub spec: BoxSpec,
    pub lambda: f64,
    /// Grid size of the self-consistent solver cross-check; 0 disables it.
    pub stationary_points: usize,
}

#[derive(Debug, Clone)]
pub struct TrajectoryPlan {
    pub evolve: EvolvePlan,
    pub n_particles: usize,
    pub record_every: usize,
    pub n_bins: usize,
    pub chi2_tolerance: f64,
    pub second_order_tolerance: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SternGerlachPlan {
    pub sg: SternGerlachConfig,
    pub lambda2: f64,
    pub evo: EvolutionConfig,
    pub n_particles: usize,
    pub record_every: usize,
}

#[derive(Debug, Clone)]
pub struct PointerPlan {
    pub coefficients: Vec<Complex64>,
    pub packet: PointerPacket,
    pub coupling: PointerCoupling,
    pub hbar: f64,
    pub grid: Grid1D,
}

#[derive(Debug, Clone)]
pub struct EprPlan {
    pub classical: bool,
    pub delta_ab: f64,
    pub delta_big_ab: f64,
}

#[derive(Debug, Clone)]
pub struct DotPlan {
    pub spec: BoxSpec,
    pub schedule: LambdaSchedule,
    pub times: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SuperpositionPlan {
    pub a: f64,
    pub b: f64,
    pub delta: f64,
    /// `(E, V, Q)` for the phase scale; unit scale when absent.
    pub energy: Option<(f64, f64, f64)>,
}

#[derive(Debug, Clone)]
pub enum SweepInner {
    Spectrum(SpectrumPlan),
    Evolve(EvolvePlan),
    Superposition(SuperpositionPlan),
}

#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub lambdas: Vec<f64>,
    pub inner: SweepInner,
}

#[derive(Debug, Clone)]
pub enum Scenario {
    Evolve(EvolvePlan),
    Spectrum(SpectrumPlan),
    Trajectories(TrajectoryPlan),
    MeasureSg(SternGerlachPlan),
    MeasurePointer(PointerPlan),
    Epr(EprPlan),
    DotPredict(DotPlan),
    Sweep(SweepPlan),
}

#[derive(Debug, Clone)]
pub struct Plan {
    pub kind: ScenarioKind,
    pub seed: u64,
    pub out_dir: std::path::PathBuf,
    pub checks: bool,
    pub scenario: Scenario,
}

struct Ctx<'a> {
    cfg: &'a ScenarioConfig,
    src: &'a str,
}

impl Ctx<'_> {
    fn err(&self, key: &str, msg: impl Display) -> ConfigError {
        let (line, column) = locate(self.src, key);
        ConfigError {
            message: format!("{key}: {msg}"),
            line,
            column,
        }
    }

    fn lib<T>(&self, key: &str, r: qcwave::Result<T>) -> Result<T, ConfigError> {
        r.map_err(|e| self.err(key, e))
    }

    fn finite(&self, key: &str, v: Option<f64>, default: f64) -> Result<f64, ConfigError> {
        let v = v.unwrap_or(default);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.err(key, format!("must be finite, got {v}")))
        }
    }

    fn positive(&self, key: &str, v: Option<f64>, default: f64) -> Result<f64, ConfigError> {
        let v = v.unwrap_or(default);
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(self.err(key, format!("must be > 0, got {v}")))
        }
    }

    fn lambda(&self, key: &str, v: Option<f64>, default: f64) -> Result<f64, ConfigError> {
        let v = v.unwrap_or(default);
        if (0.0..=1.0).contains(&v) {
            Ok(v)
        } else {
            Err(self.err(key, format!("lambda must lie in [0, 1], got {v}")))
        }
    }

    fn count(&self, key: &str, v: Option<usize>, default: usize, min: usize) -> Result<usize, ConfigError> {
        let v = v.unwrap_or(default);
        if v >= min {
            Ok(v)
        } else {
            Err(self.err(key, format!("must be >= {min}, got {v}")))
        }
    }

    fn require<T: Clone>(&self, key: &str, v: &Option<T>) -> Result<T, ConfigError> {
        v.clone().ok_or_else(|| self.err(key, "required for this scenario"))
    }

    fn schedule(&self, key: &str, s: &Option<LambdaSchedule>) -> Result<Option<LambdaSchedule>, ConfigError> {
        match s {
            Some(s) => {
                self.lib(key, s.validate())?;
                Ok(Some(*s))
            }
            None => Ok(None),
        }
    }

    fn axis(&self, which: usize, d: (f64, f64, usize)) -> Result<Grid1D, ConfigError> {
        let c = self.cfg;
        let (lo, hi, n, key) = if which == 0 {
            (c.x_min, c.x_max, c.n_points, "n_points")
        } else {
            (c.y_min, c.y_max, c.n_points_y, "n_points_y")
        };
        let (klo, khi) = if which == 0 { ("x_min", "x_max") } else { ("y_min", "y_max") };
        let lo = self.finite(klo, lo, d.0)?;
        let hi = self.finite(khi, hi, d.1)?;
        let n = self.count(key, n, d.2, 4)?;
        if !(hi > lo) {
            return Err(self.err(khi, format!("must exceed {klo}")));
        }
        self.lib(key, Grid1D::new(lo, hi, n))
    }
}

fn gaussian(x: f64, x0: f64, sigma: f64, p0: f64, hbar: f64) -> Complex64 {
    Complex64::from_polar((-(x - x0).powi(2) / (4.0 * sigma * sigma)).exp(), p0 * x / hbar)
}

/// Build and validate the whole run before any computation starts.
pub fn build(cfg: &ScenarioConfig, src: &str, overrides: &Overrides) -> Result<Plan, ConfigError> {
    let ctx = Ctx { cfg, src };
    let kind = ctx.require("scenario", &cfg.scenario)?;
    let scenario = match kind {
        ScenarioKind::Evolve => Scenario::Evolve(evolve_plan(&ctx, false, overrides)?),
        ScenarioKind::Evolve2d => Scenario::Evolve(evolve_plan(&ctx, true, overrides)?),
        ScenarioKind::Spectrum => Scenario::Spectrum(spectrum_plan(&ctx)?),
        ScenarioKind::Trajectories => Scenario::Trajectories(trajectory_plan(&ctx)?),
        ScenarioKind::MeasureSg => Scenario::MeasureSg(sg_plan(&ctx)?),
        ScenarioKind::MeasurePointer => Scenario::MeasurePointer(pointer_plan(&ctx)?),
        ScenarioKind::Epr => Scenario::Epr(epr_plan(&ctx)?),
        ScenarioKind::DotPredict => Scenario::DotPredict(dot_plan(&ctx)?),
        ScenarioKind::LambdaSweep => Scenario::Sweep(sweep_plan(&ctx, None)?),
    };
    Ok(Plan {
        kind,
        seed: overrides.seed.or(cfg.seed).unwrap_or(0),
        out_dir: overrides
            .out_dir
            .clone()
            .or_else(|| cfg.out_dir.as_ref().map(Into::into))
            .unwrap_or_else(|| "qcwave-out".into()),
        checks: !overrides.no_checks,
        scenario,
    })
}

/// A sweep over the config's own scenario (`spectrum`, `evolve`) or an
/// explicit `lambda_sweep`.
pub fn build_sweep(cfg: &ScenarioConfig, src: &str, overrides: &Overrides) -> Result<Plan, ConfigError> {
    let ctx = Ctx { cfg, src };
    let kind = ctx.require("scenario", &cfg.scenario)?;
    let inner = match kind {
        ScenarioKind::LambdaSweep => None,
        ScenarioKind::Spectrum => Some(SweepKind::Spectrum),
        ScenarioKind::Evolve => Some(SweepKind::Evolve),
        other => return Err(ctx.err("scenario", format!("cannot sweep scenario {}", other.name()))),
    };
    let mut plan = build(cfg, src, overrides)?;
    plan.kind = ScenarioKind::LambdaSweep;
    plan.scenario = Scenario::Sweep(sweep_plan(&ctx, inner)?);
    Ok(plan)
}

fn evolution_config(ctx: &Ctx, n_dof: usize, default_steps: usize) -> Result<EvolutionConfig, ConfigError> {
    let c = ctx.cfg;
    let mut evo = EvolutionConfig::new(ctx.positive("dt", c.dt, 1e-3)?, ctx.count("steps", c.steps, default_steps, 1)?);
    evo.scheme = c.scheme.unwrap_or_default();
    evo.q_refresh = c.q_refresh.unwrap_or_default();
    evo.norm_tolerance = ctx.positive("norm_tolerance", c.norm_tolerance, 1e-8)?;
    if let Some(r) = c.residual_every {
        evo.residual_every = Some(ctx.count("residual_every", Some(r), 1, 1)?);
    }
    if let Some(s) = c.snapshot_every {
        evo.snapshot_every = Some(ctx.count("snapshot_every", Some(s), 1, 1)?);
    }
    let s1 = ctx.schedule("schedule", &c.schedule)?;
    let s2 = ctx.schedule("schedule2", &c.schedule2)?;
    evo.schedules = match (n_dof, s1, s2) {
        (_, None, None) => Vec::new(),
        (1, Some(s), None) => vec![s],
        (1, _, Some(_)) => return Err(ctx.err("schedule2", "only one degree of freedom")),
        (_, s1, s2) => {
            let l1 = LambdaSchedule::constant(c.lambda.unwrap_or(0.0));
            let l2 = LambdaSchedule::constant(c.lambda2.unwrap_or(0.0));
            vec![s1.unwrap_or(l1), s2.unwrap_or(l2)]
        }
    };
    ctx.lib("dt", evo.validate(n_dof))?;
    Ok(evo)
}

fn evolve_plan(ctx: &Ctx, two_d: bool, overrides: &Overrides) -> Result<EvolvePlan, ConfigError> {
    let c = ctx.cfg;
    let hbar = ctx.positive("hbar", c.hbar, 1.0)?;
    let mass = ctx.positive("mass", c.mass, 1.0)?;
    let lambda = ctx.lambda("lambda", c.lambda, 0.0)?;
    let potential = c.potential.unwrap_or_default();
    let omega = ctx.positive("omega", c.omega, 1.0)?;
    let x0 = ctx.finite("x0", c.x0, 0.0)?;
    let sigma = ctx.positive("sigma", c.sigma, 1.0)?;
    let p0 = ctx.finite("p0", c.p0, 0.0)?;
    let mut evo = evolution_config(ctx, if two_d { 2 } else { 1 }, 1000)?;
    if potential == PotentialKind::Box && evo.scheme != Scheme::CrankNicolson {
        return Err(ctx.err("potential", "a box needs scheme = \"crank_nicolson\""));
    }
    if let Some(n) = overrides.snapshots {
        if n == 0 {
            return Err(ctx.err("snapshots", "--snapshots must be >= 1"));
        }
        evo.snapshot_every = Some((evo.n_steps / n).max(1));
    }
    let write_snapshots = evo.snapshot_every.is_some();
    let residual_tolerance = ctx.positive("residual_tolerance", c.residual_tolerance, 1e-3)?;
    let dof = ctx.lib("mass", Dof::new(mass, lambda))?;
    let walls = potential == PotentialKind::Box;

    let (psi, v) = if two_d {
        let g = Grid2D::new(ctx.axis(0, (-10.0, 10.0, 128))?, ctx.axis(1, (-10.0, 10.0, 128))?);
        let mass2 = ctx.positive("mass2", c.mass2, 1.0)?;
        let lambda2 = ctx.lambda("lambda2", c.lambda2, 0.0)?;
        let dof2 = ctx.lib("mass2", Dof::new(mass2, lambda2))?;
        let y0 = ctx.finite("y0", c.y0, 0.0)?;
        let sy = ctx.positive("sigma_y", c.sigma_y, sigma)?;
        let py = ctx.finite("p0_y", c.p0_y, 0.0)?;
        if c.initial == Some(InitialState::BoxEigenstate) {
            return Err(ctx.err("initial", "box eigenstates are one-dimensional"));
        }
        let psi = ctx.lib(
            "sigma",
            ComplexField::from_fn_2d(g, [dof, dof2], hbar, |x, y| gaussian(x, x0, sigma, p0, hbar) * gaussian(y, y0, sy, py, hbar)),
        )?;
        let psi = ctx.lib("sigma", psi.normalized())?;
        let v = match potential {
            PotentialKind::Harmonic => {
                let (n1, n2) = g.shape();
                (0..n1 * n2)
                    .map(|i| {
                        let (x, y) = (g.axis1.x(i / n2), g.axis2.x(i % n2));
                        0.5 * omega * omega * (mass * x * x + mass2 * y * y)
                    })
                    .collect()
            }
            _ => vec![0.0; g.len()],
        };
        (psi, v)
    } else {
        let g = ctx.axis(0, (-20.0, 20.0, 1024))?;
        let psi = match c.initial.unwrap_or_default() {
            InitialState::Gaussian => {
                let psi = ctx.lib("sigma", ComplexField::from_fn_1d(g, dof, hbar, |x| gaussian(x, x0, sigma, p0, hbar)))?;
                ctx.lib("sigma", psi.normalized())?
            }
            InitialState::BoxEigenstate => {
                if !walls {
                    return Err(ctx.err("initial", "box eigenstates need potential = \"box\""));
                }
                let n = ctx.count("level", c.level, 1, 1)? as f64;
                let l = g.x_max() - g.x_min();
                let lo = g.x_min();
                let psi = ctx.lib(
                    "level",
                    ComplexField::from_fn_1d(g, dof, hbar, |x| {
                        Complex64::new((2.0 / l).sqrt() * (n * std::f64::consts::PI * (x - lo) / l).sin(), 0.0)
                    }),
                )?;
                ctx.lib("level", psi.normalized())?
            }
        };
        let v = match potential {
            PotentialKind::Harmonic => g.points().iter().map(|x| 0.5 * mass * omega * omega * x * x).collect(),
            _ => vec![0.0; g.len()],
        };
        (psi, v)
    };
    Ok(EvolvePlan {
        psi,
        v,
        evo,
        residual_tolerance,
        free: potential == PotentialKind::Free,
        write_snapshots,
    })
}

fn box_spec(ctx: &Ctx) -> Result<BoxSpec, ConfigError> {
    let c = ctx.cfg;
    let spec = BoxSpec {
        length: ctx.positive("length", c.length, 1.0)?,
        mass: ctx.positive("mass", c.mass, 1.0)?,
        hbar: ctx.positive("hbar", c.hbar, 1.0)?,
        n_max: ctx.count("n_max", c.n_max, 3, 1)?,
    };
    ctx.lib("n_max", spec.validate())?;
    Ok(spec)
}

fn spectrum_plan(ctx: &Ctx) -> Result<SpectrumPlan, ConfigError> {
    let c = ctx.cfg;
    let spec = box_spec(ctx)?;
    let stationary_points = match c.stationary_points {
        Some(0) => 0,
        n => ctx.count("stationary_points", n, 1001, spec.n_max + 3)?,
    };
    Ok(SpectrumPlan {
        spec,
        lambda: ctx.lambda("lambda", c.lambda, 0.0)?,
        stationary_points,
    })
}

fn trajectory_plan(ctx: &Ctx) -> Result<TrajectoryPlan, ConfigError> {
    let c = ctx.cfg;
    let mut evolve = evolve_plan(ctx, false, &Overrides::default())?;
    let record_every = ctx.count("record_every", c.record_every, (evolve.evo.n_steps / 10).max(1), 1)?;
    evolve.evo.snapshot_every = Some(1);
    evolve.write_snapshots = false;
    Ok(TrajectoryPlan {
        evolve,
        n_particles: ctx.count("n_particles", c.n_particles, 10_000, 1)?,
        record_every,
        n_bins: ctx.count("n_bins", c.n_bins, 50, 1)?,
        chi2_tolerance: ctx.positive("chi2_tolerance", c.chi2_tolerance, 0.01)?,
        second_order_tolerance: match c.second_order_tolerance {
            Some(t) => Some(ctx.positive("second_order_tolerance", Some(t), 0.0)?),
            None => None,
        },
    })
}

fn sg_plan(ctx: &Ctx) -> Result<SternGerlachPlan, ConfigError> {
    let c = ctx.cfg;
    let sg = SternGerlachConfig {
        mu_b: ctx.finite("mu_b", c.mu_b, 1.0)?,
        db_dz: ctx.finite("db_dz", c.db_dz, 5.0)?,
        tau: ctx.positive("tau", c.tau, 1.0)?,
        z0: ctx.finite("x0", c.x0, 0.0)?,
        sigma: ctx.positive("sigma", c.sigma, 1.0)?,
        k: ctx.finite("p0", c.p0, 0.0)?,
        c_plus: ctx.finite("c_plus", Some(ctx.require("c_plus", &c.c_plus)?), 0.0)?,
        c_minus: ctx.finite("c_minus", Some(ctx.require("c_minus", &c.c_minus)?), 0.0)?,
        mass: ctx.positive("mass", c.mass, 1.0)?,
        hbar: ctx.positive("hbar", c.hbar, 1.0)?,
        lambda: ctx.lambda("lambda", c.lambda, 0.0)?,
        grid: ctx.axis(0, (-25.0, 25.0, 1024))?,
    };
    if sg.c_plus < 0.0 || sg.c_minus < 0.0 {
        return Err(ctx.err("c_plus", "coefficients are real amplitudes >= 0"));
    }
    ctx.lib("c_plus", sg.validate())?;
    let lambda2 = ctx.lambda("lambda2", c.lambda2, 1.0)?;
    let mut evo = evolution_config(ctx, 1, 200)?;
    if c.dt.is_none() {
        evo.dt = 0.01;
    }
    if !evo.schedules.is_empty() {
        return Err(ctx.err("schedule", "not supported for measure_sg; use lambda"));
    }
    evo.snapshot_every = Some(1);
    Ok(SternGerlachPlan {
        sg,
        lambda2,
        record_every: ctx.count("record_every", c.record_every, (evo.n_steps / 20).max(1), 1)?,
        evo,
        n_particles: ctx.count("n_particles", c.n_particles, 10_000, 1)?,
    })
}

fn pointer_plan(ctx: &Ctx) -> Result<PointerPlan, ConfigError> {
    let c = ctx.cfg;
    let coefficients: Vec<Complex64> = ctx
        .require("coefficients", &c.coefficients)?
        .iter()
        .map(|[re, im]| Complex64::new(*re, *im))
        .collect();
    let eigenvalues = ctx.require("eigenvalues", &c.eigenvalues)?;
    if coefficients.is_empty() || coefficients.len() != eigenvalues.len() {
        return Err(ctx.err("eigenvalues", "need one eigenvalue per coefficient"));
    }
    let total: f64 = coefficients.iter().map(|z| z.norm_sqr()).sum();
    if (total - 1.0).abs() > 1e-12 || coefficients.iter().any(|z| !z.is_finite()) {
        return Err(ctx.err("coefficients", format!("squared magnitudes must sum to 1, got {total}")));
    }
    Ok(PointerPlan {
        coefficients,
        packet: PointerPacket {
            center: ctx.finite("pointer_center", c.pointer_center, 0.0)?,
            sigma: ctx.positive("pointer_sigma", c.pointer_sigma, 1.0)?,
        },
        coupling: PointerCoupling {
            g: ctx.finite("g", c.g, 1.0)?,
            eigenvalues,
            duration: ctx.positive("duration", c.duration, 1.0)?,
        },
        hbar: ctx.positive("hbar", c.hbar, 1.0)?,
        grid: ctx.axis(0, (-20.0, 20.0, 1024))?,
    })
}

fn epr_plan(ctx: &Ctx) -> Result<EprPlan, ConfigError> {
    let c = ctx.cfg;
    let lambda2 = ctx.lambda("lambda2", c.lambda2, 1.0)?;
    if lambda2 != 0.0 && lambda2 != 1.0 {
        return Err(ctx.err("lambda2", "the apparatus is either quantum (0) or classical (1)"));
    }
    Ok(EprPlan {
        classical: lambda2 == 1.0,
        delta_ab: ctx.finite("delta_ab", c.delta_ab, 0.0)?,
        delta_big_ab: ctx.finite("delta_big_ab", c.delta_big_ab, 0.0)?,
    })
}

fn time_grid(ctx: &Ctx) -> Result<Vec<f64>, ConfigError> {
    let c = ctx.cfg;
    let t_min = ctx.finite("t_min", c.t_min, 0.0)?;
    let t_max = ctx.finite("t_max", c.t_max, 1.0)?;
    let n = ctx.count("n_times", c.n_times, 101, 1)?;
    if t_max < t_min {
        return Err(ctx.err("t_max", "must be >= t_min"));
    }
    Ok(if n == 1 {
        vec![t_min]
    } else {
        (0..n).map(|i| t_min + (t_max - t_min) * i as f64 / (n - 1) as f64).collect()
    })
}

fn dot_plan(ctx: &Ctx) -> Result<DotPlan, ConfigError> {
    let spec = box_spec(ctx)?;
    let schedule = match ctx.schedule("schedule", &ctx.cfg.schedule)? {
        Some(s) => s,
        None => LambdaSchedule::constant(ctx.lambda("lambda", Some(ctx.require("schedule", &ctx.cfg.lambda)?), 0.0)?),
    };
    Ok(DotPlan {
        spec,
        schedule,
        times: time_grid(ctx)?,
    })
}

fn sweep_plan(ctx: &Ctx, inner: Option<SweepKind>) -> Result<SweepPlan, ConfigError> {
    let c = ctx.cfg;
    let kind = match inner {
        Some(k) => k,
        None => ctx.require("sweep_scenario", &c.sweep_scenario)?,
    };
    let lambdas = match (&c.lambdas, &c.schedule) {
        (Some(l), _) => {
            for &v in l {
                ctx.lambda("lambdas", Some(v), 0.0)?;
            }
            l.clone()
        }
        (None, Some(s)) => {
            ctx.lib("schedule", s.validate())?;
            time_grid(ctx)?
                .iter()
                .map(|&t| ctx.lib("schedule", qcwave::schedule::lambda_at(s, t)))
                .collect::<Result<_, _>>()?
        }
        (None, None) => return Err(ctx.err("lambdas", "a sweep needs a lambdas list or a schedule")),
    };
    if lambdas.is_empty() {
        return Err(ctx.err("lambdas", "the lambda list is empty"));
    }
    let inner = match kind {
        SweepKind::Spectrum => SweepInner::Spectrum(spectrum_plan(ctx)?),
        SweepKind::Evolve => {
            if c.schedule.is_some() && c.lambdas.is_some() {
                return Err(ctx.err("schedule", "a swept evolution runs at constant lambda"));
            }
            let mut p = evolve_plan(ctx, false, &Overrides::default())?;
            p.evo.schedules.clear();
            p.write_snapshots = false;
            SweepInner::Evolve(p)
        }
        SweepKind::Superposition => {
            let a = ctx.finite("c_plus", c.c_plus, std::f64::consts::FRAC_1_SQRT_2)?;
            let b = ctx.finite("c_minus", c.c_minus, std::f64::consts::FRAC_1_SQRT_2)?;
            ctx.lib("c_plus", qcwave::density::superposition_rho(a, b, 0.0, PhaseScale::unit(), false))?;
            let energy = match c.energy {
                Some(e) => Some((
                    ctx.finite("energy", Some(e), 0.0)?,
                    ctx.finite("v_value", c.v_value, 0.0)?,
                    ctx.finite("q_value", c.q_value, 0.0)?,
                )),
                None => None,
            };
            SweepInner::Superposition(SuperpositionPlan {
                a,
                b,
                delta: ctx.finite("delta", c.delta, 0.0)?,
                energy,
            })
        }
    };
    Ok(SweepPlan { lambdas, inner })
}
