//! Time schedules for the classicality parameter λ(t).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{check_lambda, Error, Result};

/// Absolute tolerance of the normal-CDF quadrature.
pub const NORMAL_CDF_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LambdaSchedule {
    Constant { value: f64 },
    /// `1 / (1 + exp(−b (t − t0)))`.
    Logistic { b: f64, t0: f64 },
    /// CDF of a normal distribution with mean `mu` and std `sigma`.
    NormalCdf { mu: f64, sigma: f64 },
    /// Unit step at `t0` (one half exactly at `t0`).
    Step { t0: f64 },
}

impl LambdaSchedule {
    pub fn constant(value: f64) -> Self {
        Self::Constant { value }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Constant { value } => check_lambda(value),
            Self::Logistic { b, t0 } => {
                if !(b > 0.0) || !b.is_finite() {
                    return Err(Error::InvalidParameter(format!("logistic steepness b must be > 0, got {b}")));
                }
                finite("t0", t0)
            }
            Self::NormalCdf { mu, sigma } => {
                if !(sigma > 0.0) || !sigma.is_finite() {
                    return Err(Error::InvalidParameter(format!("sigma must be > 0, got {sigma}")));
                }
                finite("mu", mu)
            }
            Self::Step { t0 } => finite("t0", t0),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Self::Constant { .. })
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite")))
    }
}

pub fn lambda_at(schedule: &LambdaSchedule, t: f64) -> Result<f64> {
    schedule.validate()?;
    Ok(match *schedule {
        LambdaSchedule::Constant { value } => value,
        LambdaSchedule::Logistic { b, t0 } => logistic(b * (t - t0)),
        LambdaSchedule::NormalCdf { mu, sigma } => normal_cdf((t - mu) / sigma),
        LambdaSchedule::Step { t0 } => step(t - t0),
    })
}

pub fn one_minus_lambda(schedule: &LambdaSchedule, t: f64) -> Result<f64> {
    Ok(1.0 - lambda_at(schedule, t)?)
}

pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Complementary logistic `1 / (1 + exp(x))`, evaluated directly.
pub fn logistic_complement(x: f64) -> f64 {
    1.0 / (1.0 + x.exp())
}

fn step(dt: f64) -> f64 {
    if dt > 0.0 {
        1.0
    } else if dt < 0.0 {
        0.0
    } else {
        0.5
    }
}

fn std_normal_pdf(t: f64) -> f64 {
    (-0.5 * t * t).exp() / (2.0 * PI).sqrt()
}

/// Standard normal CDF by adaptive Simpson quadrature of the density.
///
/// Beyond one standard deviation the upper tail is integrated directly with
/// a tolerance relative to the local density, so far tails stay accurate and
/// monotone instead of drowning in the absolute tolerance.
pub fn normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let z = x.abs();
    let upper = if z <= 1.0 {
        0.5 - adaptive_simpson(std_normal_pdf, 0.0, z, NORMAL_CDF_TOL, 50)
    } else {
        let scale = std_normal_pdf(z);
        if scale == 0.0 {
            0.0
        } else {
            let tol = NORMAL_CDF_TOL.min(1e-9 * scale / z);
            adaptive_simpson(std_normal_pdf, z, z + 10.0, tol, 60)
        }
    };
    let p = if x >= 0.0 { 1.0 - upper } else { upper };
    p.clamp(0.0, 1.0)
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, max_depth: u32) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(&f, a, b, fa, fm, fb, whole, tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Sup-norm distance between the logistic of steepness `b` and the unit
/// step, over offsets `t − t0` (offsets equal to zero are skipped).
pub fn step_limit_check(b_sequence: &[f64], t_offsets: &[f64]) -> Result<Vec<f64>> {
    if b_sequence.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("b sequence must be increasing".into()));
    }
    b_sequence
        .iter()
        .map(|&b| {
            let schedule = LambdaSchedule::Logistic { b, t0: 0.0 };
            t_offsets
                .iter()
                .filter(|dt| **dt != 0.0)
                .map(|&dt| Ok((lambda_at(&schedule, dt)? - step(dt)).abs()))
                .try_fold(0.0f64, |m, d: Result<f64>| Ok(m.max(d?)))
        })
        .collect()
}

/// Tabulate `(t, λ(t))`.
pub fn tabulate(schedule: &LambdaSchedule, times: &[f64]) -> Result<Vec<(f64, f64)>> {
    times.iter().map(|&t| Ok((t, lambda_at(schedule, t)?))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn logistic_examples() {
        let s = LambdaSchedule::Logistic { b: 2.0, t0: 3.0 };
        assert_eq!(lambda_at(&s, 3.0).unwrap(), 0.5);
        assert!((lambda_at(&s, 4.0).unwrap() - 0.880797077977882).abs() < 1e-12);
        assert_eq!(one_minus_lambda(&s, 3.0).unwrap(), 0.5);
        assert!((one_minus_lambda(&s, 4.0).unwrap() - 0.11920292202211755).abs() < 1e-12);
    }

    #[test]
    fn complement_paths_agree() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let b = rng.gen_range(0.01..50.0);
            let t0 = rng.gen_range(-5.0..5.0);
            let t = rng.gen_range(-10.0..10.0);
            let s = LambdaSchedule::Logistic { b, t0 };
            let generic = one_minus_lambda(&s, t).unwrap();
            let closed = logistic_complement(b * (t - t0));
            assert!((generic - closed).abs() <= 1e-15, "{generic} vs {closed}");
            assert!((lambda_at(&s, t).unwrap() + generic - 1.0).abs() <= 1e-15);
        }
    }

    #[test]
    fn normal_cdf_values() {
        let s = LambdaSchedule::NormalCdf { mu: 1.5, sigma: 0.3 };
        assert!((lambda_at(&s, 1.5).unwrap() - 0.5).abs() < 1e-15);
        // reference values of the standard normal CDF
        for (x, want) in [(1.0, 0.8413447460685429), (-2.0, 0.022750131948179195), (3.0, 0.9986501019683699)] {
            assert!((normal_cdf(x) - want).abs() < 1e-10, "{x}");
        }
        for x in [0.1, 0.7, 1.9, 4.2, 8.0] {
            assert!((normal_cdf(x) + normal_cdf(-x) - 1.0).abs() < 1e-9);
        }
        assert_eq!(normal_cdf(100.0), 1.0);
        assert!(normal_cdf(-10.0) > 0.0 && (normal_cdf(-10.0) / 7.619853024160527e-24 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn range_and_monotonicity() {
        let schedules = [
            LambdaSchedule::constant(0.3),
            LambdaSchedule::Logistic { b: 5.0, t0: 1.0 },
            LambdaSchedule::NormalCdf { mu: 0.0, sigma: 2.0 },
            LambdaSchedule::Step { t0: 0.5 },
        ];
        for s in &schedules {
            let mut prev = f64::NEG_INFINITY;
            for k in 0..4001 {
                let t = -20.0 + 0.01 * k as f64;
                let l = lambda_at(s, t).unwrap();
                assert!((0.0..=1.0).contains(&l));
                assert!(l >= prev, "{s:?} not monotone at {t}");
                prev = l;
            }
        }
    }

    #[test]
    fn invalid_parameters() {
        assert!(lambda_at(&LambdaSchedule::Logistic { b: 0.0, t0: 0.0 }, 0.0).is_err());
        assert!(lambda_at(&LambdaSchedule::Logistic { b: -1.0, t0: 0.0 }, 0.0).is_err());
        assert!(lambda_at(&LambdaSchedule::NormalCdf { mu: 0.0, sigma: 0.0 }, 0.0).is_err());
        assert!(lambda_at(&LambdaSchedule::constant(1.2), 0.0).is_err());
    }

    #[test]
    fn step_limit() {
        let offsets: Vec<f64> = (0..=2000)
            .map(|k| -10.0 + 0.01 * k as f64)
            .filter(|t: &f64| t.abs() >= 0.01 - 1e-12)
            .collect();
        let bs = [500.0, 1000.0, 2000.0, 4000.0];
        let dev = step_limit_check(&bs, &offsets).unwrap();
        assert!(dev[1] < (-10.0f64).exp());
        for w in dev.windows(2) {
            assert!(w[1] < w[0]);
            // doubling b roughly squares the tail
            assert!((w[1].ln() / w[0].ln() - 2.0).abs() < 0.05);
        }
        for b in bs {
            let s = LambdaSchedule::Logistic { b, t0: 2.0 };
            assert_eq!(lambda_at(&s, 2.0).unwrap(), 0.5);
        }
        assert!(step_limit_check(&[2.0, 1.0], &offsets).is_err());
    }
}
