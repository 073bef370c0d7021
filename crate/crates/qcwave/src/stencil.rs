//! Finite-difference derivative stencils on uniform lines.
//!
//! Interior rows use fourth-order central differences. The two outermost
//! rows depend on [`Boundary`].

use std::ops::{Add, Mul, Sub};

use crate::grid::Boundary;

/// Values a stencil can act on (real or complex samples).
pub trait Sample: Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {}

impl<T> Sample for T where
    T: Copy + Default + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>
{
}

#[inline]
fn neg<T: Sample>(v: T) -> T {
    v * -1.0
}

/// Sample `i` (possibly outside `0..n`) under the given boundary rule.
/// Returns `None` when the rule has no value there.
#[inline]
fn ghost<T: Sample>(f: &[T], i: isize, boundary: Boundary) -> Option<T> {
    let n = f.len() as isize;
    if (0..n).contains(&i) {
        return Some(f[i as usize]);
    }
    match boundary {
        Boundary::Periodic => Some(f[i.rem_euclid(n) as usize]),
        Boundary::Dirichlet => {
            let mirrored = if i < 0 { -i } else { 2 * (n - 1) - i };
            (0..n).contains(&mirrored).then(|| neg(f[mirrored as usize]))
        }
        Boundary::OneSided => None,
    }
}

/// Second derivative along a line.
pub fn second_derivative<T: Sample>(f: &[T], dx: f64, boundary: Boundary) -> Vec<T> {
    let n = f.len();
    assert!(n >= 5, "stencil needs at least 5 samples");
    let c = 1.0 / (12.0 * dx * dx);
    let inv_dx2 = 1.0 / (dx * dx);
    let mut out = vec![T::default(); n];
    for (i, o) in out.iter_mut().enumerate() {
        let ii = i as isize;
        let five = (
            ghost(f, ii - 2, boundary),
            ghost(f, ii - 1, boundary),
            ghost(f, ii + 1, boundary),
            ghost(f, ii + 2, boundary),
        );
        *o = match five {
            (Some(m2), Some(m1), Some(p1), Some(p2)) => {
                (neg(m2) + m1 * 16.0 - f[i] * 30.0 + p1 * 16.0 - p2) * c
            }
            (None, Some(m1), Some(p1), _) | (_, Some(m1), Some(p1), None) => {
                (m1 - f[i] * 2.0 + p1) * inv_dx2
            }
            (_, None, _, _) => (f[0] * 2.0 - f[1] * 5.0 + f[2] * 4.0 - f[3]) * inv_dx2,
            (_, _, None, _) => {
                (f[n - 1] * 2.0 - f[n - 2] * 5.0 + f[n - 3] * 4.0 - f[n - 4]) * inv_dx2
            }
        };
    }
    out
}

/// First derivative along a line.
pub fn first_derivative<T: Sample>(f: &[T], dx: f64, boundary: Boundary) -> Vec<T> {
    let n = f.len();
    assert!(n >= 5, "stencil needs at least 5 samples");
    let c = 1.0 / (12.0 * dx);
    let h = 0.5 / dx;
    let mut out = vec![T::default(); n];
    for (i, o) in out.iter_mut().enumerate() {
        let ii = i as isize;
        let four = (
            ghost(f, ii - 2, boundary),
            ghost(f, ii - 1, boundary),
            ghost(f, ii + 1, boundary),
            ghost(f, ii + 2, boundary),
        );
        *o = match four {
            (Some(m2), Some(m1), Some(p1), Some(p2)) => (m2 - m1 * 8.0 + p1 * 8.0 - p2) * c,
            (None, Some(m1), Some(p1), _) | (_, Some(m1), Some(p1), None) => (p1 - m1) * h,
            (_, None, _, _) => (neg(f[0]) * 3.0 + f[1] * 4.0 - f[2]) * h,
            (_, _, None, _) => (f[n - 1] * 3.0 - f[n - 2] * 4.0 + f[n - 3]) * h,
        };
    }
    out
}

/// Apply a line operator along `axis` of a row-major `(n1, n2)` array.
pub fn along_axis<T: Sample>(
    values: &[T],
    shape: (usize, usize),
    axis: usize,
    op: impl Fn(&[T]) -> Vec<T>,
) -> Vec<T> {
    let (n1, n2) = shape;
    debug_assert_eq!(values.len(), n1 * n2);
    let mut out = vec![T::default(); values.len()];
    match axis {
        0 => {
            let mut line = vec![T::default(); n1];
            for i2 in 0..n2 {
                for i1 in 0..n1 {
                    line[i1] = values[i1 * n2 + i2];
                }
                for (i1, v) in op(&line).into_iter().enumerate() {
                    out[i1 * n2 + i2] = v;
                }
            }
        }
        1 => {
            for (src, dst) in values.chunks(n2).zip(out.chunks_mut(n2)) {
                dst.copy_from_slice(&op(src));
            }
        }
        _ => panic!("axis {axis} out of range"),
    }
    out
}
