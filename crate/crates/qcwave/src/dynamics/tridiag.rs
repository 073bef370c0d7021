//! Tridiagonal linear algebra: Thomas solves, Sturm-sequence bisection and
//! inverse iteration for symmetric matrices.

use num_complex::Complex64;

/// Solve a constant-coefficient tridiagonal system `off·x[i−1] + diag·x[i] +
/// off·x[i+1] = rhs[i]` in place (no pivoting; the matrix must be diagonally
/// dominant).
pub fn thomas_constant(diag: Complex64, off: Complex64, rhs: &mut [Complex64]) {
    let n = rhs.len();
    if n == 0 {
        return;
    }
    let mut c_prime = vec![Complex64::default(); n];
    let mut denom = diag;
    c_prime[0] = off / denom;
    rhs[0] /= denom;
    for i in 1..n {
        denom = diag - off * c_prime[i - 1];
        c_prime[i] = off / denom;
        rhs[i] = (rhs[i] - off * rhs[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        let next = rhs[i + 1];
        rhs[i] -= c_prime[i] * next;
    }
}

/// Number of eigenvalues strictly below `x` of the symmetric tridiagonal
/// matrix with diagonal `d` and off-diagonal `e` (`e.len() == d.len() − 1`).
pub fn sturm_count(d: &[f64], e: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = d[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..d.len() {
        let prev = if q == 0.0 { f64::EPSILON * (e[i - 1].abs() + 1.0) } else { q };
        q = d[i] - x - e[i - 1] * e[i - 1] / prev;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// `k`-th smallest eigenvalue (0-based) by bisection on Gershgorin bounds.
pub fn kth_eigenvalue(d: &[f64], e: &[f64], k: usize) -> f64 {
    assert!(k < d.len());
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..d.len() {
        let radius = if i > 0 { e[i - 1].abs() } else { 0.0 } + e.get(i).map_or(0.0, |v| v.abs());
        lo = lo.min(d[i] - radius);
        hi = hi.max(d[i] + radius);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(d, e, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solve `(T − shift·I) x = b` for symmetric tridiagonal `T` by Gaussian
/// elimination with partial pivoting. Exactly singular pivots are replaced by
/// a tiny value, which is what inverse iteration wants.
fn solve_shifted(d: &[f64], e: &[f64], shift: f64, b: &mut [f64]) {
    let n = d.len();
    let tiny = f64::EPSILON * d.iter().chain(e).fold(1.0f64, |m, v| m.max(v.abs()));
    let mut diag: Vec<f64> = d.iter().map(|v| v - shift).collect();
    let mut lower = e.to_vec();
    let mut upper = e.to_vec();
    let mut upper2 = vec![0.0; n.saturating_sub(2)];
    let mut swapped = vec![false; n.saturating_sub(1)];
    for i in 0..n - 1 {
        if diag[i].abs() >= lower[i].abs() {
            if diag[i] == 0.0 {
                diag[i] = tiny;
            }
            let fact = lower[i] / diag[i];
            lower[i] = fact;
            diag[i + 1] -= fact * upper[i];
        } else {
            let fact = diag[i] / lower[i];
            diag[i] = lower[i];
            lower[i] = fact;
            let temp = upper[i];
            upper[i] = diag[i + 1];
            diag[i + 1] = temp - fact * diag[i + 1];
            if i + 2 < n {
                upper2[i] = upper[i + 1];
                upper[i + 1] *= -fact;
            }
            swapped[i] = true;
        }
    }
    if diag[n - 1] == 0.0 {
        diag[n - 1] = tiny;
    }
    for i in 0..n - 1 {
        if swapped[i] {
            b.swap(i, i + 1);
        }
        b[i + 1] -= lower[i] * b[i];
    }
    b[n - 1] /= diag[n - 1];
    if n > 1 {
        b[n - 2] = (b[n - 2] - upper[n - 2] * b[n - 1]) / diag[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        b[i] = (b[i] - upper[i] * b[i + 1] - upper2[i] * b[i + 2]) / diag[i];
    }
}

/// Unit eigenvector for a known eigenvalue by inverse iteration.
pub fn inverse_iteration(d: &[f64], e: &[f64], eigenvalue: f64, start: Option<&[f64]>) -> Vec<f64> {
    let n = d.len();
    let mut x: Vec<f64> = match start {
        Some(s) if s.len() == n && s.iter().any(|v| *v != 0.0) => s.to_vec(),
        // a deterministic start with components along every eigenvector
        _ => (0..n).map(|i| 1.0 + 0.1 * ((i as f64) * 0.7).sin()).collect(),
    };
    for _ in 0..4 {
        solve_shifted(d, e, eigenvalue, &mut x);
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= norm);
    }
    x
}
