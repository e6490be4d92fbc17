//! Small dense helpers shared by the trackers and the observability tests.

use nalgebra::{Cholesky, DMatrix, Dyn};

/// `(A + A^T) / 2` in place.
pub fn symmetrize(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}

/// 2-norm condition number from the singular values. Infinite for singular
/// or empty input.
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return f64::INFINITY;
    }
    let sv = a.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Cholesky factor of a symmetric matrix; on failure retries once with
/// `1e-10 * trace / dim` added to the diagonal.
pub fn cholesky_with_jitter(a: &DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    if let Some(c) = a.clone().cholesky() {
        return Some(c);
    }
    let n = a.nrows().max(1);
    let mut jitter = 1e-10 * a.trace().abs() / n as f64;
    if jitter == 0.0 {
        jitter = 1e-10;
    }
    let mut shifted = a.clone();
    for i in 0..a.nrows() {
        shifted[(i, i)] += jitter;
    }
    shifted.cholesky()
}

/// Singular values above `tol * sigma_max * max(rows, cols)`.
pub fn numerical_rank(a: &DMatrix<f64>, tol: f64) -> usize {
    if a.is_empty() {
        return 0;
    }
    let sv = a.clone().singular_values();
    let cutoff = tol * sv.max() * a.nrows().max(a.ncols()) as f64;
    sv.iter().filter(|&&s| s > cutoff).count()
}

/// Moore-Penrose pseudo-inverse; singular values below
/// `max_dim * eps * sigma_max` are treated as zero.
pub fn pseudo_inverse(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (rows, cols) = a.shape();
    if a.is_empty() {
        return DMatrix::zeros(cols, rows);
    }
    let svd = a.clone().svd(true, true);
    let sigma_max = svd.singular_values.max();
    let cutoff = rows.max(cols) as f64 * f64::EPSILON * sigma_max;
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let mut out = DMatrix::zeros(cols, rows);
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff {
            out += (v_t.row(i).transpose() * u.column(i).transpose()) / s;
        }
    }
    out
}
