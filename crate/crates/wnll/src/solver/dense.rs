//! Dense Cholesky, the direct oracle for small systems.

use crate::error::{Error, Result};

pub const DENSE_MAX_N: usize = 2000;

/// Solve `A x = b` for a symmetric positive definite `A` (row-major, n x n)
/// by Cholesky factorization. Rank deficiency surfaces as a nonpositive
/// pivot.
pub fn solve_dense(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    if a.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            got: a.len(),
        });
    }
    if n > DENSE_MAX_N {
        return Err(Error::DenseSizeExceeded {
            n,
            max: DENSE_MAX_N,
        });
    }
    // Factor A = L L^T in place on a copy.
    let mut l = a.to_vec();
    for j in 0..n {
        let mut d = l[j * n + j];
        for k in 0..j {
            let v = l[j * n + k];
            d -= v * v;
        }
        if !(d > 0.0) {
            return Err(Error::SingularFactor { row: j });
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = l[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    // Forward then backward substitution.
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[i * n + k] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            y[i] -= l[k * n + i] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    Ok(y)
}
