//! Jacobi-preconditioned conjugate gradient on a matrix-free operator.

use std::time::Instant;

use serde::{Deserialize, Serialize};

/// Outcome of an iterative or direct solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    /// Relative residual `||Ax - b|| / ||b||` at exit.
    pub final_residual: f64,
    pub converged: bool,
    pub wall_time: f64,
}

/// Preconditioned CG for a symmetric positive definite operator.
///
/// `apply` computes `y = A x`; `diag` is the matrix diagonal used as the
/// Jacobi preconditioner. Iterates until the relative residual drops below
/// `tol` or `max_iter` is reached; a nonpositive diagonal or an indefinite
/// direction reports non-convergence instead of panicking.
pub fn pcg<F: Fn(&[f64], &mut [f64])>(
    apply: F,
    diag: &[f64],
    rhs: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> (Vec<f64>, SolveStats) {
    let start = Instant::now();
    let n = rhs.len();
    let mut x = match x0 {
        Some(x0) => x0.to_vec(),
        None => vec![0.0; n],
    };
    let b_norm = norm(rhs);
    if b_norm == 0.0 {
        return (
            vec![0.0; n],
            SolveStats {
                iterations: 0,
                final_residual: 0.0,
                converged: true,
                wall_time: start.elapsed().as_secs_f64(),
            },
        );
    }
    if diag.iter().any(|&d| !(d > 0.0)) {
        return (
            x,
            SolveStats {
                iterations: 0,
                final_residual: f64::INFINITY,
                converged: false,
                wall_time: start.elapsed().as_secs_f64(),
            },
        );
    }

    let mut r = vec![0.0; n];
    apply(&x, &mut r);
    for i in 0..n {
        r[i] = rhs[i] - r[i];
    }
    let mut z: Vec<f64> = r.iter().zip(diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut rz: f64 = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut residual = norm(&r) / b_norm;
    let mut iterations = 0;

    while residual > tol && iterations < max_iter {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) || !pap.is_finite() {
            // Indefinite or singular direction; bail out honestly.
            return (
                x,
                SolveStats {
                    iterations,
                    final_residual: residual,
                    converged: false,
                    wall_time: start.elapsed().as_secs_f64(),
                },
            );
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        iterations += 1;
        residual = norm(&r) / b_norm;
        if residual <= tol {
            break;
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }

    (
        x,
        SolveStats {
            iterations,
            final_residual: residual,
            converged: residual <= tol,
            wall_time: start.elapsed().as_secs_f64(),
        },
    )
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
