//! Reference solutions of the harmonic extension problem: `Delta_M u = 0` on
//! `M \ D`, `u = b` on `D`.
//!
//! * circle: exact closed form (linear in arclength across the complement of
//!   the arc),
//! * sphere with axisymmetric data: 1-D finite-difference ODE in the angle
//!   from the cap axis, bounded at the far pole,
//! * Clifford torus: 2-D periodic finite-difference solve, refined (with
//!   Richardson extrapolation of the second-order scheme) until successive
//!   answers differ by less than 1e-6 at the queries.

use std::f64::consts::PI;

use super::labels::LabelFn;
use super::{angular_distance, ManifoldKind, RegionSpec, MEMBERSHIP_TOL};
use crate::error::{Error, Result};
use crate::solver::cg::pcg;

/// Evaluate the harmonic-extension reference at `queries` (flat ambient
/// coordinates). `resolution` seeds the finite-difference oracles; the circle
/// path is closed-form and ignores it.
pub fn reference_harmonic_solution(
    region: &RegionSpec,
    label_fn: &LabelFn,
    queries: &[f64],
    resolution: usize,
) -> Result<Vec<f64>> {
    let spec = region.manifold;
    let d = spec.ambient_dim();
    if queries.len() % d != 0 {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: queries.len() % d,
        });
    }
    for q in queries.chunks_exact(d) {
        if spec.constraint_residual(q) > MEMBERSHIP_TOL * spec.scale {
            return Err(Error::OffManifold {
                residual: spec.constraint_residual(q),
                tol: MEMBERSHIP_TOL * spec.scale,
            });
        }
    }
    match spec.kind {
        ManifoldKind::Circle => circle_reference(region, label_fn, queries),
        ManifoldKind::Sphere => sphere_reference(region, label_fn, queries, resolution.max(64)),
        ManifoldKind::CliffordTorus => {
            torus_reference(region, label_fn, queries, resolution.max(32))
        }
    }
}

// --- circle: closed form -----------------------------------------------------

fn circle_reference(region: &RegionSpec, label_fn: &LabelFn, queries: &[f64]) -> Result<Vec<f64>> {
    let spec = region.manifold;
    let rho = region.angular_radius();
    let center = region.center[0];
    // The complement of the arc runs from center + rho around to
    // center - rho; u'' = 0 there means u is linear in the angle.
    let theta_a = center + rho;
    let len = 2.0 * PI - 2.0 * rho;
    let b_a = label_fn.eval(&spec, &spec.embed(&[theta_a]))?;
    let b_b = label_fn.eval(&spec, &spec.embed(&[center - rho]))?;
    let mut out = Vec::with_capacity(queries.len() / 2);
    for q in queries.chunks_exact(2) {
        let theta = q[1].atan2(q[0]);
        if angular_distance(theta, center) <= rho + 1e-15 {
            out.push(label_fn.eval(&spec, q)?);
        } else {
            let along = (theta - theta_a).rem_euclid(2.0 * PI);
            out.push(b_a + along / len * (b_b - b_a));
        }
    }
    Ok(out)
}

// --- sphere: axisymmetric 1-D ODE ---------------------------------------------

/// `b` as a function of the angle from the cap axis, when the data is
/// axisymmetric about that axis.
fn axial_profile(region: &RegionSpec, label_fn: &LabelFn) -> Result<Box<dyn Fn(f64) -> f64>> {
    let r = region.manifold.scale;
    match label_fn {
        LabelFn::Const(c) => {
            let c = *c;
            Ok(Box::new(move |_| c))
        }
        LabelFn::Coordinate(2) => {
            // z = r cos(colatitude); axisymmetric only about the z axis.
            let colat = region.center[0];
            if angular_distance(colat, 0.0) < 1e-12 {
                Ok(Box::new(move |gamma: f64| r * gamma.cos()))
            } else if angular_distance(colat, PI) < 1e-12 {
                Ok(Box::new(move |gamma: f64| -r * gamma.cos()))
            } else {
                Err(Error::NonAxisymmetric(
                    "coord:2 data needs the cap centered at a pole".into(),
                ))
            }
        }
        LabelFn::Offset { base, offset } => {
            let inner = axial_profile(region, base)?;
            let offset = *offset;
            Ok(Box::new(move |g| inner(g) + offset))
        }
        other => Err(Error::NonAxisymmetric(format!(
            "label function {other:?} is not axisymmetric about the cap axis"
        ))),
    }
}

fn sphere_reference(
    region: &RegionSpec,
    label_fn: &LabelFn,
    queries: &[f64],
    resolution: usize,
) -> Result<Vec<f64>> {
    let spec = region.manifold;
    let profile = axial_profile(region, label_fn)?;
    let rho = region.angular_radius();
    let u_grid = sphere_solve_raw(rho, &profile, resolution);

    let c = spec.embed(&region.center);
    let r2 = spec.scale * spec.scale;
    let h = (PI - rho) / resolution as f64;
    let mut out = Vec::with_capacity(queries.len() / 3);
    for q in queries.chunks_exact(3) {
        let dot = (q[0] * c[0] + q[1] * c[1] + q[2] * c[2]) / r2;
        let gamma = dot.clamp(-1.0, 1.0).acos();
        if gamma <= rho + 1e-15 {
            out.push(label_fn.eval(&spec, q)?);
        } else {
            let s = ((gamma - rho) / h).min(resolution as f64 - 1e-9);
            let j = s.floor() as usize;
            let frac = s - j as f64;
            out.push(u_grid[j] * (1.0 - frac) + u_grid[j + 1] * frac);
        }
    }
    Ok(out)
}

/// Flux-form discretization of `(sin g u')' = 0` on `[rho, pi]` with
/// `u(rho) = b(rho)` and the bounded-at-pole closure `u'(pi) = 0`.
fn sphere_solve_raw(rho: f64, profile: &dyn Fn(f64) -> f64, intervals: usize) -> Vec<f64> {
    let j = intervals;
    let h = (PI - rho) / j as f64;
    let gamma = |i: usize| rho + i as f64 * h;
    // Tridiagonal system for u_1..u_J; u_0 is Dirichlet.
    let mut sub = vec![0.0; j];
    let mut diag = vec![0.0; j];
    let mut sup = vec![0.0; j];
    let mut rhs = vec![0.0; j];
    let u0 = profile(rho);
    for row in 0..j {
        let i = row + 1;
        if i < j {
            let s_minus = (gamma(i) - 0.5 * h).sin();
            let s_plus = (gamma(i) + 0.5 * h).sin();
            sub[row] = s_minus;
            sup[row] = s_plus;
            diag[row] = -(s_minus + s_plus);
            if i == 1 {
                rhs[row] = -s_minus * u0;
                sub[row] = 0.0;
            }
        } else {
            // Pole: symmetry closure.
            sub[row] = -1.0;
            diag[row] = 1.0;
        }
    }
    // Thomas algorithm.
    for row in 1..j {
        let w = sub[row] / diag[row - 1];
        diag[row] -= w * sup[row - 1];
        rhs[row] -= w * rhs[row - 1];
    }
    let mut u = vec![0.0; j + 1];
    u[0] = u0;
    u[j] = rhs[j - 1] / diag[j - 1];
    for row in (0..j - 1).rev() {
        u[row + 1] = (rhs[row] - sup[row] * u[row + 2]) / diag[row];
    }
    u
}

// --- Clifford torus: 2-D periodic finite differences ---------------------------

fn torus_reference(
    region: &RegionSpec,
    label_fn: &LabelFn,
    queries: &[f64],
    resolution: usize,
) -> Result<Vec<f64>> {
    const TOL: f64 = 1e-6;
    const MAX_N: usize = 4096;
    let mut n = resolution.max(32);
    let coarse = torus_solve_raw(region, label_fn, queries, n)?;
    let mut fine = torus_solve_raw(region, label_fn, queries, 2 * n)?;
    let mut extrap: Vec<f64> = coarse
        .iter()
        .zip(&fine)
        .map(|(c, f)| (4.0 * f - c) / 3.0)
        .collect();
    loop {
        n *= 2;
        if 2 * n > MAX_N {
            return Err(Error::OracleNonConvergence(format!(
                "torus reference still changing at grid {n}"
            )));
        }
        let finer = torus_solve_raw(region, label_fn, queries, 2 * n)?;
        let next: Vec<f64> = fine
            .iter()
            .zip(&finer)
            .map(|(c, f)| (4.0 * f - c) / 3.0)
            .collect();
        let change = extrap
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if change < TOL {
            return Ok(next);
        }
        fine = finer;
        extrap = next;
    }
}

/// One second-order periodic solve on an `n x n` grid aligned with the band
/// edge, evaluated at the queries by bilinear interpolation.
pub(crate) fn torus_solve_raw(
    region: &RegionSpec,
    label_fn: &LabelFn,
    queries: &[f64],
    n: usize,
) -> Result<Vec<f64>> {
    let spec = region.manifold;
    let rho = region.angular_radius();
    let theta0 = region.center[0];
    let h = 2.0 * PI / n as f64;
    // Start the theta grid on the lower band edge so the Dirichlet boundary
    // sits on grid lines whenever 2 rho is a multiple of h.
    let theta_start = theta0 - rho;

    let node_point = |i: usize, j: usize| -> Vec<f64> {
        spec.embed(&[theta_start + i as f64 * h, j as f64 * h])
    };
    let in_band =
        |i: usize| -> bool { angular_distance(theta_start + i as f64 * h, theta0) <= rho + 1e-12 };

    // Index the unknowns (nodes outside the band).
    let mut index = vec![usize::MAX; n * n];
    let mut unknowns = Vec::new();
    let mut boundary_value = vec![0.0; n * n];
    for i in 0..n {
        let banded = in_band(i);
        for j in 0..n {
            let id = i * n + j;
            if banded {
                boundary_value[id] = label_fn.eval(&spec, &node_point(i, j))?;
            } else {
                index[id] = unknowns.len();
                unknowns.push(id);
            }
        }
    }
    let m = unknowns.len();
    let neighbor_ids = |id: usize| -> [usize; 4] {
        let (i, j) = (id / n, id % n);
        [
            ((i + 1) % n) * n + j,
            ((i + n - 1) % n) * n + j,
            i * n + (j + 1) % n,
            i * n + (j + n - 1) % n,
        ]
    };
    // rhs collects boundary contributions of the 5-point Laplacian.
    let mut rhs = vec![0.0; m];
    for (row, &id) in unknowns.iter().enumerate() {
        for nb in neighbor_ids(id) {
            if index[nb] == usize::MAX {
                rhs[row] += boundary_value[nb];
            }
        }
    }
    let apply = |x: &[f64], y: &mut [f64]| {
        for (row, &id) in unknowns.iter().enumerate() {
            let mut acc = 4.0 * x[row];
            for nb in neighbor_ids(id) {
                let col = index[nb];
                if col != usize::MAX {
                    acc -= x[col];
                }
            }
            y[row] = acc;
        }
    };
    let diag = vec![4.0; m];
    let (u, stats) = pcg(apply, &diag, &rhs, None, 1e-11, 40 * n);
    if !stats.converged {
        return Err(Error::OracleNonConvergence(format!(
            "torus grid solve stalled at residual {:e}",
            stats.final_residual
        )));
    }

    // Full grid of values for interpolation.
    let mut grid = boundary_value;
    for (row, &id) in unknowns.iter().enumerate() {
        grid[id] = u[row];
    }
    // Bicubic (Catmull-Rom) keeps the interpolation error far below the
    // scheme's O(h^2), so Richardson extrapolation over resolutions stays
    // clean. Queries inside the band evaluate b directly.
    let mut out = Vec::with_capacity(queries.len() / 4);
    for q in queries.chunks_exact(4) {
        let theta = q[1].atan2(q[0]);
        if angular_distance(theta, theta0) <= rho + 1e-15 {
            out.push(label_fn.eval(&spec, q)?);
            continue;
        }
        let phi = q[3].atan2(q[2]);
        let gi = ((theta - theta_start).rem_euclid(2.0 * PI)) / h;
        let gj = phi.rem_euclid(2.0 * PI) / h;
        let i0 = gi.floor() as isize;
        let j0 = gj.floor() as isize;
        let fi = gi - gi.floor();
        let fj = gj - gj.floor();
        let wrap = |v: isize| -> usize { v.rem_euclid(n as isize) as usize };
        let mut rows = [0.0; 4];
        for (r, row) in rows.iter_mut().enumerate() {
            let i = wrap(i0 + r as isize - 1);
            let p: [f64; 4] = std::array::from_fn(|c| grid[i * n + wrap(j0 + c as isize - 1)]);
            *row = catmull_rom(&p, fj);
        }
        out.push(catmull_rom(&rows, fi));
    }
    Ok(out)
}

fn catmull_rom(p: &[f64; 4], t: f64) -> f64 {
    0.5 * (2.0 * p[1]
        + t * ((p[2] - p[0])
            + t * ((2.0 * p[0] - 5.0 * p[1] + 4.0 * p[2] - p[3])
                + t * (3.0 * (p[1] - p[2]) + p[3] - p[0]))))
}
