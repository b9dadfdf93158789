//! Quadrature over the manifolds, the empirical sup-discrepancy of the kernel
//! family, the entropy-style theoretical envelope, and the nonlocal integral
//! consistency check
//!
//! ```text
//! (1/(n d^2)) sum_y R_d(x,y)(u(x) - u(y))  ~  -(1/|M|) int Rbar_d(x,y) Lap u(y) dy
//! ```
//!
//! for query points away from the labeled region.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::labels::laplace_beltrami_reference;
use crate::geometry::{
    point_about_axis, LabelFn, ManifoldKind, ManifoldSpec, PointCloud, RegionSpec, MEMBERSHIP_TOL,
};
use crate::graph::index::dist2;
use crate::graph::NeighborIndex;
use crate::kernels::KernelProfile;
use crate::quad::{adaptive_simpson, gauss_legendre};
use crate::stats::{loglog_fit, LineFit};

use std::f64::consts::PI;

const QUAD_TOL: f64 = 1e-10;

/// Normalized integral `(1/|M|) int_M f` by composite parametric quadrature,
/// refined (doubling) until the change drops below 1e-10. Trapezoid sums on
/// periodic directions, Gauss-Legendre across the sphere's polar direction.
pub fn quadrature_integral<F: Fn(&[f64]) -> f64 + Sync>(
    spec: &ManifoldSpec,
    integrand: F,
    resolution: usize,
) -> Result<f64> {
    if resolution < 64 {
        return Err(Error::Config(format!(
            "quadrature resolution must be at least 64, got {resolution}"
        )));
    }
    let evaluate = |res: usize| -> f64 {
        match spec.kind {
            ManifoldKind::Circle => {
                (0..res)
                    .into_par_iter()
                    .map(|i| integrand(&spec.embed(&[2.0 * PI * i as f64 / res as f64])))
                    .sum::<f64>()
                    / res as f64
            }
            ManifoldKind::Sphere => {
                // Area measure splits as dz x dphi on [-1,1] x [0,2pi).
                let (nodes, weights) = gauss_legendre(res);
                let rows: Vec<f64> = nodes
                    .par_iter()
                    .zip(&weights)
                    .map(|(z, w)| {
                        let colat = z.clamp(-1.0, 1.0).acos();
                        let mean_phi = (0..res)
                            .map(|i| {
                                integrand(&spec.embed(&[colat, 2.0 * PI * i as f64 / res as f64]))
                            })
                            .sum::<f64>()
                            / res as f64;
                        w * mean_phi
                    })
                    .collect();
                rows.iter().sum::<f64>() / 2.0
            }
            ManifoldKind::CliffordTorus => {
                let rows: Vec<f64> = (0..res)
                    .into_par_iter()
                    .map(|i| {
                        let t = 2.0 * PI * i as f64 / res as f64;
                        (0..res)
                            .map(|j| integrand(&spec.embed(&[t, 2.0 * PI * j as f64 / res as f64])))
                            .sum::<f64>()
                    })
                    .collect();
                rows.iter().sum::<f64>() / (res * res) as f64
            }
        }
    };
    let max_resolution = match spec.kind {
        ManifoldKind::Circle => 1 << 22,
        _ => 8192,
    };
    let mut res = resolution;
    let mut value = evaluate(res);
    while res * 2 <= max_resolution {
        res *= 2;
        let next = evaluate(res);
        let change = (next - value).abs();
        value = next;
        if change < QUAD_TOL {
            return Ok(value);
        }
    }
    Err(Error::QuadratureNonConvergence {
        tol: QUAD_TOL,
        max_resolution,
    })
}

/// `(1/|M|) int_M R_delta(x, y) dy`, independent of `x` by homogeneity.
/// Radial reduction with the integration range split at the support edge.
pub fn kernel_mean(spec: &ManifoldSpec, profile: &KernelProfile) -> Result<f64> {
    let r = spec.scale;
    let delta = profile.delta;
    match spec.kind {
        ManifoldKind::Circle => {
            let s_max = 2.0 * (delta / r).min(1.0).asin();
            let f = |s: f64| {
                let c = 2.0 * r * (s / 2.0).sin();
                profile.eval_r_sq(c * c)
            };
            Ok(adaptive_simpson(&f, 0.0, s_max, 1e-13) / PI)
        }
        ManifoldKind::Sphere => {
            let g_max = 2.0 * (delta / r).min(1.0).asin();
            let f = |g: f64| {
                let c = 2.0 * r * (g / 2.0).sin();
                profile.eval_r_sq(c * c) * g.sin()
            };
            Ok(adaptive_simpson(&f, 0.0, g_max, 1e-13) / 2.0)
        }
        ManifoldKind::CliffordTorus => {
            let a = spec.torus_factor_radius();
            let u_max = 2.0 * (delta / a).min(1.0).asin();
            let outer = |u: f64| {
                let su = (u / 2.0).sin();
                let inner = |v: f64| {
                    let sv = (v / 2.0).sin();
                    profile.eval_r_sq(4.0 * a * a * (su * su + sv * sv))
                };
                adaptive_simpson(&inner, -u_max, u_max, 1e-14)
            };
            Ok(adaptive_simpson(&outer, -u_max, u_max, 1e-13) / (4.0 * PI * PI))
        }
    }
}

/// Sup over centers of `|I(R_delta(x, .)) - I_n(R_delta(x, .))|`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscrepancyResult {
    pub sup_gap: f64,
    pub argmax_center: Vec<f64>,
    pub n: usize,
    pub delta: f64,
    pub center_count: usize,
}

/// Evaluate the empirical discrepancy of the kernel family over a fixed
/// center set: `I` by quadrature, `I_n` as the cloud average.
pub fn empirical_discrepancy(
    spec: &ManifoldSpec,
    cloud: &PointCloud,
    profile: &KernelProfile,
    centers: &[f64],
) -> Result<DiscrepancyResult> {
    let d = spec.ambient_dim();
    if centers.is_empty() || centers.len() % d != 0 {
        return Err(Error::EmptyPointList);
    }
    for c in centers.chunks_exact(d) {
        if spec.constraint_residual(c) > MEMBERSHIP_TOL * spec.scale {
            return Err(Error::OffManifold {
                residual: spec.constraint_residual(c),
                tol: MEMBERSHIP_TOL * spec.scale,
            });
        }
    }
    let i_value = kernel_mean(spec, profile)?;
    let support = profile.r_support_distance();
    let index = NeighborIndex::build(cloud.coords(), d, support)?;
    let n = cloud.len();
    let gaps: Vec<f64> = centers
        .par_chunks_exact(d)
        .map(|c| {
            let mut sum = 0.0;
            index.for_each_within(c, support, |_, d2| {
                sum += profile.eval_r_sq(d2);
            });
            (i_value - sum / n as f64).abs()
        })
        .collect();
    let (argmax, sup_gap) =
        gaps.iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
                if v > bv {
                    (i, v)
                } else {
                    (bi, bv)
                }
            });
    Ok(DiscrepancyResult {
        sup_gap,
        argmax_center: centers[argmax * d..(argmax + 1) * d].to_vec(),
        n,
        delta: profile.delta,
        center_count: centers.len() / d,
    })
}

/// The entropy-style envelope `c delta^{-k} n^{-1/2} (ln n - 2 ln delta + 1)^{1/2}`.
///
/// `n` is real-valued so calibrated envelopes can be evaluated continuously.
pub fn theoretical_bound(n: f64, delta: f64, k: usize, c: f64) -> Result<f64> {
    if !(n >= 2.0) {
        return Err(Error::Config(format!("bound needs n >= 2, got {n}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Config(format!(
            "bound needs delta in (0, 1), got {delta}"
        )));
    }
    if !(c >= 0.0) {
        return Err(Error::Config(format!("bound needs c >= 0, got {c}")));
    }
    let log_term = (n.ln() - 2.0 * delta.ln() + 1.0).sqrt();
    Ok(c * delta.powi(-(k as i32)) / n.sqrt() * log_term)
}

/// Per-query residuals of the nonlocal integral approximation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub n: usize,
    pub delta: f64,
    pub residuals: Vec<f64>,
    pub max_residual: f64,
}

/// Residual of `(1/(n delta^2)) sum_y R_delta(x,y)(u(x) - u(y))
/// + (1/|M|) int Rbar_delta(x,y) Lap u(y) dy` at each query. Queries must
/// stay at geodesic distance greater than `2 delta` from the region so every
/// boundary term vanishes.
pub fn integral_consistency(
    spec: &ManifoldSpec,
    cloud: &PointCloud,
    profile: &KernelProfile,
    label_fn: &LabelFn,
    queries: &[f64],
    region: &RegionSpec,
) -> Result<ConsistencyReport> {
    let d = spec.ambient_dim();
    let delta = profile.delta;
    let n = cloud.len();
    for q in queries.chunks_exact(d) {
        let dist = region.geodesic_distance(q)?;
        if dist <= 2.0 * delta {
            return Err(Error::QueryTooCloseToRegion {
                dist,
                required: 2.0 * delta,
            });
        }
    }
    if !label_fn.has_laplacian(spec) {
        return Err(Error::LabelFn(
            format!("{label_fn:?}"),
            "no registered second derivatives".into(),
        ));
    }
    let u_cloud: Vec<f64> = cloud
        .iter_points()
        .map(|p| label_fn.eval(spec, p))
        .collect::<Result<_>>()?;
    let support = profile.r_support_distance();
    let index = NeighborIndex::build(cloud.coords(), d, support)?;

    let mut residuals = Vec::with_capacity(queries.len() / d);
    for q in queries.chunks_exact(d) {
        let u_q = label_fn.eval(spec, q)?;
        let mut sum = 0.0;
        index.for_each_within(q, support, |j, d2| {
            sum += profile.eval_r_sq(d2) * (u_q - u_cloud[j as usize]);
        });
        let lhs = sum / (n as f64 * delta * delta);
        let rhs = rbar_laplacian_mean(spec, profile, label_fn, q)?;
        residuals.push((lhs + rhs).abs());
    }
    let max_residual = residuals.iter().cloned().fold(0.0, f64::max);
    Ok(ConsistencyReport {
        n,
        delta,
        residuals,
        max_residual,
    })
}

/// `(1/|M|) int_M Rbar_delta(x, y) Lap_M u(y) dy` by adaptive quadrature over
/// the kernel support around `x`.
fn rbar_laplacian_mean(
    spec: &ManifoldSpec,
    profile: &KernelProfile,
    label_fn: &LabelFn,
    x: &[f64],
) -> Result<f64> {
    let delta = profile.delta;
    match spec.kind {
        ManifoldKind::Circle => {
            let r = spec.scale;
            let theta = x[1].atan2(x[0]);
            let s_max = 2.0 * (delta / r).min(1.0).asin();
            let f = |s: f64| {
                let y = spec.embed(&[theta + s]);
                let c2 = dist2(x, &y);
                if c2 >= 4.0 * delta * delta {
                    return 0.0;
                }
                profile.eval_rbar_sq(c2)
                    * laplace_beltrami_reference(spec, label_fn, &y).unwrap_or(0.0)
            };
            Ok(adaptive_simpson(&f, -s_max, s_max, 1e-13) / (2.0 * PI))
        }
        ManifoldKind::Sphere => {
            let r = spec.scale;
            let axis = [x[0] / r, x[1] / r, x[2] / r];
            let g_max = 2.0 * (delta / r).min(1.0).asin();
            let beta_steps = 512;
            let f = |g: f64| {
                let mut y = [0.0; 3];
                let mut acc = 0.0;
                for b in 0..beta_steps {
                    let beta = 2.0 * PI * b as f64 / beta_steps as f64;
                    point_about_axis(r, &axis, g, beta, &mut y);
                    acc += laplace_beltrami_reference(spec, label_fn, &y).unwrap_or(0.0);
                }
                let c = 2.0 * r * (g / 2.0).sin();
                profile.eval_rbar_sq(c * c) * g.sin() * acc / beta_steps as f64
            };
            Ok(adaptive_simpson(&f, 0.0, g_max, 1e-12) / 2.0)
        }
        ManifoldKind::CliffordTorus => {
            let a = spec.torus_factor_radius();
            let theta = x[1].atan2(x[0]);
            let phi = x[3].atan2(x[2]);
            let u_max = 2.0 * (delta / a).min(1.0).asin();
            let outer = |du: f64| {
                let su = (du / 2.0).sin();
                let inner = |dv: f64| {
                    let sv = (dv / 2.0).sin();
                    let c2 = 4.0 * a * a * (su * su + sv * sv);
                    if c2 >= 4.0 * delta * delta {
                        return 0.0;
                    }
                    let y = spec.embed(&[theta + du, phi + dv]);
                    profile.eval_rbar_sq(c2)
                        * laplace_beltrami_reference(spec, label_fn, &y).unwrap_or(0.0)
                };
                adaptive_simpson(&inner, -u_max, u_max, 1e-14)
            };
            Ok(adaptive_simpson(&outer, -u_max, u_max, 1e-13) / (4.0 * PI * PI))
        }
    }
}

/// Residual study over a bandwidth ladder with a shared query set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConsistencyStudy {
    pub reports: Vec<ConsistencyReport>,
    /// Log-log fit of max residual against delta; `None` when residuals
    /// vanish (constant data).
    pub fitted_order: Option<LineFit>,
}

pub fn consistency_study(
    spec: &ManifoldSpec,
    cloud: &PointCloud,
    profile: &KernelProfile,
    deltas: &[f64],
    label_fn: &LabelFn,
    queries: &[f64],
    region: &RegionSpec,
) -> Result<ConsistencyStudy> {
    let mut reports = Vec::new();
    for &delta in deltas {
        let p = profile.with_delta(delta)?;
        reports.push(integral_consistency(
            spec, cloud, &p, label_fn, queries, region,
        )?);
    }
    let xs: Vec<f64> = reports.iter().map(|r| r.delta).collect();
    let ys: Vec<f64> = reports.iter().map(|r| r.max_residual).collect();
    let fitted_order = if ys.iter().all(|&y| y > 0.0) && xs.len() >= 2 {
        Some(loglog_fit(&xs, &ys)?)
    } else {
        None
    };
    Ok(ConsistencyStudy {
        reports,
        fitted_order,
    })
}
