//! Assembly and solution of the weighted nonlocal Laplacian system.
//!
//! The unknowns live on the cloud `P`; the constraint `u = b` on `S` is
//! eliminated into the right-hand side, which keeps the system symmetric
//! positive definite (when S-connected and `mu > 0`) and CG-friendly:
//!
//! ```text
//! sum_{y in P} R_delta(x,y) (u(x) - u(y)) + mu sum_{y in S} K_delta(x,y) u(x)
//!     = mu sum_{y in S} K_delta(x,y) b(y),          x in P.
//! ```
//!
//! The graph-Laplacian baseline is the same assembly with the labeled terms
//! carrying weight 1 instead of `mu`.

pub mod cg;
pub mod dense;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{LabeledSet, PointCloud, RegionSpec};
use crate::graph::AffinityGraph;

pub use cg::SolveStats;
pub use dense::DENSE_MAX_N;

/// The assembled system over the unlabeled points.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    graph: Arc<AffinityGraph>,
    pub mu: f64,
    rhs: Vec<f64>,
    /// Matrix row `r` corresponds to cloud point `ordering[r]` (identity
    /// today; kept so exports and oracles never guess).
    pub ordering: Vec<u32>,
}

/// Solution values on `P`, aligned with the system ordering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub u: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    Cg,
    Dense,
}

/// Assemble the WNLL system with labeled-term weight `mu`.
pub fn assemble_wnll(
    graph: &Arc<AffinityGraph>,
    labeled: &LabeledSet,
    mu: f64,
) -> Result<LinearSystem> {
    if labeled.len() != graph.m() {
        return Err(Error::DimensionMismatch {
            expected: graph.m(),
            got: labeled.len(),
        });
    }
    assemble_wnll_values(graph, labeled.values(), mu)
}

/// [`assemble_wnll`] from bare label values (the CSV front-end path).
pub fn assemble_wnll_values(
    graph: &Arc<AffinityGraph>,
    b: &[f64],
    mu: f64,
) -> Result<LinearSystem> {
    if !(mu > 0.0) {
        return Err(Error::NonpositiveMu(mu));
    }
    if b.is_empty() {
        return Err(Error::EmptyLabeledSet);
    }
    if b.len() != graph.m() {
        return Err(Error::DimensionMismatch {
            expected: graph.m(),
            got: b.len(),
        });
    }
    let n = graph.n();
    let mut rhs = vec![0.0; n];
    for (i, r) in rhs.iter_mut().enumerate() {
        let (cols, ws) = graph.k_row(i);
        let mut acc = 0.0;
        for (c, w) in cols.iter().zip(ws) {
            acc += w * b[*c as usize];
        }
        *r = mu * acc;
    }
    Ok(LinearSystem {
        graph: Arc::clone(graph),
        mu,
        rhs,
        ordering: (0..n as u32).collect(),
    })
}

/// The unweighted graph-Laplacian baseline: identical to the WNLL assembly at
/// `mu = 1`.
pub fn assemble_graph_laplacian(
    graph: &Arc<AffinityGraph>,
    labeled: &LabeledSet,
) -> Result<LinearSystem> {
    assemble_wnll(graph, labeled, 1.0)
}

impl LinearSystem {
    pub fn n(&self) -> usize {
        self.rhs.len()
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn graph(&self) -> &AffinityGraph {
        &self.graph
    }

    /// Matrix-vector product through the graph (no materialized matrix).
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        self.graph.apply_system(self.mu, x, out);
    }

    pub fn diag(&self) -> Vec<f64> {
        self.graph.system_diag(self.mu)
    }

    /// Replace the right-hand side (used by the comparison-principle checks).
    pub fn with_rhs(&self, rhs: Vec<f64>) -> Result<LinearSystem> {
        if rhs.len() != self.rhs.len() {
            return Err(Error::DimensionMismatch {
                expected: self.rhs.len(),
                got: rhs.len(),
            });
        }
        Ok(LinearSystem {
            graph: Arc::clone(&self.graph),
            mu: self.mu,
            rhs,
            ordering: self.ordering.clone(),
        })
    }

    /// Materialize the dense matrix (row-major) for the direct oracle.
    pub fn to_dense(&self) -> Result<Vec<f64>> {
        let n = self.n();
        if n > DENSE_MAX_N {
            return Err(Error::DenseSizeExceeded {
                n,
                max: DENSE_MAX_N,
            });
        }
        let mut a = vec![0.0; n * n];
        self.graph.for_each_r_pair(|i, j, w| {
            if i != j {
                a[i * n + j] -= w;
                a[j * n + i] -= w;
                a[i * n + i] += w;
                a[j * n + j] += w;
            }
        });
        let d_k = self.graph.d_k();
        for i in 0..n {
            a[i * n + i] += self.mu * d_k[i];
        }
        Ok(a)
    }
}

/// Solve the system by preconditioned CG or by the dense direct oracle.
///
/// CG non-convergence is reported through the stats, not as an error; the
/// dense path fails loudly on singular systems.
pub fn solve(
    system: &LinearSystem,
    method: SolveMethod,
    tol: f64,
    max_iter: usize,
) -> Result<(Solution, SolveStats)> {
    match method {
        SolveMethod::Cg => {
            let diag = system.diag();
            let (u, stats) = cg::pcg(
                |x, out| system.apply(x, out),
                &diag,
                &system.rhs,
                None,
                tol,
                max_iter,
            );
            Ok((Solution { u }, stats))
        }
        SolveMethod::Dense => {
            let start = std::time::Instant::now();
            let a = system.to_dense()?;
            let u = dense::solve_dense(&a, &system.rhs)?;
            let n = system.n();
            let mut residual = vec![0.0; n];
            system.apply(&u, &mut residual);
            let mut num = 0.0;
            let mut den = 0.0;
            for i in 0..n {
                let r = residual[i] - system.rhs[i];
                num += r * r;
                den += system.rhs[i] * system.rhs[i];
            }
            let final_residual = if den > 0.0 { (num / den).sqrt() } else { 0.0 };
            Ok((
                Solution { u },
                SolveStats {
                    iterations: 0,
                    final_residual,
                    converged: true,
                    wall_time: start.elapsed().as_secs_f64(),
                },
            ))
        }
    }
}

/// Apply `L_{delta,n}` to values defined on `P u S` (cloud values first). The
/// operator reads only the cloud entries; labeled values enter the equations
/// through the right-hand side, not the operator.
pub fn apply_operator(graph: &AffinityGraph, mu: f64, u: &[f64]) -> Result<Vec<f64>> {
    let n = graph.n();
    let m = graph.m();
    if u.len() != n + m {
        return Err(Error::DimensionMismatch {
            expected: n + m,
            got: u.len(),
        });
    }
    let mut out = vec![0.0; n];
    graph.apply_system(mu, &u[..n], &mut out);
    Ok(out)
}

/// The scaling weight `mu = |P| / |S|`.
pub fn default_mu(cloud: &PointCloud, labeled: &LabeledSet) -> Result<f64> {
    if labeled.is_empty() {
        return Err(Error::EmptyLabeledSet);
    }
    Ok(cloud.len() as f64 / labeled.len() as f64)
}

/// The weight making the system match the Euler-Lagrange equations of the
/// weighted energy exactly: `(|P|/|S| + 2) / 2`.
pub fn el_equivalent_mu(cloud: &PointCloud, labeled: &LabeledSet) -> Result<f64> {
    Ok((default_mu(cloud, labeled)? + 2.0) / 2.0)
}

/// Outcome of the weight condition `mu d_K(x) >= c d_R(x)` on `P` within
/// distance `2 delta` of the labeled region.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionReport {
    pub mu: f64,
    pub c_margin: f64,
    /// Minimum of `mu d_K / d_R` over the checked points.
    pub min_ratio: Option<f64>,
    /// Cloud index attaining the minimum.
    pub argmin: Option<usize>,
    /// Number of cloud points inside `D_delta`.
    pub checked_count: usize,
    /// Points of `D_delta` with no labeled coverage at all (`d_K = 0`).
    pub uncovered_count: usize,
    /// No cloud point lies in `D_delta`; reported as a pass with this flag.
    pub vacuous: bool,
    pub pass: bool,
}

/// Check the weight condition over `P` intersected with the `2 delta`
/// neighborhood of the region (geodesic distance).
pub fn check_mu_condition(
    graph: &AffinityGraph,
    region: &RegionSpec,
    delta: f64,
    mu: f64,
    c_margin: f64,
) -> Result<ConditionReport> {
    if region.manifold.ambient_dim() != graph.dim() {
        return Err(Error::DimensionMismatch {
            expected: graph.dim(),
            got: region.manifold.ambient_dim(),
        });
    }
    let mut min_ratio: Option<f64> = None;
    let mut argmin = None;
    let mut checked = 0usize;
    let mut uncovered = 0usize;
    let d_r = graph.d_r();
    let d_k = graph.d_k();
    for i in 0..graph.n() {
        let dist = region.geodesic_distance(graph.point_p(i))?;
        if dist <= 2.0 * delta {
            checked += 1;
            if d_k[i] == 0.0 {
                uncovered += 1;
            }
            let ratio = mu * d_k[i] / d_r[i];
            if min_ratio.map_or(true, |m| ratio < m) {
                min_ratio = Some(ratio);
                argmin = Some(i);
            }
        }
    }
    let vacuous = checked == 0;
    let pass = vacuous || min_ratio.unwrap() >= c_margin;
    Ok(ConditionReport {
        mu,
        c_margin,
        min_ratio,
        argmin,
        checked_count: checked,
        uncovered_count: uncovered,
        vacuous,
        pass,
    })
}
