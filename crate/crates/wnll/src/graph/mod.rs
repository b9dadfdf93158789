//! Sparse affinity structure between the point cloud `P` and the labeled set
//! `S`.
//!
//! `R`-weights connect `P` to `P` (the only pairs any operation consumes) and
//! are stored once per unordered pair, row-major with `j >= i`; consumers see
//! both orientations through the pair iterators, so symmetry holds by
//! construction. `K`-weights connect every point of `P u S` to `S`.
//!
//! Dense bandwidths can make the edge list enormous (hundreds of millions of
//! pairs), so weight storage is budgeted: when column indices plus weights
//! exceed the budget, only the indices are kept and weights are re-evaluated
//! from the kernel on the fly. Enumeration order is identical either way, so
//! every downstream result is bit-for-bit independent of the storage mode.

pub mod connectivity;
pub mod index;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{LabeledSet, PointCloud};
use crate::kernels::{validate_profile, KernelProfile};

pub use connectivity::{check_s_connected, ConnectivityReport};
pub use index::NeighborIndex;

use index::dist2;

/// Controls the half-edge storage budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssemblyOptions {
    /// Budget in bytes for stored `R` columns plus weights. Weights are
    /// dropped (and re-evaluated on demand) when they do not fit; exceeding
    /// the budget with the indices alone is an error.
    pub edge_budget_bytes: usize,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self {
            // 2 GiB accommodates ~170M stored pairs with weights.
            edge_budget_bytes: 2 << 30,
        }
    }
}

#[derive(Debug)]
pub struct AffinityGraph {
    pub profile: KernelProfile,
    dim: usize,
    points_p: Vec<f64>,
    points_s: Vec<f64>,
    index_p: NeighborIndex,
    index_s: NeighborIndex,
    // Half adjacency over P: row i lists j >= i, self pair included.
    r_row_ptr: Vec<usize>,
    r_cols: Vec<u32>,
    r_weights: Option<Vec<f64>>,
    // K edges: rows over P then S, columns into S.
    k_row_ptr: Vec<usize>,
    k_cols: Vec<u32>,
    k_weights: Vec<f64>,
    d_r: Vec<f64>,
    d_k: Vec<f64>,
}

/// Build the affinity graph for a sampled cloud and labeled set, checking the
/// kernel assumptions and scale preconditions first.
pub fn assemble_affinity(
    cloud: &PointCloud,
    labeled: &LabeledSet,
    profile: &KernelProfile,
    options: AssemblyOptions,
) -> Result<AffinityGraph> {
    let report = validate_profile(profile, 200);
    if !report.pass {
        return Err(Error::InvalidProfile(format!(
            "profile `{}` fails assumption clauses {:?}",
            profile.id,
            report.failed()
        )));
    }
    if profile.delta >= cloud.spec.scale {
        return Err(Error::Config(format!(
            "bandwidth {} must be smaller than the manifold scale {}",
            profile.delta, cloud.spec.scale
        )));
    }
    if profile.intrinsic_dim != cloud.spec.intrinsic_dim() {
        return Err(Error::Config(format!(
            "profile intrinsic dimension {} does not match the manifold ({})",
            profile.intrinsic_dim,
            cloud.spec.intrinsic_dim()
        )));
    }
    if labeled.region.manifold != cloud.spec {
        return Err(Error::Config(
            "labeled set and cloud live on different manifolds".into(),
        ));
    }
    AffinityGraph::assemble_raw(
        cloud.coords().to_vec(),
        labeled.coords().to_vec(),
        cloud.dim(),
        profile.clone(),
        options,
    )
}

impl AffinityGraph {
    /// Assemble from raw coordinate arrays (no manifold-level checks); the
    /// entry point for CSV-loaded data.
    pub fn assemble_raw(
        points_p: Vec<f64>,
        points_s: Vec<f64>,
        dim: usize,
        profile: KernelProfile,
        options: AssemblyOptions,
    ) -> Result<AffinityGraph> {
        if points_p.is_empty() || points_p.len() % dim != 0 {
            return Err(Error::EmptyPointList);
        }
        if points_s.is_empty() || points_s.len() % dim != 0 {
            return Err(Error::EmptyLabeledSet);
        }
        let n = points_p.len() / dim;
        let m = points_s.len() / dim;
        let r_support = profile.r_support_distance();
        let k_support = profile.k_support_distance();
        // Half-radius cells tighten the candidate window around the query
        // ball; queries at any radius stay exact.
        let index_p = NeighborIndex::build(&points_p, dim, 0.5 * r_support)?;
        let index_s = NeighborIndex::build(&points_s, dim, k_support)?;

        // Pass 1: count surviving half pairs per row (support test only; the
        // predicate is exactly `weight > 0`).
        let mut r_row_ptr = vec![0usize; n + 1];
        for i in 0..n {
            let mut count = 0usize;
            index_p.for_each_within_ge(i, r_support, |_, d2| {
                if profile.r_positive(d2) {
                    count += 1;
                }
            });
            r_row_ptr[i + 1] = count;
        }
        for i in 0..n {
            r_row_ptr[i + 1] += r_row_ptr[i];
        }
        let pairs = r_row_ptr[n];
        let cols_bytes = pairs * std::mem::size_of::<u32>();
        let weight_bytes = pairs * std::mem::size_of::<f64>();
        if cols_bytes > options.edge_budget_bytes {
            return Err(Error::GraphTooLarge {
                needed: cols_bytes,
                budget: options.edge_budget_bytes,
            });
        }
        let store_weights = cols_bytes + weight_bytes <= options.edge_budget_bytes;

        // Pass 2: fill columns (and weights when they fit) and accumulate the
        // degree sums in the same deterministic order.
        let mut r_cols = vec![0u32; pairs];
        let mut r_weights = if store_weights {
            Some(vec![0.0f64; pairs])
        } else {
            None
        };
        let mut d_r = vec![0.0f64; n];
        {
            let mut cursor = 0usize;
            for i in 0..n {
                index_p.for_each_within_ge(i, r_support, |j, d2| {
                    let w = profile.eval_r_sq(d2);
                    if w > 0.0 {
                        r_cols[cursor] = j;
                        if let Some(ws) = r_weights.as_mut() {
                            ws[cursor] = w;
                        }
                        cursor += 1;
                        d_r[i] += w;
                        if j as usize != i {
                            d_r[j as usize] += w;
                        }
                    }
                });
                debug_assert_eq!(cursor, r_row_ptr[i + 1]);
            }
        }

        // K edges, rows over P then S.
        let mut k_row_ptr = vec![0usize; n + m + 1];
        let mut k_cols = Vec::new();
        let mut k_weights = Vec::new();
        let mut d_k = vec![0.0f64; n + m];
        for row in 0..(n + m) {
            let x = if row < n {
                &points_p[row * dim..(row + 1) * dim]
            } else {
                let s = row - n;
                &points_s[s * dim..(s + 1) * dim]
            };
            index_s.for_each_within(x, k_support, |j, d2| {
                let w = profile.eval_k_sq(d2);
                if w > 0.0 {
                    k_cols.push(j);
                    k_weights.push(w);
                    d_k[row] += w;
                }
            });
            k_row_ptr[row + 1] = k_cols.len();
        }

        Ok(AffinityGraph {
            profile,
            dim,
            points_p,
            points_s,
            index_p,
            index_s,
            r_row_ptr,
            r_cols,
            r_weights,
            k_row_ptr,
            k_cols,
            k_weights,
            d_r,
            d_k,
        })
    }

    pub fn n(&self) -> usize {
        self.d_r.len()
    }

    pub fn m(&self) -> usize {
        self.points_s.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point_p(&self, i: usize) -> &[f64] {
        &self.points_p[i * self.dim..(i + 1) * self.dim]
    }

    pub fn point_s(&self, j: usize) -> &[f64] {
        &self.points_s[j * self.dim..(j + 1) * self.dim]
    }

    pub fn index_p(&self) -> &NeighborIndex {
        &self.index_p
    }

    pub fn index_s(&self) -> &NeighborIndex {
        &self.index_s
    }

    /// Per-point sums `sum_{y in P} R_delta(x, y)` (self term included).
    pub fn d_r(&self) -> &[f64] {
        &self.d_r
    }

    /// Per-point sums `sum_{y in S} K_delta(x, y)` over `P` then `S` rows.
    pub fn d_k(&self) -> &[f64] {
        &self.d_k
    }

    pub fn weights_stored(&self) -> bool {
        self.r_weights.is_some()
    }

    pub fn r_pair_count(&self) -> usize {
        self.r_cols.len()
    }

    pub fn k_edge_count(&self) -> usize {
        self.k_cols.len()
    }

    /// Visit every stored half pair `(i, j >= i, weight)` in deterministic
    /// order, re-evaluating weights when they are not stored.
    pub fn for_each_r_pair<F: FnMut(usize, usize, f64)>(&self, mut f: F) {
        let n = self.n();
        match &self.r_weights {
            Some(ws) => {
                for i in 0..n {
                    for e in self.r_row_ptr[i]..self.r_row_ptr[i + 1] {
                        f(i, self.r_cols[e] as usize, ws[e]);
                    }
                }
            }
            None => {
                for i in 0..n {
                    let xi = self.point_p(i);
                    for e in self.r_row_ptr[i]..self.r_row_ptr[i + 1] {
                        let j = self.r_cols[e] as usize;
                        let w = self.profile.eval_r_sq(dist2(xi, self.point_p(j)));
                        f(i, j, w);
                    }
                }
            }
        }
    }

    /// `out[i] = sum_{y in P} R_delta(x_i, y) (x[i] - x[y])`, accumulated
    /// symmetrically over the stored half pairs.
    pub fn apply_r_difference(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n();
        assert_eq!(x.len(), n);
        assert_eq!(out.len(), n);
        out.fill(0.0);
        match &self.r_weights {
            Some(ws) => {
                for i in 0..n {
                    let xi = x[i];
                    let mut acc = 0.0;
                    for e in self.r_row_ptr[i]..self.r_row_ptr[i + 1] {
                        let j = self.r_cols[e] as usize;
                        if j == i {
                            continue;
                        }
                        let d = ws[e] * (xi - x[j]);
                        acc += d;
                        out[j] -= d;
                    }
                    out[i] += acc;
                }
            }
            None => {
                if let Some((u_scale, amp)) = self.profile.r_fast_wendland() {
                    match self.dim {
                        2 => return self.stream_diff::<2>(u_scale, amp, x, out),
                        3 => return self.stream_diff::<3>(u_scale, amp, x, out),
                        4 => return self.stream_diff::<4>(u_scale, amp, x, out),
                        _ => {}
                    }
                }
                for i in 0..n {
                    let xi = x[i];
                    let pi = self.point_p(i);
                    let mut acc = 0.0;
                    for e in self.r_row_ptr[i]..self.r_row_ptr[i + 1] {
                        let j = self.r_cols[e] as usize;
                        if j == i {
                            continue;
                        }
                        let w = self.profile.eval_r_sq(dist2(pi, self.point_p(j)));
                        let d = w * (xi - x[j]);
                        acc += d;
                        out[j] -= d;
                    }
                    out[i] += acc;
                }
            }
        }
    }

    /// Streaming difference matvec specialized over the ambient dimension;
    /// weights come from the same scaled-Wendland evaluation as everywhere
    /// else, so results match the stored-weight mode bit for bit.
    fn stream_diff<const D: usize>(&self, u_scale: f64, amp: f64, x: &[f64], out: &mut [f64]) {
        let coords = &self.points_p[..];
        for i in 0..self.n() {
            let xi = x[i];
            let pi: &[f64; D] = coords[i * D..(i + 1) * D].try_into().unwrap();
            let mut acc = 0.0;
            for e in self.r_row_ptr[i]..self.r_row_ptr[i + 1] {
                let j = self.r_cols[e] as usize;
                if j == i {
                    continue;
                }
                let pj: &[f64; D] = coords[j * D..(j + 1) * D].try_into().unwrap();
                let mut d2 = 0.0;
                for k in 0..D {
                    let dd = pi[k] - pj[k];
                    d2 += dd * dd;
                }
                let w = crate::kernels::wendland_scaled(u_scale, amp, d2);
                let d = w * (xi - x[j]);
                acc += d;
                out[j] -= d;
            }
            out[i] += acc;
        }
    }

    /// Apply the operator `L_{delta,n}`: the `R` difference term plus
    /// `mu * d_K(x) * x` on each unlabeled point.
    pub fn apply_system(&self, mu: f64, x: &[f64], out: &mut [f64]) {
        self.apply_r_difference(x, out);
        for i in 0..self.n() {
            out[i] += mu * self.d_k[i] * x[i];
        }
    }

    /// Diagonal of the system matrix: `d_R(i) - R_delta(x_i, x_i) + mu d_K(i)`.
    pub fn system_diag(&self, mu: f64) -> Vec<f64> {
        let self_w = self.profile.eval_r_sq(0.0);
        (0..self.n())
            .map(|i| self.d_r[i] - self_w + mu * self.d_k[i])
            .collect()
    }

    /// `K` columns and weights for a row (`0..n` = cloud, `n..n+m` = labels).
    pub fn k_row(&self, row: usize) -> (&[u32], &[f64]) {
        let lo = self.k_row_ptr[row];
        let hi = self.k_row_ptr[row + 1];
        (&self.k_cols[lo..hi], &self.k_weights[lo..hi])
    }

    /// Nearest unlabeled point to labeled point `s` within `radius`.
    pub fn nearest_unlabeled(&self, s: usize, radius: f64) -> Option<(usize, f64)> {
        let x = self.point_s(s);
        let mut best: Option<(usize, f64)> = None;
        self.index_p.for_each_within(x, radius, |j, d2| {
            if best.map_or(true, |(_, b)| d2 < b) {
                best = Some((j as usize, d2));
            }
        });
        best.map(|(j, d2)| (j, d2.sqrt()))
    }

    pub fn stats(&self) -> GraphStats {
        let n = self.n();
        let mut degree = vec![0u32; n];
        for i in 0..n {
            for e in self.r_row_ptr[i]..self.r_row_ptr[i + 1] {
                let j = self.r_cols[e] as usize;
                degree[i] += 1;
                if j != i {
                    degree[j] += 1;
                }
            }
        }
        let self_pairs = (0..n)
            .filter(|&i| {
                (self.r_row_ptr[i]..self.r_row_ptr[i + 1]).any(|e| self.r_cols[e] as usize == i)
            })
            .count();
        let min = *degree.iter().min().unwrap_or(&0);
        let max = *degree.iter().max().unwrap_or(&0);
        let mean = degree.iter().map(|&d| d as f64).sum::<f64>() / n as f64;
        let buckets = 16usize;
        let mut histogram = vec![0usize; buckets];
        let span = (max.saturating_sub(min)).max(1) as f64;
        for &d in &degree {
            let b = (((d - min) as f64 / span) * buckets as f64) as usize;
            histogram[b.min(buckets - 1)] += 1;
        }
        GraphStats {
            n,
            m: self.m(),
            r_stored_pairs: self.r_pair_count(),
            r_directed_edges: 2 * self.r_pair_count() - self_pairs,
            k_edges: self.k_edge_count(),
            weights_stored: self.weights_stored(),
            r_degree_min: min,
            r_degree_max: max,
            r_degree_mean: mean,
            r_degree_histogram: histogram,
        }
    }
}

/// Summary statistics for CLI reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphStats {
    pub n: usize,
    pub m: usize,
    pub r_stored_pairs: usize,
    pub r_directed_edges: usize,
    pub k_edges: usize,
    pub weights_stored: bool,
    pub r_degree_min: u32,
    pub r_degree_max: u32,
    pub r_degree_mean: f64,
    pub r_degree_histogram: Vec<usize>,
}
