//! Weighted nonlocal Laplacian (WNLL) interpolation on manifold point clouds.
//!
//! Given a cloud `P` sampling a closed manifold and labeled values `b` on a
//! set `S` sampling a region `D`, the WNLL interpolant solves
//!
//! ```text
//! sum_{y in P} R_delta(x,y)(u(x) - u(y))
//!   + mu sum_{y in S} K_delta(x,y)(u(x) - b(y)) = 0,   x in P,
//! ```
//!
//! with compactly supported kernels `R_delta`, `K_delta` and labeled-term
//! weight `mu ~ |P|/|S|`. The crate provides:
//!
//! * [`geometry`] — circle/sphere/Clifford-torus manifolds, uniform samplers,
//!   geodesics, and analytic reference solutions,
//! * [`kernels`] — kernel profiles, assumption validation, the integrated
//!   tail `Rbar`,
//! * [`graph`] — fixed-radius neighbor search, sparse affinity assembly,
//!   S-connectivity,
//! * [`solver`] — system assembly, preconditioned CG with a dense direct
//!   oracle, the weight condition check,
//! * [`discrepancy`] — manifold quadrature, empirical sup-discrepancy and its
//!   theoretical envelope, nonlocal integral consistency,
//! * [`experiment`] — config-driven studies producing plot-ready CSV rows and
//!   fitted slopes,
//! * [`io`] — CSV and JSON formats with exact decimal round-trips.

// Comparisons are written `!(x > 0.0)` on purpose where NaN must be rejected
// along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod discrepancy;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod graph;
pub mod io;
pub mod kernels;
pub mod rng;
pub mod solver;
pub mod stats;

mod quad;

pub use error::{Error, Result};
pub use experiment::{run_experiment, ExperimentConfig, ExperimentMode, Report};
pub use geometry::{
    geodesic_distance_to_region, sample_labeled, sample_manifold, LabelFn, LabeledSet,
    ManifoldKind, ManifoldSpec, PointCloud, RegionKind, RegionSpec, SamplingMode,
};
pub use graph::{
    assemble_affinity, check_s_connected, AffinityGraph, AssemblyOptions, ConnectivityReport,
    GraphStats, NeighborIndex,
};
pub use kernels::{
    eval_scaled, profile_by_id, rbar, validate_profile, KernelKind, KernelProfile, RadialProfile,
    ValidationReport,
};
pub use solver::{
    apply_operator, assemble_graph_laplacian, assemble_wnll, check_mu_condition, default_mu,
    el_equivalent_mu, solve, ConditionReport, LinearSystem, Solution, SolveMethod, SolveStats,
};
