use std::sync::Arc;
use std::time::Instant;
use wnll::geometry::{sample_labeled, sample_manifold, LabelFn, SamplingMode};
use wnll::graph::{assemble_affinity, check_s_connected, AssemblyOptions};
use wnll::kernels::{profile_by_id, DEFAULT_PROFILE_ID};
use wnll::solver::{assemble_wnll, check_mu_condition, solve, SolveMethod};
use wnll::{ManifoldSpec, RegionKind, RegionSpec};

fn main() {
    let delta: f64 = std::env::args().nth(1).unwrap().parse().unwrap();
    let n: usize = std::env::args().nth(2).unwrap().parse().unwrap();
    let spec = ManifoldSpec::circle(1.0).unwrap();
    let t = Instant::now();
    let cloud = sample_manifold(&spec, n, 0, SamplingMode::QuasiUniform).unwrap();
    eprintln!("sample: {:.2}s", t.elapsed().as_secs_f64());
    let region = RegionSpec::new(
        spec,
        RegionKind::Arc,
        vec![0.0],
        std::f64::consts::FRAC_PI_4,
    )
    .unwrap();
    let labeled = sample_labeled(&region, 500, 0, &LabelFn::SinTheta).unwrap();
    let profile = profile_by_id(DEFAULT_PROFILE_ID, delta, 1).unwrap();
    let t = Instant::now();
    let graph = Arc::new(
        assemble_affinity(&cloud, &labeled, &profile, AssemblyOptions::default()).unwrap(),
    );
    eprintln!(
        "assemble: {:.2}s (pairs {}, weights stored {})",
        t.elapsed().as_secs_f64(),
        graph.r_pair_count(),
        graph.weights_stored()
    );
    let t = Instant::now();
    let conn = check_s_connected(&graph);
    eprintln!(
        "bfs: {:.2}s (connected {})",
        t.elapsed().as_secs_f64(),
        conn.s_connected
    );
    let t = Instant::now();
    let cond = check_mu_condition(&graph, &region, delta, 100.0, 1.0).unwrap();
    eprintln!(
        "mu cond: {:.2}s (margin {:?})",
        t.elapsed().as_secs_f64(),
        cond.min_ratio
    );
    let system = assemble_wnll(&graph, &labeled, 100.0).unwrap();
    let t = Instant::now();
    let (sol, stats) = solve(&system, SolveMethod::Cg, 1e-9, 10 * n).unwrap();
    eprintln!(
        "cg: {:.2}s ({} iters, conv {})",
        t.elapsed().as_secs_f64(),
        stats.iterations,
        stats.converged
    );
    let t = Instant::now();
    let reference = wnll::geometry::reference::reference_harmonic_solution(
        &region,
        &LabelFn::SinTheta,
        cloud.coords(),
        512,
    )
    .unwrap();
    let err = sol
        .u
        .iter()
        .zip(&reference)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    eprintln!(
        "reference+err: {:.2}s (err_max {err:.4})",
        t.elapsed().as_secs_f64()
    );
}
