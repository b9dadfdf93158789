//! Acceptance suite: one test per verification criterion, each printing a
//! pass/fail line with the measured quantities.
//!
//! Run with `cargo test -p wnll-cli --test acceptance -- --nocapture` to see
//! the lines as they complete; the whole suite is single-threaded-friendly
//! and sized for a small machine.

use std::path::PathBuf;
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use wnll::discrepancy::integral_consistency;
use wnll::experiment::{
    run_experiment, DeltaRule, ExperimentConfig, ExperimentMode, LabelRule, MuRule, RegionConfig,
    SolverConfig,
};
use wnll::geometry::{
    sample_labeled, sample_manifold, LabelFn, ManifoldSpec, RegionKind, RegionSpec, SamplingMode,
};
use wnll::graph::{assemble_affinity, check_s_connected, AssemblyOptions};
use wnll::kernels::{profile_by_id, rbar, validate_profile, Clause, DEFAULT_PROFILE_ID};
use wnll::rng::uniform01;
use wnll::solver::{assemble_wnll, solve, SolveMethod};
use wnll::stats::median;

fn report(criterion: &str, pass: bool, detail: &str, elapsed: f64) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("acceptance {criterion}: {verdict} ({detail}, {elapsed:.1}s)");
}

fn base_circle_config() -> ExperimentConfig {
    ExperimentConfig {
        mode: ExperimentMode::Convergence,
        manifold: ManifoldSpec::circle(1.0).unwrap(),
        region: RegionConfig {
            kind: RegionKind::Arc,
            center: vec![0.0],
            geodesic_radius: std::f64::consts::FRAC_PI_4,
        },
        label_fn: LabelFn::SinTheta,
        sampling: SamplingMode::QuasiUniform,
        label_rule: LabelRule::Count { m: 500 },
        n_ladder: vec![50_000],
        delta_rule: DeltaRule::FixedList {
            deltas: vec![0.4, 0.2, 0.1],
        },
        mu_rule: MuRule::DefaultRatio,
        mu_ladder: None,
        label_ladder: None,
        profile: Default::default(),
        seeds: vec![0],
        solver: SolverConfig {
            tol: 1e-9,
            max_iter: None,
            method: SolveMethod::Cg,
        },
        centers_per_dim: None,
        queries: None,
        output: None,
        edge_budget_mb: None,
        mu_condition_margin: 1.0,
        reference_resolution: None,
    }
}

/// Criterion 1: max-norm error against the closed-form reference decreases
/// monotonically in delta with log-log slope >= 0.8 on the quasi-uniform
/// cloud; the random-cloud variant reaches median slope >= 0.6 over 5 seeds.
#[test]
fn c1_convergence_rate() {
    let start = Instant::now();
    let config = base_circle_config();
    let quasi = run_experiment(&config).unwrap();
    assert!(quasi.rows.iter().all(|r| r.connected && r.converged));
    let errs: Vec<f64> = quasi.rows.iter().map(|r| r.err_max.unwrap()).collect();
    let monotone = errs.windows(2).all(|w| w[0] > w[1]);
    let quasi_slope = quasi
        .fits
        .iter()
        .find(|f| f.name == "err_max_vs_delta[median]")
        .unwrap()
        .fit
        .slope;

    let mut random = base_circle_config();
    random.sampling = SamplingMode::UniformRandom;
    random.n_ladder = vec![16_000];
    random.seeds = (0..5).collect();
    let random_report = run_experiment(&random).unwrap();
    assert!(random_report
        .rows
        .iter()
        .all(|r| r.connected && r.converged));
    let seed_slopes: Vec<f64> = random_report
        .fits
        .iter()
        .filter(|f| f.name.starts_with("err_max_vs_delta[seed="))
        .map(|f| f.fit.slope)
        .collect();
    assert_eq!(seed_slopes.len(), 5);
    let median_slope = median(&seed_slopes);

    let pass = monotone && quasi_slope >= 0.8 && median_slope >= 0.6;
    report(
        "c1 convergence-rate",
        pass,
        &format!(
            "errors {errs:.4?} monotone {monotone}, quasi slope {quasi_slope:.3} >= 0.8, \
             random median slope {median_slope:.3} >= 0.6; target < 120s"
        ),
        start.elapsed().as_secs_f64(),
    );
    assert!(monotone, "errors not monotone: {errs:?}");
    assert!(quasi_slope >= 0.8, "quasi slope {quasi_slope}");
    assert!(median_slope >= 0.6, "random median slope {median_slope}");
}

/// Criterion 2: on 50 seeded connected instances, nonnegative right-hand
/// sides give solutions >= -1e-9 and the interpolant stays within the label
/// range.
#[test]
fn c2_maximum_principle() {
    let start = Instant::now();
    let spec = ManifoldSpec::circle(1.0).unwrap();
    let region = RegionSpec::new(
        spec,
        RegionKind::Arc,
        vec![0.0],
        std::f64::consts::FRAC_PI_4,
    )
    .unwrap();
    let delta = 0.25;
    let profile = profile_by_id(DEFAULT_PROFILE_ID, delta, 1).unwrap();
    let tol = 1e-12;
    let mut worst_min = f64::INFINITY;
    let mut worst_range_excess = 0.0f64;
    for seed in 0..50u64 {
        let cloud = sample_manifold(&spec, 500, seed, SamplingMode::UniformRandom).unwrap();
        let labeled = sample_labeled(&region, 10, seed, &LabelFn::SinTheta).unwrap();
        let graph = Arc::new(
            assemble_affinity(&cloud, &labeled, &profile, AssemblyOptions::default()).unwrap(),
        );
        let connectivity = check_s_connected(&graph);
        assert!(connectivity.s_connected, "seed {seed} disconnected");
        let mu = cloud.len() as f64 / labeled.len() as f64;
        let system = assemble_wnll(&graph, &labeled, mu).unwrap();

        let rhs: Vec<f64> = (0..system.n())
            .map(|i| uniform01(seed, i as u64, 99))
            .collect();
        let (sol, stats) =
            solve(&system.with_rhs(rhs).unwrap(), SolveMethod::Cg, tol, 50_000).unwrap();
        assert!(stats.converged);
        worst_min = worst_min.min(sol.u.iter().cloned().fold(f64::INFINITY, f64::min));

        let (interp, stats) = solve(&system, SolveMethod::Cg, tol, 50_000).unwrap();
        assert!(stats.converged);
        let (bmin, bmax) = labeled
            .values()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        for u in &interp.u {
            worst_range_excess = worst_range_excess.max(bmin - u).max(u - bmax);
        }
    }
    let pass = worst_min >= -1e-9 && worst_range_excess <= 1e-9;
    report(
        "c2 maximum-principle",
        pass,
        &format!(
            "50 connected instances, min over nonneg-rhs solves {worst_min:.2e} >= -1e-9, \
             worst label-range excess {worst_range_excess:.2e} <= 1e-9"
        ),
        start.elapsed().as_secs_f64(),
    );
    assert!(worst_min >= -1e-9, "{worst_min}");
    assert!(worst_range_excess <= 1e-9, "{worst_range_excess}");
}

/// Criterion 3: with a 1% label rate on a spherical cap and mu = n/m, the
/// graph-Laplacian jump exceeds the WNLL jump by at least 2x on average, and
/// the weight condition holds with margin >= 1 in every seed.
///
/// The cap covers most of the sphere, so the 200 labels sit at the classic
/// scattered-label rate where the unweighted baseline visibly under-tracks
/// the data while the labeled region still covers `D_delta` densely enough
/// for the weight condition.
#[test]
fn c3_mu_scaling() {
    let start = Instant::now();
    let config = ExperimentConfig {
        mode: ExperimentMode::MuStudy,
        manifold: ManifoldSpec::sphere(1.0).unwrap(),
        region: RegionConfig {
            kind: RegionKind::Cap,
            center: vec![0.0, 0.0],
            geodesic_radius: std::f64::consts::PI - 0.35,
        },
        label_fn: LabelFn::coordinate(2),
        sampling: SamplingMode::UniformRandom,
        label_rule: LabelRule::Count { m: 200 },
        n_ladder: vec![20_000],
        delta_rule: DeltaRule::FixedList { deltas: vec![0.25] },
        mu_rule: MuRule::DefaultRatio,
        // n/m = 100 exactly.
        mu_ladder: Some(vec![100.0]),
        label_ladder: None,
        profile: Default::default(),
        seeds: (0..5).collect(),
        solver: SolverConfig {
            tol: 1e-10,
            max_iter: None,
            method: SolveMethod::Cg,
        },
        centers_per_dim: None,
        queries: None,
        output: None,
        edge_budget_mb: None,
        mu_condition_margin: 1.0,
        reference_resolution: None,
    };
    let result = run_experiment(&config).unwrap();
    assert_eq!(result.rows.len(), 5);
    let mut ratios = Vec::new();
    let mut min_margin = f64::INFINITY;
    for row in &result.rows {
        assert!(row.connected && row.converged, "seed {}", row.seed);
        assert!(row.mu_pass, "mu condition failed in seed {}", row.seed);
        min_margin = min_margin.min(row.mu_margin.unwrap());
        ratios.push(row.jump_gl.unwrap() / row.jump_wnll.unwrap());
    }
    let mean_ratio = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let pass = mean_ratio >= 2.0 && min_margin >= 1.0;
    report(
        "c3 mu-scaling",
        pass,
        &format!(
            "J_GL/J_WNLL mean {mean_ratio:.2} >= 2 (per-seed {ratios:.2?}), \
             min mu-condition margin {min_margin:.2} >= 1"
        ),
        start.elapsed().as_secs_f64(),
    );
    assert!(mean_ratio >= 2.0, "mean jump ratio {mean_ratio}");
    assert!(min_margin >= 1.0, "mu margin {min_margin}");
}

/// Two antipodal clusters with labels only near one of them; the gap exceeds
/// every kernel support.
fn two_cluster_files(dir: &std::path::Path) -> (PathBuf, PathBuf, f64) {
    let spec = ManifoldSpec::circle(1.0).unwrap();
    let delta = 0.05;
    let mut coords = Vec::new();
    for i in 0..10 {
        coords.extend(spec.embed(&[i as f64 * 0.01]));
    }
    for i in 0..10 {
        coords.extend(spec.embed(&[std::f64::consts::PI + i as f64 * 0.01]));
    }
    let cloud_path = dir.join("two_cluster_cloud.csv");
    wnll::io::save_points_csv(&cloud_path, &coords, 2).unwrap();
    let labels_path = dir.join("two_cluster_labels.csv");
    wnll::io::save_labeled_csv(&labels_path, &spec.embed(&[0.05]), &[1.0], 2).unwrap();
    (cloud_path, labels_path, delta)
}

/// Criterion 4: the two-cluster instance reports s_connected = false with
/// exactly the unlabeled cluster unreachable, and `--require-connected`
/// exits with code 3.
#[test]
fn c4_connectivity_failure_detection() {
    let start = Instant::now();
    let dir = std::env::temp_dir().join(format!("wnll_acceptance_{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let (cloud_path, labels_path, delta) = two_cluster_files(&dir);

    // Library-level report.
    let spec = ManifoldSpec::circle(1.0).unwrap();
    let profile = profile_by_id(DEFAULT_PROFILE_ID, delta, 1).unwrap();
    let (_, coords) = wnll::io::load_points_csv(&cloud_path).unwrap();
    let (_, label_coords, _values) = wnll::io::load_labeled_csv(&labels_path).unwrap();
    let graph = wnll::AffinityGraph::assemble_raw(
        coords,
        label_coords,
        2,
        profile,
        AssemblyOptions::default(),
    )
    .unwrap();
    let connectivity = check_s_connected(&graph);
    let expected: Vec<u32> = (10..20).collect();
    let library_ok = !connectivity.s_connected && connectivity.unreachable == expected;
    let _ = spec;

    // CLI exit code 3 under --require-connected.
    let status = Command::new(env!("CARGO_BIN_EXE_wnll"))
        .args([
            "check-connectivity",
            cloud_path.to_str().unwrap(),
            labels_path.to_str().unwrap(),
            "--delta",
            "0.05",
            "--require-connected",
        ])
        .output()
        .unwrap();
    let code = status.status.code();
    // Without the flag the same command succeeds.
    let status_ok = Command::new(env!("CARGO_BIN_EXE_wnll"))
        .args([
            "check-connectivity",
            cloud_path.to_str().unwrap(),
            labels_path.to_str().unwrap(),
            "--delta",
            "0.05",
        ])
        .output()
        .unwrap();
    let pass = library_ok && code == Some(3) && status_ok.status.code() == Some(0);
    report(
        "c4 connectivity-failure",
        pass,
        &format!(
            "unreachable set == unlabeled cluster {library_ok}, \
             --require-connected exit code {code:?} == 3"
        ),
        start.elapsed().as_secs_f64(),
    );
    std::fs::remove_dir_all(&dir).ok();
    assert!(library_ok, "unreachable {:?}", connectivity.unreachable);
    assert_eq!(code, Some(3));
    assert_eq!(status_ok.status.code(), Some(0));
}

/// Criterion 5: at fixed delta = 0.3 the median sup-discrepancy decays like
/// n^{-1/2} (exponent within [-0.65, -0.35]), and the envelope calibrated at
/// n = 1000 dominates the larger-n medians.
#[test]
fn c5_entropy_bound_scaling() {
    let start = Instant::now();
    let mut config = base_circle_config();
    config.mode = ExperimentMode::Discrepancy;
    config.sampling = SamplingMode::UniformRandom;
    config.n_ladder = vec![1000, 4000, 16_000];
    config.delta_rule = DeltaRule::FixedList { deltas: vec![0.3] };
    config.seeds = (0..10).collect();
    config.centers_per_dim = Some(512);
    let result = run_experiment(&config).unwrap();
    assert_eq!(result.discrepancy_rows.len(), 30);
    let exponent = result
        .fits
        .iter()
        .find(|f| f.name.starts_with("median_sup_gap_vs_n"))
        .unwrap()
        .fit
        .slope;
    let mut dominated = true;
    let mut med_summary = Vec::new();
    for &n in &[4000usize, 16_000] {
        let gaps: Vec<f64> = result
            .discrepancy_rows
            .iter()
            .filter(|r| r.n == n)
            .map(|r| r.sup_gap)
            .collect();
        let bound = result
            .discrepancy_rows
            .iter()
            .find(|r| r.n == n)
            .unwrap()
            .bound;
        let med = median(&gaps);
        med_summary.push((n, med, bound));
        dominated &= med <= bound;
    }
    let in_range = (-0.65..=-0.35).contains(&exponent);
    let pass = in_range && dominated;
    report(
        "c5 entropy-bound-scaling",
        pass,
        &format!(
            "fitted exponent {exponent:.3} in [-0.65, -0.35], calibrated envelope dominates \
             medians {med_summary:?}"
        ),
        start.elapsed().as_secs_f64(),
    );
    assert!(in_range, "exponent {exponent}");
    assert!(dominated, "envelope does not dominate: {med_summary:?}");
}

/// Criterion 6: the nonlocal integral approximation residual decays with
/// fitted order >= 0.9 on circle and Clifford torus, and vanishes to 1e-12
/// for constant data.
#[test]
fn c6_integral_consistency() {
    let start = Instant::now();
    let mut details = Vec::new();
    let mut orders = Vec::new();

    // Circle study via the runner.
    let mut circle = base_circle_config();
    circle.mode = ExperimentMode::Consistency;
    circle.n_ladder = vec![20_000];
    let circle_report = run_experiment(&circle).unwrap();
    let circle_order = circle_report
        .fits
        .iter()
        .find(|f| f.name.starts_with("residual_vs_delta"))
        .unwrap()
        .fit
        .slope;
    orders.push(circle_order);
    details.push(format!("circle order {circle_order:.2}"));

    // Clifford torus study.
    let torus_spec = ManifoldSpec::clifford_torus(1.0).unwrap();
    let mut torus = base_circle_config();
    torus.mode = ExperimentMode::Consistency;
    torus.manifold = torus_spec;
    torus.region = RegionConfig {
        kind: RegionKind::Band,
        center: vec![0.0],
        geodesic_radius: 0.5,
    };
    torus.n_ladder = vec![20_000];
    let torus_report = run_experiment(&torus).unwrap();
    let torus_order = torus_report
        .fits
        .iter()
        .find(|f| f.name.starts_with("residual_vs_delta"))
        .unwrap()
        .fit
        .slope;
    orders.push(torus_order);
    details.push(format!("torus order {torus_order:.2}"));

    // Constant data: residual at machine scale for every delta.
    let spec = ManifoldSpec::circle(1.0).unwrap();
    let cloud = sample_manifold(&spec, 20_000, 0, SamplingMode::QuasiUniform).unwrap();
    let region = RegionSpec::new(
        spec,
        RegionKind::Arc,
        vec![0.0],
        std::f64::consts::FRAC_PI_4,
    )
    .unwrap();
    let queries = spec.embed(&[std::f64::consts::PI]);
    let mut const_max = 0.0f64;
    for delta in [0.4, 0.2, 0.1] {
        let profile = profile_by_id(DEFAULT_PROFILE_ID, delta, 1).unwrap();
        let r = integral_consistency(
            &spec,
            &cloud,
            &profile,
            &LabelFn::constant(2.0),
            &queries,
            &region,
        )
        .unwrap();
        const_max = const_max.max(r.max_residual);
    }
    details.push(format!("const residual {const_max:.1e}"));

    let pass = orders.iter().all(|&o| o >= 0.9) && const_max <= 1e-12;
    report(
        "c6 integral-consistency",
        pass,
        &details.join(", "),
        start.elapsed().as_secs_f64(),
    );
    for o in orders {
        assert!(o >= 0.9, "order {o}");
    }
    assert!(const_max <= 1e-12, "{const_max}");
}

/// Criterion 7: CG agrees with the dense direct oracle to 1e-8 in max norm,
/// and index-based assembly equals the O(n^2) brute-force scan bitwise, on 20
/// seeded instances.
#[test]
fn c7_oracle_equivalence() {
    let start = Instant::now();
    let spec = ManifoldSpec::circle(1.0).unwrap();
    let region = RegionSpec::new(
        spec,
        RegionKind::Arc,
        vec![0.0],
        std::f64::consts::FRAC_PI_4,
    )
    .unwrap();
    let delta = 0.25;
    let profile = profile_by_id(DEFAULT_PROFILE_ID, delta, 1).unwrap();
    let mut worst_diff = 0.0f64;
    let mut all_bitwise = true;
    for seed in 0..20u64 {
        let cloud = sample_manifold(&spec, 450, seed, SamplingMode::UniformRandom).unwrap();
        let labeled = sample_labeled(&region, 12, seed, &LabelFn::SinTheta).unwrap();
        let graph = Arc::new(
            assemble_affinity(&cloud, &labeled, &profile, AssemblyOptions::default()).unwrap(),
        );

        // Bitwise edge comparison against the double loop.
        let mut got = Vec::new();
        graph.for_each_r_pair(|i, j, w| got.push((i as u32, j as u32, w.to_bits())));
        got.sort_unstable();
        let mut expected = Vec::new();
        for i in 0..cloud.len() {
            for j in i..cloud.len() {
                let dx: f64 = cloud
                    .point(i)
                    .iter()
                    .zip(cloud.point(j))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                let w = profile.eval_r_sq(dx);
                if w > 0.0 {
                    expected.push((i as u32, j as u32, w.to_bits()));
                }
            }
        }
        expected.sort_unstable();
        all_bitwise &= got == expected;

        let mu = cloud.len() as f64 / labeled.len() as f64;
        let system = assemble_wnll(&graph, &labeled, mu).unwrap();
        let (cg, stats) = solve(&system, SolveMethod::Cg, 1e-12, 50_000).unwrap();
        assert!(stats.converged);
        let (direct, _) = solve(&system, SolveMethod::Dense, 1e-12, 0).unwrap();
        let diff =
            cg.u.iter()
                .zip(&direct.u)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
        worst_diff = worst_diff.max(diff);
    }
    let pass = worst_diff <= 1e-8 && all_bitwise;
    report(
        "c7 oracle-equivalence",
        pass,
        &format!(
            "20 instances, max CG-dense difference {worst_diff:.2e} <= 1e-8, \
             edge sets bitwise equal {all_bitwise}"
        ),
        start.elapsed().as_secs_f64(),
    );
    assert!(worst_diff <= 1e-8, "{worst_diff}");
    assert!(all_bitwise);
}

/// Criterion 8: the default profile passes every assumption clause, each
/// counterexample fails exactly its intended clause, and the integrated-tail
/// closed form hits 1/3 and 0.0208333... to 1e-12.
#[test]
fn c8_kernel_validation() {
    let start = Instant::now();
    let default = profile_by_id(DEFAULT_PROFILE_ID, 0.2, 1).unwrap();
    let default_report = validate_profile(&default, 400);

    let intended = [
        ("gaussian_nonconforming", Clause::CompactSupport),
        ("linear_edge", Clause::Smoothness),
        ("k_degenerate_dip", Clause::Nondegeneracy),
    ];
    let mut exact = true;
    let mut summary = Vec::new();
    for (id, clause) in intended {
        let profile = profile_by_id(id, 0.2, 1).unwrap();
        let failed = validate_profile(&profile, 400).failed();
        let ok = failed == vec![clause];
        exact &= ok;
        summary.push(format!("{id} -> {failed:?}"));
    }

    let r0 = rbar(&default, 0.0).unwrap();
    let r_half = rbar(&default, 0.5).unwrap();
    let rbar_ok = (r0 - 1.0 / 3.0).abs() <= 1e-12 && (r_half - 0.020833333333333332).abs() <= 1e-12;

    let pass = default_report.pass && exact && rbar_ok;
    report(
        "c8 kernel-validation",
        pass,
        &format!(
            "default passes {}, counterexamples exact {} [{}], rbar(0) = {r0:.12}, \
             rbar(0.5) = {r_half:.12}",
            default_report.pass,
            exact,
            summary.join("; ")
        ),
        start.elapsed().as_secs_f64(),
    );
    assert!(default_report.pass);
    assert!(exact, "{summary:?}");
    assert!(rbar_ok, "rbar values {r0}, {r_half}");
}
