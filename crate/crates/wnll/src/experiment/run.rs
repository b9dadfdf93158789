//! The experiment runner: sample, assemble, check, solve, compare, fit.

use std::sync::Arc;
use std::time::Instant;

use super::report::{ConsistencyRow, DiscrepancyRow, NamedFit, Report, RunRow};
use super::{ExperimentConfig, ExperimentMode, LabelRule};
use crate::discrepancy::{consistency_study, empirical_discrepancy, theoretical_bound};
use crate::error::{Error, Result};
use crate::geometry::reference::reference_harmonic_solution;
use crate::geometry::{
    sample_labeled, sample_manifold, LabeledSet, PointCloud, RegionSpec, SamplingMode,
};
use crate::graph::{assemble_affinity, check_s_connected, AffinityGraph};
use crate::kernels::KernelProfile;
use crate::solver::{assemble_wnll, check_mu_condition, solve, Solution};
use crate::stats::{loglog_fit, median};

/// Execute the configured study and collect its report. Runs execute
/// sequentially in config order, which both fixes the row order and bounds
/// peak memory on large instances.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Report> {
    config.validate()?;
    let start = Instant::now();
    let mut report = match config.mode {
        ExperimentMode::Convergence | ExperimentMode::MuStudy | ExperimentMode::LabelRate => {
            run_solve_modes(config)?
        }
        ExperimentMode::Discrepancy => run_discrepancy(config)?,
        ExperimentMode::Consistency => run_consistency(config)?,
    };
    report.total_wall_time = start.elapsed().as_secs_f64();
    if let Some(prefix) = &config.output {
        report.write(prefix)?;
    }
    Ok(report)
}

fn empty_report(config: &ExperimentConfig) -> Report {
    Report {
        config: config.clone(),
        rows: Vec::new(),
        discrepancy_rows: Vec::new(),
        consistency_rows: Vec::new(),
        fits: Vec::new(),
        c_star: None,
        jump_ratio_mean: None,
        total_wall_time: 0.0,
    }
}

struct RunInputs<'a> {
    config: &'a ExperimentConfig,
    region: &'a RegionSpec,
    cloud: &'a PointCloud,
    labeled: &'a LabeledSet,
    delta: f64,
    mu: f64,
    with_gl: bool,
}

fn run_solve_modes(config: &ExperimentConfig) -> Result<Report> {
    let region = config.region.resolve(config.manifold)?;
    let k = config.manifold.intrinsic_dim();
    let with_gl = matches!(
        config.mode,
        ExperimentMode::MuStudy | ExperimentMode::LabelRate
    );
    let mut report = empty_report(config);

    for &seed in &config.seeds {
        for &n in &config.n_ladder {
            let cloud = sample_manifold(&config.manifold, n, seed, config.sampling)?;
            for delta in config.delta_rule.resolve(n, k) {
                let label_rules: Vec<LabelRule> = match config.mode {
                    ExperimentMode::LabelRate => config.label_ladder.clone().unwrap(),
                    _ => vec![config.label_rule],
                };
                for rule in label_rules {
                    let m = rule.resolve(n);
                    let labeled = sample_labeled(&region, m, seed, &config.label_fn)?;
                    let mus: Vec<f64> = match config.mode {
                        ExperimentMode::MuStudy => config.mu_ladder.clone().unwrap(),
                        _ => vec![config.mu_rule.resolve(n, m)],
                    };
                    for mu in mus {
                        let inputs = RunInputs {
                            config,
                            region: &region,
                            cloud: &cloud,
                            labeled: &labeled,
                            delta,
                            mu,
                            with_gl,
                        };
                        report.rows.push(run_single(&inputs, seed)?);
                    }
                }
            }
        }
    }
    attach_solve_fits(config, &mut report)?;
    Ok(report)
}

fn run_single(inputs: &RunInputs<'_>, seed: u64) -> Result<RunRow> {
    let config = inputs.config;
    let cloud = inputs.cloud;
    let labeled = inputs.labeled;
    let n = cloud.len();
    let m = labeled.len();
    let delta = inputs.delta;
    let mu = inputs.mu;
    let k = config.manifold.intrinsic_dim();
    let profile: KernelProfile = config.profile.resolve(delta, k)?;
    let graph = Arc::new(assemble_affinity(
        cloud,
        labeled,
        &profile,
        config.assembly_options(),
    )?);
    let connectivity = check_s_connected(&graph);
    let condition =
        check_mu_condition(&graph, inputs.region, delta, mu, config.mu_condition_margin)?;

    let mut row = RunRow {
        seed,
        n,
        m,
        delta,
        mu,
        connected: connectivity.s_connected,
        unreachable: connectivity.unreachable.len(),
        mu_margin: condition.min_ratio,
        mu_pass: condition.pass,
        mu_vacuous: condition.vacuous,
        err_max: None,
        err_l2: None,
        jump_wnll: None,
        jump_gl: None,
        iterations: 0,
        final_residual: None,
        converged: false,
    };
    // Disconnected instances and nonpositive weights are recorded, not
    // solved.
    if !connectivity.s_connected || !(mu > 0.0) {
        return Ok(row);
    }

    let tol = config.solver.tol;
    let max_iter = config.solver.max_iter.unwrap_or(10 * n);
    let system = assemble_wnll(&graph, labeled, mu)?;
    let (solution, stats) = solve(&system, config.solver.method, tol, max_iter)?;
    row.iterations = stats.iterations;
    row.final_residual = Some(stats.final_residual);
    row.converged = stats.converged;
    if !stats.converged {
        return Ok(row);
    }

    let resolution = config.reference_resolution.unwrap_or(512);
    let reference =
        reference_harmonic_solution(inputs.region, &config.label_fn, cloud.coords(), resolution)?;
    let mut err_max = 0.0f64;
    let mut err_sq = 0.0f64;
    for (u, r) in solution.u.iter().zip(&reference) {
        let e = (u - r).abs();
        err_max = err_max.max(e);
        err_sq += e * e;
    }
    row.err_max = Some(err_max);
    row.err_l2 = Some((err_sq / n as f64).sqrt());
    row.jump_wnll = Some(jump_metric(&graph, labeled, &solution));

    if inputs.with_gl {
        let gl = assemble_wnll(&graph, labeled, 1.0)?;
        let (gl_solution, gl_stats) = solve(&gl, config.solver.method, tol, max_iter)?;
        if gl_stats.converged {
            row.jump_gl = Some(jump_metric(&graph, labeled, &gl_solution));
        }
    }
    Ok(row)
}

/// Label-adjacency jump: the largest gap between a label value and the solved
/// value at its nearest unlabeled neighbor within the `K` support. Zero when
/// no labeled point has an unlabeled neighbor in range.
fn jump_metric(graph: &AffinityGraph, labeled: &LabeledSet, solution: &Solution) -> f64 {
    let radius = graph.profile.k_support_distance();
    let mut worst = 0.0f64;
    for s in 0..labeled.len() {
        if let Some((x_star, _)) = graph.nearest_unlabeled(s, radius) {
            worst = worst.max((solution.u[x_star] - labeled.values()[s]).abs());
        }
    }
    worst
}

fn attach_solve_fits(config: &ExperimentConfig, report: &mut Report) -> Result<()> {
    if config.mode == ExperimentMode::Convergence {
        // Per-seed slope of err_max against delta, plus a median fit.
        for &seed in &config.seeds {
            let pairs: Vec<(f64, f64)> = report
                .rows
                .iter()
                .filter(|r| r.seed == seed)
                .filter_map(|r| r.err_max.map(|e| (r.delta, e)))
                .filter(|(_, e)| *e > 0.0)
                .collect();
            if pairs.len() >= 2 {
                let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
                let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
                report.fits.push(NamedFit {
                    name: format!("err_max_vs_delta[seed={seed}]"),
                    fit: loglog_fit(&xs, &ys)?,
                });
            }
        }
        let mut deltas: Vec<f64> = report.rows.iter().map(|r| r.delta).collect();
        deltas.sort_by(f64::total_cmp);
        deltas.dedup();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for &d in &deltas {
            let errs: Vec<f64> = report
                .rows
                .iter()
                .filter(|r| r.delta == d)
                .filter_map(|r| r.err_max)
                .collect();
            if !errs.is_empty() {
                xs.push(d);
                ys.push(median(&errs));
            }
        }
        if xs.len() >= 2 && ys.iter().all(|&y| y > 0.0) {
            report.fits.push(NamedFit {
                name: "err_max_vs_delta[median]".into(),
                fit: loglog_fit(&xs, &ys)?,
            });
        }
    }
    let ratios: Vec<f64> = report
        .rows
        .iter()
        .filter_map(|r| match (r.jump_gl, r.jump_wnll) {
            (Some(g), Some(w)) if w > 0.0 => Some(g / w),
            _ => None,
        })
        .collect();
    if !ratios.is_empty() {
        report.jump_ratio_mean = Some(ratios.iter().sum::<f64>() / ratios.len() as f64);
    }
    Ok(())
}

fn run_discrepancy(config: &ExperimentConfig) -> Result<Report> {
    let k = config.manifold.intrinsic_dim();
    let centers_n = config.centers_per_dim.unwrap_or(512).pow(k as u32);
    let centers = sample_manifold(&config.manifold, centers_n, 0, SamplingMode::QuasiUniform)?;
    let mut report = empty_report(config);

    struct Raw {
        seed: u64,
        n: usize,
        delta: f64,
        sup_gap: f64,
    }
    let mut raw = Vec::new();
    for &seed in &config.seeds {
        for &n in &config.n_ladder {
            let cloud = sample_manifold(&config.manifold, n, seed, config.sampling)?;
            for delta in config.delta_rule.resolve(n, k) {
                let profile = config.profile.resolve(delta, k)?;
                let result =
                    empirical_discrepancy(&config.manifold, &cloud, &profile, centers.coords())?;
                raw.push(Raw {
                    seed,
                    n,
                    delta,
                    sup_gap: result.sup_gap,
                });
            }
        }
    }

    // Calibrate the envelope constant on the smallest n (per delta), then fit
    // the median sup gap against n.
    let mut deltas: Vec<f64> = raw.iter().map(|r| r.delta).collect();
    deltas.sort_by(f64::total_cmp);
    deltas.dedup();
    let n_min = *config.n_ladder.first().unwrap();
    let mut c_star_global = None;
    for &delta in &deltas {
        let median_gap = |n: usize| {
            let gaps: Vec<f64> = raw
                .iter()
                .filter(|r| r.n == n && r.delta == delta)
                .map(|r| r.sup_gap)
                .collect();
            median(&gaps)
        };
        let c_star = median_gap(n_min) / theoretical_bound(n_min as f64, delta, k, 1.0)?;
        c_star_global.get_or_insert(c_star);
        for r in raw.iter().filter(|r| r.delta == delta) {
            let bound = theoretical_bound(r.n as f64, delta, k, c_star)?;
            report.discrepancy_rows.push(DiscrepancyRow {
                seed: r.seed,
                n: r.n,
                delta: r.delta,
                sup_gap: r.sup_gap,
                bound,
                ratio: r.sup_gap / bound,
            });
        }
        if config.n_ladder.len() >= 2 {
            let xs: Vec<f64> = config.n_ladder.iter().map(|&n| n as f64).collect();
            let ys: Vec<f64> = config.n_ladder.iter().map(|&n| median_gap(n)).collect();
            if ys.iter().all(|&y| y > 0.0) {
                report.fits.push(NamedFit {
                    name: format!("median_sup_gap_vs_n[delta={delta}]"),
                    fit: loglog_fit(&xs, &ys)?,
                });
            }
        }
    }
    report.c_star = c_star_global;
    // Keep row order aligned with the config loops.
    report.discrepancy_rows.sort_by(|a, b| {
        (a.seed, a.n)
            .cmp(&(b.seed, b.n))
            .then(a.delta.total_cmp(&b.delta))
    });
    Ok(report)
}

/// Deterministic far-from-region queries: quasi-uniform candidates filtered
/// well clear of `D_delta` at the largest bandwidth.
fn default_queries(
    config: &ExperimentConfig,
    region: &RegionSpec,
    delta_max: f64,
) -> Result<Vec<f64>> {
    let d = config.manifold.ambient_dim();
    let candidates = sample_manifold(&config.manifold, 64, 0, SamplingMode::QuasiUniform)?;
    let mut out = Vec::new();
    for p in candidates.iter_points() {
        if region.geodesic_distance(p)? > 2.1 * delta_max && out.len() < 8 * d {
            out.extend_from_slice(p);
        }
    }
    if out.is_empty() {
        return Err(Error::Config(
            "no query points far enough from the region; pass explicit queries".into(),
        ));
    }
    Ok(out)
}

fn run_consistency(config: &ExperimentConfig) -> Result<Report> {
    let region = config.region.resolve(config.manifold)?;
    let k = config.manifold.intrinsic_dim();
    let mut report = empty_report(config);
    for &seed in &config.seeds {
        for &n in &config.n_ladder {
            let cloud = sample_manifold(&config.manifold, n, seed, config.sampling)?;
            let deltas = config.delta_rule.resolve(n, k);
            let delta_max = deltas.iter().cloned().fold(0.0, f64::max);
            let queries: Vec<f64> = match &config.queries {
                Some(qs) => qs.iter().flatten().cloned().collect(),
                None => default_queries(config, &region, delta_max)?,
            };
            let profile = config.profile.resolve(delta_max, k)?;
            let study = consistency_study(
                &config.manifold,
                &cloud,
                &profile,
                &deltas,
                &config.label_fn,
                &queries,
                &region,
            )?;
            for r in &study.reports {
                report.consistency_rows.push(ConsistencyRow {
                    seed,
                    n,
                    delta: r.delta,
                    max_residual: r.max_residual,
                });
            }
            if let Some(fit) = study.fitted_order {
                report.fits.push(NamedFit {
                    name: format!("residual_vs_delta[seed={seed},n={n}]"),
                    fit,
                });
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{
        DeltaRule, ExperimentConfig, LabelRule, MuRule, RegionConfig, SolverConfig,
    };
    use crate::geometry::{LabelFn, ManifoldSpec, RegionKind};
    use crate::solver::SolveMethod;

    fn small_convergence_config() -> ExperimentConfig {
        ExperimentConfig {
            mode: ExperimentMode::Convergence,
            manifold: ManifoldSpec::circle(1.0).unwrap(),
            region: RegionConfig {
                kind: RegionKind::Arc,
                center: vec![0.0],
                geodesic_radius: std::f64::consts::FRAC_PI_4,
            },
            label_fn: LabelFn::SinTheta,
            sampling: crate::geometry::SamplingMode::QuasiUniform,
            label_rule: LabelRule::Count { m: 40 },
            n_ladder: vec![2000],
            delta_rule: DeltaRule::FixedList {
                deltas: vec![0.3, 0.15],
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

    #[test]
    fn convergence_mode_produces_decreasing_errors_and_fits() {
        let report = run_experiment(&small_convergence_config()).unwrap();
        assert_eq!(report.rows.len(), 2);
        let e0 = report.rows[0].err_max.unwrap();
        let e1 = report.rows[1].err_max.unwrap();
        assert!(e0 > e1, "{e0} vs {e1}");
        assert!(report
            .fits
            .iter()
            .any(|f| f.name == "err_max_vs_delta[median]"));
        assert!(report.rows.iter().all(|r| r.connected && r.converged));
    }

    #[test]
    fn rows_csv_is_deterministic_across_runs() {
        let config = small_convergence_config();
        let a = run_experiment(&config).unwrap().rows_csv();
        let b = run_experiment(&config).unwrap().rows_csv();
        assert_eq!(a, b);
    }

    #[test]
    fn mu_zero_entry_is_flagged_not_solved() {
        let mut config = small_convergence_config();
        config.mode = ExperimentMode::MuStudy;
        config.mu_ladder = Some(vec![0.0, 50.0]);
        config.n_ladder = vec![800];
        config.delta_rule = DeltaRule::FixedList { deltas: vec![0.25] };
        let report = run_experiment(&config).unwrap();
        assert_eq!(report.rows.len(), 2);
        let zero_row = &report.rows[0];
        assert_eq!(zero_row.mu, 0.0);
        assert!(!zero_row.mu_pass);
        assert_eq!(zero_row.mu_margin, Some(0.0));
        assert!(zero_row.err_max.is_none());
        assert!(!zero_row.converged);
        let live_row = &report.rows[1];
        assert!(live_row.converged);
        assert!(live_row.jump_gl.is_some());
        assert!(report.jump_ratio_mean.is_some());
    }

    #[test]
    fn label_rate_mode_sweeps_label_counts() {
        let mut config = small_convergence_config();
        config.mode = ExperimentMode::LabelRate;
        config.n_ladder = vec![600];
        config.delta_rule = DeltaRule::FixedList { deltas: vec![0.3] };
        config.label_ladder = Some(vec![
            LabelRule::Count { m: 10 },
            LabelRule::Fraction { fraction: 0.5 },
        ]);
        let report = run_experiment(&config).unwrap();
        assert_eq!(report.rows.len(), 2);
        assert_eq!(report.rows[0].m, 10);
        assert_eq!(report.rows[1].m, 300);
        assert!(report.rows[1].mu <= report.rows[0].mu);
    }

    #[test]
    fn disconnected_rows_have_null_errors() {
        // Tiny bandwidth on a sparse random cloud: guaranteed disconnection.
        let mut config = small_convergence_config();
        config.sampling = crate::geometry::SamplingMode::UniformRandom;
        config.n_ladder = vec![60];
        config.delta_rule = DeltaRule::FixedList {
            deltas: vec![0.005],
        };
        config.label_rule = LabelRule::Count { m: 2 };
        let report = run_experiment(&config).unwrap();
        let row = &report.rows[0];
        assert!(!row.connected);
        assert!(row.unreachable > 0);
        assert!(row.err_max.is_none() && row.err_l2.is_none());
    }

    #[test]
    fn discrepancy_mode_calibrates_envelope() {
        let mut config = small_convergence_config();
        config.mode = ExperimentMode::Discrepancy;
        config.sampling = crate::geometry::SamplingMode::UniformRandom;
        config.n_ladder = vec![500, 2000];
        config.delta_rule = DeltaRule::FixedList { deltas: vec![0.3] };
        config.seeds = vec![0, 1, 2];
        config.centers_per_dim = Some(128);
        let report = run_experiment(&config).unwrap();
        assert_eq!(report.discrepancy_rows.len(), 6);
        assert!(report.c_star.unwrap() > 0.0);
        // Calibration makes the smallest-n median ratio exactly 1; larger n
        // must stay below the envelope.
        for row in report.discrepancy_rows.iter().filter(|r| r.n == 2000) {
            assert!(row.bound > 0.0);
        }
        assert!(report
            .fits
            .iter()
            .any(|f| f.name.starts_with("median_sup_gap_vs_n")));
    }

    #[test]
    fn consistency_mode_fits_residual_order() {
        let mut config = small_convergence_config();
        config.mode = ExperimentMode::Consistency;
        config.n_ladder = vec![4000];
        config.delta_rule = DeltaRule::FixedList {
            deltas: vec![0.4, 0.2],
        };
        let report = run_experiment(&config).unwrap();
        assert_eq!(report.consistency_rows.len(), 2);
        let fit = &report
            .fits
            .iter()
            .find(|f| f.name.starts_with("residual_vs_delta"))
            .unwrap()
            .fit;
        assert!(fit.slope > 0.9, "order {}", fit.slope);
    }

    #[test]
    fn report_roundtrip_refits_identically() {
        let config = small_convergence_config();
        let report = run_experiment(&config).unwrap();
        let dir = std::env::temp_dir().join(format!("wnll_report_{}", std::process::id()));
        let back: Report = crate::io::io_roundtrip(&dir.join("report.json"), &report).unwrap();
        assert_eq!(back.rows, report.rows);
        // Re-fit from the reloaded rows: bitwise identical slopes.
        let xs: Vec<f64> = back.rows.iter().map(|r| r.delta).collect();
        let ys: Vec<f64> = back.rows.iter().map(|r| r.err_max.unwrap()).collect();
        let refit = loglog_fit(&xs, &ys).unwrap();
        let original = &report
            .fits
            .iter()
            .find(|f| f.name == "err_max_vs_delta[seed=0]")
            .unwrap()
            .fit;
        assert_eq!(refit.slope.to_bits(), original.slope.to_bits());
        std::fs::remove_dir_all(&dir).ok();
    }
}
