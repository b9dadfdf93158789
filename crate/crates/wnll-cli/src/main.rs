//! `wnll` — experiment runner and I/O front end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 disconnected instance
//! (only with `--require-connected`), 4 solver failure.

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};

use wnll::experiment::{run_experiment, ExperimentConfig};
use wnll::graph::AssemblyOptions;
use wnll::io;
use wnll::kernels::{profile_by_id, validate_profile};
use wnll::solver::assemble_wnll_values;
use wnll::{check_s_connected, solve, AffinityGraph, Error, SolveMethod};

const EXIT_CONFIG: u8 = 2;
const EXIT_DISCONNECTED: u8 = 3;
const EXIT_SOLVER: u8 = 4;

#[derive(Parser)]
#[command(
    name = "wnll",
    about = "Weighted nonlocal Laplacian interpolation studies on manifold point clouds",
    version
)]
struct Cli {
    /// Worker thread cap (or set WNLL_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Fail (exit 3) if any run is not S-connected.
        #[arg(long)]
        require_connected: bool,
    },
    /// Check a kernel profile against the assumption clauses.
    ValidateKernel {
        profile_id: String,
        #[arg(long, default_value_t = 0.2)]
        delta: f64,
        /// Intrinsic dimension entering the normalization.
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 400)]
        samples: usize,
    },
    /// Build the affinity graph from CSV files and report S-connectivity.
    CheckConnectivity {
        cloud: PathBuf,
        labels: PathBuf,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value = wnll::kernels::DEFAULT_PROFILE_ID)]
        profile: String,
        /// Intrinsic dimension (defaults from the ambient dimension:
        /// 2 -> 1, otherwise 2).
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        require_connected: bool,
        #[arg(long)]
        edge_budget_mb: Option<usize>,
    },
    /// Solve the WNLL system from CSV files.
    Solve {
        cloud: PathBuf,
        labels: PathBuf,
        #[arg(long)]
        delta: f64,
        /// Labeled-term weight; defaults to n/m.
        #[arg(long)]
        mu: Option<f64>,
        /// Use the Euler-Lagrange-equivalent weight (n/m + 2)/2.
        #[arg(long, conflicts_with = "mu")]
        mu_el: bool,
        #[arg(long, default_value = wnll::kernels::DEFAULT_PROFILE_ID)]
        profile: String,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Defaults to 10 n.
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long, value_enum, default_value_t = MethodArg::Cg)]
        method: MethodArg,
        /// Solution CSV output path.
        #[arg(long, default_value = "solution.csv")]
        out: PathBuf,
        /// Solve stats JSON output path (stats always print to stdout).
        #[arg(long)]
        stats: Option<PathBuf>,
        #[arg(long)]
        require_connected: bool,
        #[arg(long)]
        edge_budget_mb: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Cg,
    Dense,
}

impl From<MethodArg> for SolveMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Cg => SolveMethod::Cg,
            MethodArg::Dense => SolveMethod::Dense,
        }
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_)
        | Error::Malformed { .. }
        | Error::Io { .. }
        | Error::Json(_)
        | Error::InvalidProfile(_)
        | Error::InvalidManifold(_)
        | Error::InvalidRegion(_)
        | Error::LabelFn(_, _)
        | Error::NonpositiveDelta(_)
        | Error::NonpositiveMu(_)
        | Error::UnsupportedManifold(_)
        | Error::DimensionMismatch { .. } => EXIT_CONFIG,
        Error::SingularFactor { .. } => EXIT_SOLVER,
        _ => 1,
    }
}

fn infer_dim(ambient: usize, flag: Option<usize>) -> usize {
    flag.unwrap_or(if ambient == 2 { 1 } else { 2 })
}

fn load_graph(
    cloud: &PathBuf,
    labels: &PathBuf,
    delta: f64,
    profile_id: &str,
    dim_flag: Option<usize>,
    edge_budget_mb: Option<usize>,
) -> Result<(AffinityGraph, Vec<f64>), Error> {
    let (d_cloud, coords) = io::load_points_csv(cloud)?;
    let (d_labels, label_coords, values) = io::load_labeled_csv(labels)?;
    if d_cloud != d_labels {
        return Err(Error::DimensionMismatch {
            expected: d_cloud,
            got: d_labels,
        });
    }
    let intrinsic = infer_dim(d_cloud, dim_flag);
    let profile = profile_by_id(profile_id, delta, intrinsic)?;
    let options = match edge_budget_mb {
        Some(mb) => AssemblyOptions {
            edge_budget_bytes: mb << 20,
        },
        None => AssemblyOptions::default(),
    };
    let graph = AffinityGraph::assemble_raw(coords, label_coords, d_cloud, profile, options)?;
    Ok((graph, values))
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Run {
            config,
            require_connected,
        } => {
            let text = std::fs::read_to_string(&config).map_err(|e| Error::Io {
                path: config.display().to_string(),
                source: e,
            })?;
            let config = ExperimentConfig::from_json(&text)?;
            let report = run_experiment(&config)?;
            for fit in &report.fits {
                println!(
                    "fit {}: slope {:.4} (stderr {:.4})",
                    fit.name, fit.fit.slope, fit.fit.slope_stderr
                );
            }
            if let Some(ratio) = report.jump_ratio_mean {
                println!("jump ratio J_GL / J_WNLL mean: {ratio:.4}");
            }
            if let Some(prefix) = &config.output {
                println!(
                    "wrote {}_rows.csv and {}_report.json",
                    prefix.display(),
                    prefix.display()
                );
            }
            if require_connected && report.has_disconnected_run() {
                eprintln!("error: at least one run is not S-connected");
                return Ok(EXIT_DISCONNECTED);
            }
            if report.has_solver_failure() {
                eprintln!("error: at least one solve did not converge");
                return Ok(EXIT_SOLVER);
            }
            Ok(0)
        }
        Command::ValidateKernel {
            profile_id,
            delta,
            dim,
            samples,
        } => {
            let profile = profile_by_id(&profile_id, delta, dim)?;
            let report = validate_profile(&profile, samples);
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(0)
        }
        Command::CheckConnectivity {
            cloud,
            labels,
            delta,
            profile,
            dim,
            require_connected,
            edge_budget_mb,
        } => {
            let (graph, _) = load_graph(&cloud, &labels, delta, &profile, dim, edge_budget_mb)?;
            let report = check_s_connected(&graph);
            let stats = graph.stats();
            let combined = serde_json::json!({
                "connectivity": report,
                "graph": stats,
            });
            println!("{}", serde_json::to_string_pretty(&combined)?);
            if require_connected && !report.s_connected {
                return Ok(EXIT_DISCONNECTED);
            }
            Ok(0)
        }
        Command::Solve {
            cloud,
            labels,
            delta,
            mu,
            mu_el,
            profile,
            dim,
            tol,
            max_iter,
            method,
            out,
            stats,
            require_connected,
            edge_budget_mb,
        } => {
            let (graph, values) =
                load_graph(&cloud, &labels, delta, &profile, dim, edge_budget_mb)?;
            let mu = match (mu, mu_el) {
                (Some(v), _) => v,
                (None, true) => (graph.n() as f64 / graph.m() as f64 + 2.0) / 2.0,
                (None, false) => graph.n() as f64 / graph.m() as f64,
            };
            if require_connected {
                let report = check_s_connected(&graph);
                if !report.s_connected {
                    eprintln!(
                        "error: {} of {} cloud points cannot reach a label",
                        report.unreachable.len(),
                        graph.n()
                    );
                    return Ok(EXIT_DISCONNECTED);
                }
            }
            let dim_ambient = graph.dim();
            let cloud_coords: Vec<f64> = (0..graph.n())
                .flat_map(|i| graph.point_p(i).to_vec())
                .collect();
            let labeled_coords: Vec<f64> = (0..graph.m())
                .flat_map(|s| graph.point_s(s).to_vec())
                .collect();
            let max_iter = max_iter.unwrap_or(10 * graph.n());
            let graph = Arc::new(graph);
            let system = assemble_wnll_values(&graph, &values, mu)?;
            let (solution, solve_stats) = solve(&system, method.into(), tol, max_iter)?;
            io::save_solution_csv(
                &out,
                &cloud_coords,
                &labeled_coords,
                &values,
                dim_ambient,
                &solution,
            )?;
            println!("{}", serde_json::to_string_pretty(&solve_stats)?);
            if let Some(path) = stats {
                io::save_json(&path, &solve_stats)?;
            }
            if !solve_stats.converged {
                eprintln!(
                    "error: solver stalled at relative residual {:e} after {} iterations",
                    solve_stats.final_residual, solve_stats.iterations
                );
                return Ok(EXIT_SOLVER);
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli
        .threads
        .or_else(|| {
            std::env::var("WNLL_THREADS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .filter(|&t| t > 0);
    if let Some(t) = threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
