//! Experiment configuration: which study to run, on what geometry, with what
//! ladders of `n`, `delta`, `mu`, and labels.

pub mod report;
pub mod run;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{LabelFn, ManifoldSpec, RegionKind, RegionSpec, SamplingMode};
use crate::kernels::{profile_by_id, KernelProfile, RadialProfile};
use crate::solver::SolveMethod;

pub use report::{ConsistencyRow, DiscrepancyRow, NamedFit, Report, RunRow};
pub use run::run_experiment;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentMode {
    Convergence,
    MuStudy,
    LabelRate,
    Discrepancy,
    Consistency,
}

/// Region without the manifold (the config carries the manifold once).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionConfig {
    pub kind: RegionKind,
    pub center: Vec<f64>,
    pub geodesic_radius: f64,
}

impl RegionConfig {
    pub fn resolve(&self, manifold: ManifoldSpec) -> Result<RegionSpec> {
        RegionSpec::new(
            manifold,
            self.kind,
            self.center.clone(),
            self.geodesic_radius,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelRule {
    /// Fixed label count.
    Count { m: usize },
    /// Labels as a fraction of `n` (rounded up, at least one).
    Fraction { fraction: f64 },
}

impl LabelRule {
    pub fn resolve(&self, n: usize) -> usize {
        match self {
            LabelRule::Count { m } => *m,
            LabelRule::Fraction { fraction } => ((n as f64 * fraction).ceil() as usize).max(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaRule {
    /// Explicit bandwidth ladder, used for every `n`.
    FixedList { deltas: Vec<f64> },
    /// `delta = a * n^{-exponent}`; the default exponent `1/(k+7)` is the
    /// weakest decay compatible with the bandwidth-sample coupling for the
    /// configured intrinsic dimension.
    PowerOfN {
        a: f64,
        #[serde(default)]
        exponent: Option<f64>,
        #[serde(default)]
        enforce_coupling: bool,
    },
}

impl DeltaRule {
    pub fn resolve(&self, n: usize, intrinsic_dim: usize) -> Vec<f64> {
        match self {
            DeltaRule::FixedList { deltas } => deltas.clone(),
            DeltaRule::PowerOfN { a, exponent, .. } => {
                let e = exponent.unwrap_or(1.0 / (intrinsic_dim as f64 + 7.0));
                vec![a * (n as f64).powf(-e)]
            }
        }
    }

    pub fn enforce_coupling(&self) -> bool {
        matches!(
            self,
            DeltaRule::PowerOfN {
                enforce_coupling: true,
                ..
            }
        )
    }
}

/// `delta^{-k} n^{-1/2} (ln n - 2 ln delta + 1)^{1/2} <= delta^3`, the
/// coupling that makes the sampling error fall below the bias terms.
pub fn coupling_satisfied(n: usize, delta: f64, intrinsic_dim: usize) -> bool {
    let nf = n as f64;
    let lhs =
        delta.powi(-(intrinsic_dim as i32)) / nf.sqrt() * (nf.ln() - 2.0 * delta.ln() + 1.0).sqrt();
    lhs <= delta.powi(3)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MuRule {
    /// `mu = n / m`.
    #[default]
    DefaultRatio,
    /// `mu = (n/m + 2) / 2`, matching the Euler-Lagrange equations of the
    /// weighted energy exactly.
    ElEquivalent,
    Fixed {
        value: f64,
    },
}

impl MuRule {
    pub fn resolve(&self, n: usize, m: usize) -> f64 {
        match self {
            MuRule::DefaultRatio => n as f64 / m as f64,
            MuRule::ElEquivalent => (n as f64 / m as f64 + 2.0) / 2.0,
            MuRule::Fixed { value } => *value,
        }
    }
}

/// Kernel profile by registry id or fully custom shapes from the config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileConfig {
    Id(String),
    Custom {
        id: String,
        r_shape: RadialProfile,
        k_shape: RadialProfile,
        r0: f64,
        delta0_r: f64,
        delta0_k: f64,
    },
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig::Id(crate::kernels::DEFAULT_PROFILE_ID.to_string())
    }
}

impl ProfileConfig {
    pub fn resolve(&self, delta: f64, intrinsic_dim: usize) -> Result<KernelProfile> {
        match self {
            ProfileConfig::Id(id) => profile_by_id(id, delta, intrinsic_dim),
            ProfileConfig::Custom {
                id,
                r_shape,
                k_shape,
                r0,
                delta0_r,
                delta0_k,
            } => KernelProfile::new(
                id.clone(),
                r_shape.clone(),
                k_shape.clone(),
                delta,
                intrinsic_dim,
                *r0,
                *delta0_r,
                *delta0_k,
            ),
        }
    }
}

fn default_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Defaults to `10 n` when absent.
    #[serde(default)]
    pub max_iter: Option<usize>,
    #[serde(default = "default_method")]
    pub method: SolveMethod,
}

fn default_method() -> SolveMethod {
    SolveMethod::Cg
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: default_tol(),
            max_iter: None,
            method: SolveMethod::Cg,
        }
    }
}

fn default_sampling() -> SamplingMode {
    SamplingMode::UniformRandom
}

fn default_margin() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub mode: ExperimentMode,
    pub manifold: ManifoldSpec,
    pub region: RegionConfig,
    pub label_fn: LabelFn,
    #[serde(default = "default_sampling")]
    pub sampling: SamplingMode,
    pub label_rule: LabelRule,
    pub n_ladder: Vec<usize>,
    pub delta_rule: DeltaRule,
    #[serde(default)]
    pub mu_rule: MuRule,
    /// `mu` values swept by `mu_study` mode.
    #[serde(default)]
    pub mu_ladder: Option<Vec<f64>>,
    /// Label rules swept by `label_rate` mode.
    #[serde(default)]
    pub label_ladder: Option<Vec<LabelRule>>,
    #[serde(default)]
    pub profile: ProfileConfig,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Centers per intrinsic dimension for the discrepancy sup (default 512).
    #[serde(default)]
    pub centers_per_dim: Option<usize>,
    /// Explicit consistency queries (ambient coordinates); a deterministic
    /// far-from-region set is chosen when absent.
    #[serde(default)]
    pub queries: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Edge storage budget in MiB (default 2048).
    #[serde(default)]
    pub edge_budget_mb: Option<usize>,
    #[serde(default = "default_margin")]
    pub mu_condition_margin: f64,
    /// Grid resolution handed to the reference oracles (default 512).
    #[serde(default)]
    pub reference_resolution: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_ladder.is_empty() {
            return Err(Error::Config("n_ladder must not be empty".into()));
        }
        if !self.n_ladder.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Config("n_ladder must be strictly increasing".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must not be empty".into()));
        }
        let region = self.region.resolve(self.manifold)?;
        let _ = region;
        let k = self.manifold.intrinsic_dim();
        for &n in &self.n_ladder {
            for delta in self.delta_rule.resolve(n, k) {
                if !(delta > 0.0 && delta < self.manifold.scale) {
                    return Err(Error::Config(format!(
                        "delta {delta} outside (0, scale = {})",
                        self.manifold.scale
                    )));
                }
                if self.delta_rule.enforce_coupling() && !coupling_satisfied(n, delta, k) {
                    return Err(Error::Config(format!(
                        "coupling violated at n = {n}, delta = {delta}"
                    )));
                }
            }
        }
        if let LabelRule::Fraction { fraction } = self.label_rule {
            if !(fraction > 0.0 && fraction <= 1.0) {
                return Err(Error::Config(format!(
                    "label fraction must lie in (0, 1], got {fraction}"
                )));
            }
        }
        match self.mode {
            ExperimentMode::MuStudy => {
                if self.mu_ladder.as_ref().map_or(true, |l| l.is_empty()) {
                    return Err(Error::Config("mu_study mode needs mu_ladder".into()));
                }
            }
            ExperimentMode::LabelRate => {
                if self.label_ladder.as_ref().map_or(true, |l| l.is_empty()) {
                    return Err(Error::Config("label_rate mode needs label_ladder".into()));
                }
            }
            ExperimentMode::Consistency => {
                if !self.label_fn.has_laplacian(&self.manifold) {
                    return Err(Error::Config(
                        "consistency mode needs a label function with registered second derivatives"
                            .into(),
                    ));
                }
            }
            _ => {}
        }
        if !(self.solver.tol > 0.0) {
            return Err(Error::Config("solver tol must be positive".into()));
        }
        // Probe the profile once.
        let first_delta = self.delta_rule.resolve(self.n_ladder[0], k)[0];
        self.profile.resolve(first_delta, k)?;
        Ok(())
    }

    pub fn assembly_options(&self) -> crate::graph::AssemblyOptions {
        match self.edge_budget_mb {
            Some(mb) => crate::graph::AssemblyOptions {
                edge_budget_bytes: mb << 20,
            },
            None => crate::graph::AssemblyOptions::default(),
        }
    }
}

/// A minimal valid config as JSON, shared by tests across modules.
#[cfg(test)]
pub(crate) fn tests_config_json() -> &'static str {
    r#"{
        "mode": "convergence",
        "manifold": {"kind": "circle", "scale": 1.0},
        "region": {"kind": "arc", "center": [0.0], "geodesic_radius": 0.7853981633974483},
        "label_fn": "sin_theta",
        "sampling": "quasi_uniform",
        "label_rule": {"count": {"m": 20}},
        "n_ladder": [500],
        "delta_rule": {"fixed_list": {"deltas": [0.3, 0.2]}},
        "seeds": [0]
    }"#
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ManifoldKind;

    fn base_config() -> ExperimentConfig {
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
            label_rule: LabelRule::Count { m: 20 },
            n_ladder: vec![500],
            delta_rule: DeltaRule::FixedList {
                deltas: vec![0.3, 0.2],
            },
            mu_rule: MuRule::DefaultRatio,
            mu_ladder: None,
            label_ladder: None,
            profile: ProfileConfig::default(),
            seeds: vec![0],
            solver: SolverConfig::default(),
            centers_per_dim: None,
            queries: None,
            output: None,
            edge_budget_mb: None,
            mu_condition_margin: 1.0,
            reference_resolution: None,
        }
    }

    #[test]
    fn shared_test_config_parses() {
        ExperimentConfig::from_json(super::tests_config_json()).unwrap();
    }

    #[test]
    fn valid_config_roundtrips_through_json() {
        let config = base_config();
        config.validate().unwrap();
        let json = serde_json::to_string_pretty(&config).unwrap();
        let back = ExperimentConfig::from_json(&json).unwrap();
        assert_eq!(back, config);
    }

    #[test]
    fn ladder_must_increase() {
        let mut config = base_config();
        config.n_ladder = vec![500, 500];
        assert!(config.validate().is_err());
    }

    #[test]
    fn delta_must_fit_scale() {
        let mut config = base_config();
        config.delta_rule = DeltaRule::FixedList { deltas: vec![1.5] };
        assert!(config.validate().is_err());
    }

    #[test]
    fn mu_study_requires_ladder() {
        let mut config = base_config();
        config.mode = ExperimentMode::MuStudy;
        assert!(config.validate().is_err());
        config.mu_ladder = Some(vec![0.0, 1.0, 10.0]);
        config.validate().unwrap();
    }

    #[test]
    fn power_rule_default_exponent() {
        let rule = DeltaRule::PowerOfN {
            a: 1.0,
            exponent: None,
            enforce_coupling: false,
        };
        let d = rule.resolve(256, 1)[0];
        // 256^{-1/8} = 0.5.
        assert!((d - 0.5).abs() < 1e-12);
    }

    #[test]
    fn coupling_check_is_enforced_when_requested() {
        // Desk-scale n cannot satisfy the coupling with unit constants; the
        // validator must say so rather than run a vacuous study.
        let mut config = base_config();
        config.delta_rule = DeltaRule::PowerOfN {
            a: 1.0,
            exponent: None,
            enforce_coupling: true,
        };
        assert!(config.validate().is_err());
        assert!(!coupling_satisfied(50_000, 0.1, 1));
    }

    #[test]
    fn torus_config_validates() {
        let mut config = base_config();
        config.manifold = ManifoldSpec::new(ManifoldKind::CliffordTorus, 1.0).unwrap();
        config.region = RegionConfig {
            kind: RegionKind::Band,
            center: vec![0.0],
            geodesic_radius: 0.4,
        };
        config.validate().unwrap();
    }
}
