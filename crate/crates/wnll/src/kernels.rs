//! Kernel profiles and their scaled forms.
//!
//! A [`KernelProfile`] bundles the two radial shapes `R` and `K`, the
//! bandwidth `delta`, the intrinsic dimension `k` entering the normalization
//! `C_delta = (4 pi delta^2)^{-k/2}`, the `K` support constant `r0`, and the
//! stored nondegeneracy floors. Scaled kernels take the *squared* distance
//! ratio as argument:
//!
//! ```text
//! R_delta(x, y) = C_delta * R(|x - y|^2 / (4 delta^2))
//! ```
//!
//! so `R_delta` vanishes for `|x - y| > 2 delta` and `K_delta` for
//! `|x - y| > 2 delta sqrt(r0)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::adaptive_simpson;

/// Weights smaller than this are treated as exact zeros to keep denormals out
/// of the graph.
pub const WEIGHT_FLOOR: f64 = 1e-300;

/// A radial shape `r -> value` on `[0, support]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum RadialProfile {
    /// `(1 - r/s)^4 (4 r/s + 1)` on `[0, s]`. C^3 at the support edge.
    Wendland { support: f64 },
    /// Wendland shape multiplied by `((r - dip)/dip)^2`, which pins a zero at
    /// `r = dip` inside the support. Violates nondegeneracy on purpose.
    WendlandDip { support: f64, dip: f64 },
    /// `1 - r/s` on `[0, s]`; first derivative jumps at the edge.
    Linear { support: f64 },
    /// `exp(-rate * r)`; no compact support.
    Gaussian { rate: f64 },
    /// `sum_i coeffs[i] * r^i` on `[0, support]`.
    Polynomial { coeffs: Vec<f64>, support: f64 },
}

impl RadialProfile {
    /// Profile value at `r >= 0`. Zero beyond the support edge.
    pub fn value(&self, r: f64) -> f64 {
        match self {
            RadialProfile::Wendland { support } => {
                if r > *support {
                    0.0
                } else {
                    let u = r / support;
                    let t = 1.0 - u;
                    let t2 = t * t;
                    t2 * t2 * (4.0 * u + 1.0)
                }
            }
            RadialProfile::WendlandDip { support, dip } => {
                if r > *support {
                    0.0
                } else {
                    let u = r / support;
                    let t = 1.0 - u;
                    let t2 = t * t;
                    let d = (r - dip) / dip;
                    t2 * t2 * (4.0 * u + 1.0) * d * d
                }
            }
            RadialProfile::Linear { support } => {
                if r > *support {
                    0.0
                } else {
                    1.0 - r / support
                }
            }
            RadialProfile::Gaussian { rate } => (-rate * r).exp(),
            RadialProfile::Polynomial { coeffs, support } => {
                if r > *support {
                    0.0
                } else {
                    compensated_horner(coeffs, r)
                }
            }
        }
    }

    /// Support edge; `INFINITY` when the shape never vanishes.
    pub fn support_radius(&self) -> f64 {
        match self {
            RadialProfile::Wendland { support }
            | RadialProfile::WendlandDip { support, .. }
            | RadialProfile::Linear { support }
            | RadialProfile::Polynomial { support, .. } => *support,
            RadialProfile::Gaussian { .. } => f64::INFINITY,
        }
    }

    /// Integrated tail `int_r^inf value(s) ds`. Closed form where the shape
    /// allows, adaptive quadrature (abs tol 1e-12) otherwise.
    pub fn tail(&self, r: f64) -> f64 {
        match self {
            RadialProfile::Wendland { support } => {
                if r >= *support {
                    0.0
                } else {
                    // int (1-u)^4 (4u+1) du = -(1-u)^5 + (2/3)(1-u)^6 + C
                    let t = 1.0 - r / support;
                    support * (t.powi(5) - (2.0 / 3.0) * t.powi(6))
                }
            }
            RadialProfile::Linear { support } => {
                if r >= *support {
                    0.0
                } else {
                    let t = support - r;
                    t * t / (2.0 * support)
                }
            }
            RadialProfile::Gaussian { rate } => (-rate * r).exp() / rate,
            RadialProfile::Polynomial { coeffs, support } => {
                if r >= *support {
                    0.0
                } else {
                    coeffs
                        .iter()
                        .enumerate()
                        .map(|(i, c)| {
                            let p = (i + 1) as f64;
                            c * (support.powf(p) - r.powf(p)) / p
                        })
                        .sum()
                }
            }
            RadialProfile::WendlandDip { support, .. } => {
                if r >= *support {
                    0.0
                } else {
                    adaptive_simpson(&|s| self.value(s), r, *support, 1e-12)
                }
            }
        }
    }
}

/// Horner evaluation with error-free transformations. Monomial-basis
/// polynomials that vanish at their support edge cancel catastrophically in
/// plain Horner; the compensated form keeps the absolute error near
/// `eps^2 * sum |c_i r^i|`, which the edge-smoothness finite differences rely
/// on.
fn compensated_horner(coeffs: &[f64], x: f64) -> f64 {
    let mut iter = coeffs.iter().rev();
    let mut s = *iter.next().unwrap_or(&0.0);
    let mut e = 0.0;
    for &c in iter {
        let p = s * x;
        let pi = s.mul_add(x, -p);
        let t = p + c;
        let z = t - p;
        let sigma = (p - (t - z)) + (c - z);
        s = t;
        e = e * x + (pi + sigma);
    }
    s + e
}

/// The scaled Wendland evaluation shared by the generic path and the
/// specialized matvec loops; one source of truth keeps weights bit-identical
/// everywhere.
#[inline(always)]
pub(crate) fn wendland_scaled(u_scale: f64, amp: f64, dist2: f64) -> f64 {
    let u = dist2 * u_scale;
    if u >= 1.0 {
        return 0.0;
    }
    let t = 1.0 - u;
    let t2 = t * t;
    let w = amp * (t2 * t2) * (4.0 * u + 1.0);
    if w < WEIGHT_FLOOR {
        0.0
    } else {
        w
    }
}

/// Which of the profile's two kernels to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    R,
    K,
}

/// Single-multiply fast path for the scaled Wendland shape; other shapes go
/// through the generic evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
enum FastScaled {
    /// `w = amp * (1-u)^4 (4u+1)` with `u = dist2 * u_scale`.
    Wendland {
        u_scale: f64,
        amp: f64,
    },
    Generic,
}

/// The kernel pair `(R, K)` with bandwidth and normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelProfile {
    pub id: String,
    pub r_shape: RadialProfile,
    pub k_shape: RadialProfile,
    /// Bandwidth (length units).
    pub delta: f64,
    /// Intrinsic dimension entering `C_delta`.
    pub intrinsic_dim: usize,
    /// `K` support constant; the assumptions require `r0 >= 2`.
    pub r0: f64,
    /// Stored nondegeneracy floor for `R` on `[0, 1/2]`.
    pub delta0_r: f64,
    /// Stored nondegeneracy floor for `K` on `[0, 2]`.
    pub delta0_k: f64,
    c_delta: f64,
    inv_4d2: f64,
    r_fast: FastScaled,
    k_fast: FastScaled,
}

impl KernelProfile {
    pub fn new(
        id: impl Into<String>,
        r_shape: RadialProfile,
        k_shape: RadialProfile,
        delta: f64,
        intrinsic_dim: usize,
        r0: f64,
        delta0_r: f64,
        delta0_k: f64,
    ) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::NonpositiveDelta(delta));
        }
        if intrinsic_dim == 0 {
            return Err(Error::InvalidProfile(
                "intrinsic dimension must be >= 1".into(),
            ));
        }
        if !(r0 > 0.0) {
            return Err(Error::InvalidProfile(format!(
                "r0 must be positive, got {r0}"
            )));
        }
        let four_pi_d2 = 4.0 * std::f64::consts::PI * delta * delta;
        let c_delta = four_pi_d2.powf(-(intrinsic_dim as f64) / 2.0);
        let inv_4d2 = 1.0 / (4.0 * delta * delta);
        let fast = |shape: &RadialProfile| match shape {
            RadialProfile::Wendland { support } => FastScaled::Wendland {
                u_scale: inv_4d2 / support,
                amp: c_delta,
            },
            _ => FastScaled::Generic,
        };
        Ok(Self {
            r_fast: fast(&r_shape),
            k_fast: fast(&k_shape),
            id: id.into(),
            r_shape,
            k_shape,
            delta,
            intrinsic_dim,
            r0,
            delta0_r,
            delta0_k,
            c_delta,
            inv_4d2,
        })
    }

    /// Normalization factor `(4 pi delta^2)^{-k/2}`.
    pub fn c_delta(&self) -> f64 {
        self.c_delta
    }

    /// Ambient support radius of `R_delta`: `2 delta sqrt(support(R))`.
    pub fn r_support_distance(&self) -> f64 {
        2.0 * self.delta * self.r_shape.support_radius().min(1e6).sqrt()
    }

    /// Ambient support radius of `K_delta`: `2 delta sqrt(support(K))`.
    pub fn k_support_distance(&self) -> f64 {
        2.0 * self.delta * self.k_shape.support_radius().min(1e6).sqrt()
    }

    #[inline(always)]
    fn scaled(&self, fast: FastScaled, shape: &RadialProfile, dist2: f64) -> f64 {
        match fast {
            FastScaled::Wendland { u_scale, amp } => wendland_scaled(u_scale, amp, dist2),
            FastScaled::Generic => {
                let w = self.c_delta * shape.value(dist2 * self.inv_4d2);
                if w < WEIGHT_FLOOR {
                    0.0
                } else {
                    w
                }
            }
        }
    }

    /// `(u_scale, amplitude)` of the fast `R` path when the shape allows it.
    pub(crate) fn r_fast_wendland(&self) -> Option<(f64, f64)> {
        match self.r_fast {
            FastScaled::Wendland { u_scale, amp } => Some((u_scale, amp)),
            FastScaled::Generic => None,
        }
    }

    /// `R_delta` from a squared ambient distance.
    #[inline(always)]
    pub fn eval_r_sq(&self, dist2: f64) -> f64 {
        self.scaled(self.r_fast, &self.r_shape, dist2)
    }

    /// `K_delta` from a squared ambient distance.
    #[inline(always)]
    pub fn eval_k_sq(&self, dist2: f64) -> f64 {
        self.scaled(self.k_fast, &self.k_shape, dist2)
    }

    /// Exactly `eval_r_sq(dist2) > 0`, skipping the polynomial. For the
    /// Wendland shape positivity is equivalent to being strictly inside the
    /// support (the amplitude can never underflow past the weight floor).
    #[inline(always)]
    pub fn r_positive(&self, dist2: f64) -> bool {
        match self.r_fast {
            FastScaled::Wendland { u_scale, .. } => dist2 * u_scale < 1.0,
            FastScaled::Generic => self.eval_r_sq(dist2) > 0.0,
        }
    }

    /// Exactly `eval_k_sq(dist2) > 0`.
    #[inline(always)]
    pub fn k_positive(&self, dist2: f64) -> bool {
        match self.k_fast {
            FastScaled::Wendland { u_scale, .. } => dist2 * u_scale < 1.0,
            FastScaled::Generic => self.eval_k_sq(dist2) > 0.0,
        }
    }

    /// `Rbar_delta(x, y) = C_delta * Rbar(|x-y|^2 / 4 delta^2)` where `Rbar`
    /// is the integrated tail of the `R` shape.
    #[inline]
    pub fn eval_rbar_sq(&self, dist2: f64) -> f64 {
        let w = self.c_delta * self.r_shape.tail(dist2 * self.inv_4d2);
        if w < WEIGHT_FLOOR {
            0.0
        } else {
            w
        }
    }

    /// A copy of this profile at a different bandwidth.
    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        Self::new(
            self.id.clone(),
            self.r_shape.clone(),
            self.k_shape.clone(),
            delta,
            self.intrinsic_dim,
            self.r0,
            self.delta0_r,
            self.delta0_k,
        )
    }
}

/// Scaled kernel evaluation between two ambient points.
pub fn eval_scaled(profile: &KernelProfile, kind: KernelKind, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let dist2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(match kind {
        KernelKind::R => profile.eval_r_sq(dist2),
        KernelKind::K => profile.eval_k_sq(dist2),
    })
}

/// Integrated tail `Rbar(r) = int_r^inf R(s) ds` of the profile's `R` shape.
pub fn rbar(profile: &KernelProfile, r: f64) -> Result<f64> {
    if r < 0.0 {
        return Err(Error::InvalidProfile(format!("rbar needs r >= 0, got {r}")));
    }
    Ok(profile.r_shape.tail(r))
}

// --- registry -------------------------------------------------------------

pub const DEFAULT_PROFILE_ID: &str = "wendland_c2_default";

/// Ids accepted by [`profile_by_id`]. The first conforms to every assumption
/// clause; each of the others is registered to fail exactly one clause.
pub fn registered_profile_ids() -> &'static [&'static str] {
    &[
        DEFAULT_PROFILE_ID,
        "gaussian_nonconforming",
        "linear_edge",
        "k_degenerate_dip",
    ]
}

/// The three profiles that intentionally violate one assumption clause each.
pub fn counterexample_profile_ids() -> &'static [&'static str] {
    &["gaussian_nonconforming", "linear_edge", "k_degenerate_dip"]
}

/// Construct a registered profile at the given bandwidth and intrinsic
/// dimension.
pub fn profile_by_id(id: &str, delta: f64, intrinsic_dim: usize) -> Result<KernelProfile> {
    let default_k = RadialProfile::Wendland { support: 3.0 };
    match id {
        DEFAULT_PROFILE_ID => KernelProfile::new(
            id,
            RadialProfile::Wendland { support: 1.0 },
            default_k,
            delta,
            intrinsic_dim,
            3.0,
            0.1875,
            0.045,
        ),
        "gaussian_nonconforming" => KernelProfile::new(
            id,
            RadialProfile::Gaussian { rate: 1.0 },
            RadialProfile::Gaussian { rate: 1.0 },
            delta,
            intrinsic_dim,
            3.0,
            0.1875,
            0.045,
        ),
        "linear_edge" => KernelProfile::new(
            id,
            RadialProfile::Linear { support: 1.0 },
            default_k,
            delta,
            intrinsic_dim,
            3.0,
            0.1875,
            0.045,
        ),
        "k_degenerate_dip" => KernelProfile::new(
            id,
            RadialProfile::Wendland { support: 1.0 },
            RadialProfile::WendlandDip {
                support: 3.0,
                dip: 1.8,
            },
            delta,
            intrinsic_dim,
            3.0,
            0.1875,
            0.045,
        ),
        other => Err(Error::InvalidProfile(format!(
            "unknown profile id `{other}`"
        ))),
    }
}

// --- validation ------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Clause {
    Nonnegativity,
    CompactSupport,
    Smoothness,
    Nondegeneracy,
    SupportConstant,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClauseCheck {
    pub clause: Clause,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub profile_id: String,
    pub clauses: Vec<ClauseCheck>,
    pub pass: bool,
}

impl ValidationReport {
    pub fn clause(&self, clause: Clause) -> &ClauseCheck {
        self.clauses
            .iter()
            .find(|c| c.clause == clause)
            .expect("all clauses present")
    }

    /// Clauses that failed.
    pub fn failed(&self) -> Vec<Clause> {
        self.clauses
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.clause)
            .collect()
    }
}

const EDGE_TOL: f64 = 1e-8;

/// Check the profile against the kernel assumptions: nonnegativity, compact
/// support, C^2 matching at the support edge, nondegeneracy floors, and
/// `r0 >= 2`. Failures are report entries, never errors.
pub fn validate_profile(profile: &KernelProfile, samples: usize) -> ValidationReport {
    let samples = samples.max(100);
    let mut clauses = Vec::new();

    // Nonnegativity on a sample grid over each support (a fixed window for
    // non-compact shapes).
    let mut min_val = f64::INFINITY;
    for (shape, edge_hint) in [
        (&profile.r_shape, 1.0),
        (&profile.k_shape, profile.r0.max(2.0)),
    ] {
        let edge = shape.support_radius();
        let hi = if edge.is_finite() {
            edge
        } else {
            2.0 * edge_hint
        };
        for i in 0..=samples {
            let r = hi * i as f64 / samples as f64;
            min_val = min_val.min(shape.value(r));
        }
    }
    clauses.push(ClauseCheck {
        clause: Clause::Nonnegativity,
        pass: min_val >= 0.0,
        detail: format!("min sampled value {min_val:e}"),
    });

    // Compact support: R vanishes beyond 1, K beyond r0.
    let mut beyond = 0.0f64;
    let mut compact = true;
    for (shape, edge) in [(&profile.r_shape, 1.0), (&profile.k_shape, profile.r0)] {
        if !shape.support_radius().is_finite() || shape.support_radius() > edge + EDGE_TOL {
            compact = false;
        }
        for i in 1..=samples {
            let r = edge + 2.0 * edge * i as f64 / samples as f64;
            beyond = beyond.max(shape.value(r).abs());
        }
    }
    let compact_pass = compact && beyond <= EDGE_TOL;
    clauses.push(ClauseCheck {
        clause: Clause::CompactSupport,
        pass: compact_pass,
        detail: format!("max |value| beyond support {beyond:e}"),
    });

    // Smoothness: value and two one-sided finite-difference derivatives
    // vanish at the support edge. Vacuous for non-compact shapes (they
    // already failed the support clause).
    let mut worst = 0.0f64;
    for shape in [&profile.r_shape, &profile.k_shape] {
        let edge = shape.support_radius();
        if !edge.is_finite() {
            continue;
        }
        let h = 1e-6 * edge.max(1.0);
        let f = |r: f64| shape.value(r);
        let v = f(edge);
        let d1 = (3.0 * f(edge) - 4.0 * f(edge - h) + f(edge - 2.0 * h)) / (2.0 * h);
        let d2 = (2.0 * f(edge) - 5.0 * f(edge - h) + 4.0 * f(edge - 2.0 * h) - f(edge - 3.0 * h))
            / (h * h);
        worst = worst.max(v.abs()).max(d1.abs()).max(d2.abs());
    }
    clauses.push(ClauseCheck {
        clause: Clause::Smoothness,
        pass: worst <= EDGE_TOL,
        detail: format!("max |value/derivative| at support edge {worst:e}"),
    });

    // Nondegeneracy floors: R >= delta0_r on [0, 1/2], K >= delta0_k on [0, 2].
    let mut r_min = f64::INFINITY;
    let mut k_min = f64::INFINITY;
    for i in 0..=samples {
        let t = i as f64 / samples as f64;
        r_min = r_min.min(profile.r_shape.value(0.5 * t));
        k_min = k_min.min(profile.k_shape.value(2.0 * t));
    }
    let nondeg_pass = r_min >= profile.delta0_r - 1e-12 && k_min >= profile.delta0_k - 1e-12;
    clauses.push(ClauseCheck {
        clause: Clause::Nondegeneracy,
        pass: nondeg_pass,
        detail: format!(
            "min R on [0,1/2] = {r_min:.6} (floor {}), min K on [0,2] = {k_min:.6} (floor {})",
            profile.delta0_r, profile.delta0_k
        ),
    });

    clauses.push(ClauseCheck {
        clause: Clause::SupportConstant,
        pass: profile.r0 >= 2.0,
        detail: format!("r0 = {}", profile.r0),
    });

    let pass = clauses.iter().all(|c| c.pass);
    ValidationReport {
        profile_id: profile.id.clone(),
        clauses,
        pass,
    }
}
