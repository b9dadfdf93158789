//! Manifolds, labeled regions, and uniform samplers.
//!
//! Three closed manifolds are supported, each with closed-form metric,
//! volume, and geodesics, so every downstream reference value is analytic:
//!
//! * circle of radius `scale` in `R^2` (`k = 1`),
//! * sphere of radius `scale` in `R^3` (`k = 2`),
//! * Clifford torus in `R^4` (`k = 2`), parametrized as
//!   `(a cos t, a sin t, a cos p, a sin p)` with `a = scale / sqrt(2)`, so
//!   every point sits at ambient norm `scale`.

pub mod labels;
pub mod reference;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::uniform01;

pub use labels::LabelFn;

use std::f64::consts::PI;

/// Relative tolerance for the on-manifold invariant of sampled clouds.
pub const ON_MANIFOLD_TOL: f64 = 1e-12;
/// Looser relative tolerance applied to externally supplied points.
pub const MEMBERSHIP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifoldKind {
    Circle,
    Sphere,
    CliffordTorus,
}

/// A closed manifold with its embedding scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManifoldSpec {
    pub kind: ManifoldKind,
    pub scale: f64,
}

impl ManifoldSpec {
    pub fn new(kind: ManifoldKind, scale: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::InvalidManifold(format!(
                "scale must be positive, got {scale}"
            )));
        }
        Ok(Self { kind, scale })
    }

    pub fn circle(scale: f64) -> Result<Self> {
        Self::new(ManifoldKind::Circle, scale)
    }

    pub fn sphere(scale: f64) -> Result<Self> {
        Self::new(ManifoldKind::Sphere, scale)
    }

    pub fn clifford_torus(scale: f64) -> Result<Self> {
        Self::new(ManifoldKind::CliffordTorus, scale)
    }

    /// Intrinsic dimension `k`.
    pub fn intrinsic_dim(&self) -> usize {
        match self.kind {
            ManifoldKind::Circle => 1,
            ManifoldKind::Sphere | ManifoldKind::CliffordTorus => 2,
        }
    }

    /// Ambient dimension `d`.
    pub fn ambient_dim(&self) -> usize {
        match self.kind {
            ManifoldKind::Circle => 2,
            ManifoldKind::Sphere => 3,
            ManifoldKind::CliffordTorus => 4,
        }
    }

    /// Closed-form volume `|M|`.
    pub fn volume(&self) -> f64 {
        match self.kind {
            ManifoldKind::Circle => 2.0 * PI * self.scale,
            ManifoldKind::Sphere => 4.0 * PI * self.scale * self.scale,
            // Flat torus with both circles of radius a = scale / sqrt(2).
            ManifoldKind::CliffordTorus => 2.0 * PI * PI * self.scale * self.scale,
        }
    }

    /// Radius of each factor circle of the Clifford torus.
    pub fn torus_factor_radius(&self) -> f64 {
        self.scale / std::f64::consts::SQRT_2
    }

    /// Map intrinsic coordinates to the ambient embedding.
    pub fn embed(&self, intrinsic: &[f64]) -> Vec<f64> {
        match self.kind {
            ManifoldKind::Circle => {
                let t = intrinsic[0];
                vec![self.scale * t.cos(), self.scale * t.sin()]
            }
            ManifoldKind::Sphere => {
                // (colatitude, longitude)
                let (colat, lon) = (intrinsic[0], intrinsic[1]);
                let s = colat.sin();
                vec![
                    self.scale * s * lon.cos(),
                    self.scale * s * lon.sin(),
                    self.scale * colat.cos(),
                ]
            }
            ManifoldKind::CliffordTorus => {
                let a = self.torus_factor_radius();
                let (t, p) = (intrinsic[0], intrinsic[1]);
                vec![a * t.cos(), a * t.sin(), a * p.cos(), a * p.sin()]
            }
        }
    }

    /// Recover intrinsic coordinates from an ambient point (assumed on M).
    pub fn intrinsic(&self, x: &[f64]) -> Vec<f64> {
        match self.kind {
            ManifoldKind::Circle => vec![x[1].atan2(x[0])],
            ManifoldKind::Sphere => {
                let colat = (x[2] / self.scale).clamp(-1.0, 1.0).acos();
                vec![colat, x[1].atan2(x[0])]
            }
            ManifoldKind::CliffordTorus => vec![x[1].atan2(x[0]), x[3].atan2(x[2])],
        }
    }

    /// Constraint residual measuring how far `x` is from the manifold.
    pub fn constraint_residual(&self, x: &[f64]) -> f64 {
        match self.kind {
            ManifoldKind::Circle | ManifoldKind::Sphere => (norm(x) - self.scale).abs(),
            ManifoldKind::CliffordTorus => {
                let a = self.torus_factor_radius();
                let r1 = (x[0] * x[0] + x[1] * x[1]).sqrt();
                let r2 = (x[2] * x[2] + x[3] * x[3]).sqrt();
                (r1 - a).abs().max((r2 - a).abs())
            }
        }
    }

    fn check_on_manifold(&self, x: &[f64], rel_tol: f64) -> Result<()> {
        if x.len() != self.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim(),
                got: x.len(),
            });
        }
        let residual = self.constraint_residual(x);
        let tol = rel_tol * self.scale;
        if residual > tol {
            return Err(Error::OffManifold { residual, tol });
        }
        Ok(())
    }

    /// Geodesic distance between two on-manifold points.
    pub fn geodesic_between(&self, x: &[f64], y: &[f64]) -> f64 {
        match self.kind {
            ManifoldKind::Circle => {
                let a = x[1].atan2(x[0]);
                let b = y[1].atan2(y[0]);
                self.scale * angular_distance(a, b)
            }
            ManifoldKind::Sphere => {
                let dot = (x[0] * y[0] + x[1] * y[1] + x[2] * y[2]) / (self.scale * self.scale);
                self.scale * dot.clamp(-1.0, 1.0).acos()
            }
            ManifoldKind::CliffordTorus => {
                let a = self.torus_factor_radius();
                let dt = angular_distance(x[1].atan2(x[0]), y[1].atan2(y[0]));
                let dp = angular_distance(x[3].atan2(x[2]), y[3].atan2(y[2]));
                a * (dt * dt + dp * dp).sqrt()
            }
        }
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Wrapped angular distance in `[0, pi]`.
pub fn angular_distance(a: f64, b: f64) -> f64 {
    let mut d = (a - b) % (2.0 * PI);
    if d < -PI {
        d += 2.0 * PI;
    } else if d > PI {
        d -= 2.0 * PI;
    }
    d.abs()
}

// --- regions ----------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    /// Circle arc of given geodesic half-width about `center = [theta0]`.
    Arc,
    /// Spherical cap about `center = [colatitude, longitude]`.
    Cap,
    /// Torus band `|theta - theta0| <= width` for all `phi`; `center = [theta0]`.
    Band,
}

/// A geodesic ball-like labeled region `D` on the manifold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSpec {
    pub manifold: ManifoldSpec,
    pub kind: RegionKind,
    /// Intrinsic coordinates of the region center.
    pub center: Vec<f64>,
    /// Geodesic radius (length units; half-width for arc/band).
    pub geodesic_radius: f64,
}

impl RegionSpec {
    pub fn new(
        manifold: ManifoldSpec,
        kind: RegionKind,
        center: Vec<f64>,
        geodesic_radius: f64,
    ) -> Result<Self> {
        let ok_kind = matches!(
            (manifold.kind, kind),
            (ManifoldKind::Circle, RegionKind::Arc)
                | (ManifoldKind::Sphere, RegionKind::Cap)
                | (ManifoldKind::CliffordTorus, RegionKind::Band)
        );
        if !ok_kind {
            return Err(Error::InvalidRegion(format!(
                "region kind {kind:?} does not match manifold kind {:?}",
                manifold.kind
            )));
        }
        let expected_center = match kind {
            RegionKind::Arc | RegionKind::Band => 1,
            RegionKind::Cap => 2,
        };
        if center.len() != expected_center {
            return Err(Error::InvalidRegion(format!(
                "{kind:?} region needs {expected_center} center coordinate(s), got {}",
                center.len()
            )));
        }
        // Proper nonempty subset: positive radius, strictly smaller than the
        // manifold's diameter in the constrained direction.
        let max_radius = match kind {
            RegionKind::Arc | RegionKind::Cap => PI * manifold.scale,
            RegionKind::Band => PI * manifold.torus_factor_radius(),
        };
        if !(geodesic_radius > 0.0 && geodesic_radius < max_radius) {
            return Err(Error::InvalidRegion(format!(
                "geodesic radius must lie in (0, {max_radius}), got {geodesic_radius}"
            )));
        }
        Ok(Self {
            manifold,
            kind,
            center,
            geodesic_radius,
        })
    }

    /// Angular radius of the region (`geodesic_radius` over the relevant
    /// metric radius).
    pub fn angular_radius(&self) -> f64 {
        match self.kind {
            RegionKind::Arc | RegionKind::Cap => self.geodesic_radius / self.manifold.scale,
            RegionKind::Band => self.geodesic_radius / self.manifold.torus_factor_radius(),
        }
    }

    /// Exact geodesic distance from an on-manifold point to `D` (zero inside).
    pub fn geodesic_distance(&self, x: &[f64]) -> Result<f64> {
        self.manifold.check_on_manifold(x, MEMBERSHIP_TOL)?;
        Ok(self.geodesic_distance_unchecked(x))
    }

    pub(crate) fn geodesic_distance_unchecked(&self, x: &[f64]) -> f64 {
        let rho = self.angular_radius();
        match self.kind {
            RegionKind::Arc => {
                let theta = x[1].atan2(x[0]);
                let gap = angular_distance(theta, self.center[0]) - rho;
                self.manifold.scale * gap.max(0.0)
            }
            RegionKind::Cap => {
                let c = self.manifold.embed(&self.center);
                let dot = (x[0] * c[0] + x[1] * c[1] + x[2] * c[2])
                    / (self.manifold.scale * self.manifold.scale);
                let gamma = dot.clamp(-1.0, 1.0).acos();
                self.manifold.scale * (gamma - rho).max(0.0)
            }
            RegionKind::Band => {
                let theta = x[1].atan2(x[0]);
                let gap = angular_distance(theta, self.center[0]) - rho;
                self.manifold.torus_factor_radius() * gap.max(0.0)
            }
        }
    }

    /// Membership test for `D` (closed region).
    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        Ok(self.geodesic_distance(x)? <= MEMBERSHIP_TOL * self.manifold.scale)
    }
}

/// Exact geodesic distance from a point to a labeled region, clamped at zero.
pub fn geodesic_distance_to_region(region: &RegionSpec, x: &[f64]) -> Result<f64> {
    region.geodesic_distance(x)
}

// --- point clouds -----------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    UniformRandom,
    QuasiUniform,
}

/// `n` unlabeled sample points of the manifold, stored flat (`n * d` floats).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub spec: ManifoldSpec,
    pub seed: u64,
    pub mode: SamplingMode,
    coords: Vec<f64>,
}

impl PointCloud {
    pub fn from_parts(
        spec: ManifoldSpec,
        seed: u64,
        mode: SamplingMode,
        coords: Vec<f64>,
    ) -> Result<Self> {
        let d = spec.ambient_dim();
        if coords.is_empty() || coords.len() % d != 0 {
            return Err(Error::EmptyPointList);
        }
        for p in coords.chunks_exact(d) {
            spec.check_on_manifold(p, MEMBERSHIP_TOL)?;
        }
        Ok(Self {
            spec,
            seed,
            mode,
            coords,
        })
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.spec.ambient_dim()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.spec.ambient_dim()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.coords[i * d..(i + 1) * d]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn iter_points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim())
    }

    /// Largest constraint residual over the cloud, relative to the scale.
    pub fn max_constraint_residual(&self) -> f64 {
        self.iter_points()
            .map(|p| self.spec.constraint_residual(p))
            .fold(0.0, f64::max)
            / self.spec.scale
    }
}

/// Draw `n` points of the manifold, uniform with respect to the volume
/// measure in `uniform_random` mode, equispaced / product-grid / Fibonacci
/// layouts in `quasi_uniform` mode. Deterministic per seed: point `i` is a
/// pure function of `(seed, i)` and may be generated on any thread.
pub fn sample_manifold(
    spec: &ManifoldSpec,
    n: usize,
    seed: u64,
    mode: SamplingMode,
) -> Result<PointCloud> {
    if n == 0 {
        return Err(Error::EmptyPointList);
    }
    let d = spec.ambient_dim();
    let mut coords = vec![0.0; n * d];
    let fill = |i: usize, out: &mut [f64]| {
        let intrinsic = match (spec.kind, mode) {
            (ManifoldKind::Circle, SamplingMode::QuasiUniform) => {
                vec![2.0 * PI * i as f64 / n as f64]
            }
            (ManifoldKind::Circle, SamplingMode::UniformRandom) => {
                vec![2.0 * PI * uniform01(seed, i as u64, 0)]
            }
            (ManifoldKind::Sphere, SamplingMode::QuasiUniform) => {
                // Fibonacci lattice: equal-area z ladder + golden-angle turns.
                let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
                let golden = PI * (3.0 - 5.0f64.sqrt());
                vec![z.clamp(-1.0, 1.0).acos(), golden * i as f64]
            }
            (ManifoldKind::Sphere, SamplingMode::UniformRandom) => {
                let z = 2.0 * uniform01(seed, i as u64, 0) - 1.0;
                let lon = 2.0 * PI * uniform01(seed, i as u64, 1);
                vec![z.clamp(-1.0, 1.0).acos(), lon]
            }
            (ManifoldKind::CliffordTorus, SamplingMode::QuasiUniform) => {
                let (rows, cols) = balanced_factors(n);
                let r = i / cols;
                let c = i % cols;
                vec![
                    2.0 * PI * r as f64 / rows as f64,
                    2.0 * PI * c as f64 / cols as f64,
                ]
            }
            (ManifoldKind::CliffordTorus, SamplingMode::UniformRandom) => {
                vec![
                    2.0 * PI * uniform01(seed, i as u64, 0),
                    2.0 * PI * uniform01(seed, i as u64, 1),
                ]
            }
        };
        out.copy_from_slice(&spec.embed(&intrinsic));
    };
    coords
        .par_chunks_mut(d)
        .enumerate()
        .for_each(|(i, chunk)| fill(i, chunk));
    Ok(PointCloud {
        spec: *spec,
        seed,
        mode,
        coords,
    })
}

/// Factor `n = rows * cols` with the factors as balanced as possible.
fn balanced_factors(n: usize) -> (usize, usize) {
    let mut best = (1, n);
    let mut d = 1;
    while d * d <= n {
        if n % d == 0 {
            best = (d, n / d);
        }
        d += 1;
    }
    best
}

// --- labeled sets -----------------------------------------------------------

/// `m` labeled sample points of the region `D` with values `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSet {
    pub region: RegionSpec,
    pub seed: u64,
    coords: Vec<f64>,
    values: Vec<f64>,
}

impl LabeledSet {
    pub fn from_parts(
        region: RegionSpec,
        seed: u64,
        coords: Vec<f64>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let d = region.manifold.ambient_dim();
        if coords.is_empty() || coords.len() % d != 0 {
            return Err(Error::EmptyLabeledSet);
        }
        if coords.len() / d != values.len() {
            return Err(Error::DimensionMismatch {
                expected: coords.len() / d,
                got: values.len(),
            });
        }
        for p in coords.chunks_exact(d) {
            if region.geodesic_distance(p)? > MEMBERSHIP_TOL * region.manifold.scale {
                return Err(Error::InvalidRegion(
                    "labeled point lies outside the region".into(),
                ));
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidRegion("label values must be finite".into()));
        }
        Ok(Self {
            region,
            seed,
            coords,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.region.manifold.ambient_dim()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.coords[i * d..(i + 1) * d]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter_points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim())
    }
}

/// Draw `m` uniform samples of the region and evaluate the label function at
/// each. Deterministic per seed.
pub fn sample_labeled(
    region: &RegionSpec,
    m: usize,
    seed: u64,
    label_fn: &LabelFn,
) -> Result<LabeledSet> {
    if m == 0 {
        return Err(Error::EmptyLabeledSet);
    }
    let spec = region.manifold;
    let d = spec.ambient_dim();
    let rho = region.angular_radius();
    let mut coords = vec![0.0; m * d];
    let fill = |i: usize, out: &mut [f64]| {
        let u0 = uniform01(seed, i as u64, 16);
        let u1 = uniform01(seed, i as u64, 17);
        let intrinsic = match region.kind {
            RegionKind::Arc => vec![region.center[0] + rho * (2.0 * u0 - 1.0)],
            RegionKind::Cap => {
                // Area-uniform on the cap about the pole, then rotated to the
                // cap center.
                let cos_gamma = 1.0 - u0 * (1.0 - rho.cos());
                let gamma = cos_gamma.clamp(-1.0, 1.0).acos();
                let beta = 2.0 * PI * u1;
                return rotate_cap_point(&spec, &region.center, gamma, beta, out);
            }
            RegionKind::Band => vec![region.center[0] + rho * (2.0 * u0 - 1.0), 2.0 * PI * u1],
        };
        out.copy_from_slice(&spec.embed(&intrinsic));
    };
    coords
        .par_chunks_mut(d)
        .enumerate()
        .for_each(|(i, chunk)| fill(i, chunk));
    let mut values = Vec::with_capacity(m);
    for p in coords.chunks_exact(d) {
        values.push(label_fn.eval(&spec, p)?);
    }
    LabeledSet::from_parts(region.clone(), seed, coords, values)
}

/// Place a point at polar angle `gamma`, azimuth `beta` about the cap center.
fn rotate_cap_point(spec: &ManifoldSpec, center: &[f64], gamma: f64, beta: f64, out: &mut [f64]) {
    let c = spec.embed(center);
    let r = spec.scale;
    let axis = [c[0] / r, c[1] / r, c[2] / r];
    point_about_axis(r, &axis, gamma, beta, out);
}

/// Point of the sphere of radius `scale` at polar angle `gamma` and azimuth
/// `beta` about the unit `axis`, using a deterministic tangent frame.
pub(crate) fn point_about_axis(
    scale: f64,
    axis: &[f64; 3],
    gamma: f64,
    beta: f64,
    out: &mut [f64],
) {
    let helper = if axis[2].abs() < 0.9 {
        [0.0, 0.0, 1.0]
    } else {
        [1.0, 0.0, 0.0]
    };
    let mut e1 = cross(&helper, axis);
    let n1 = norm(&e1);
    e1.iter_mut().for_each(|v| *v /= n1);
    let e2 = cross(axis, &e1);
    let (sg, cg) = gamma.sin_cos();
    let (sb, cb) = beta.sin_cos();
    for i in 0..3 {
        out[i] = scale * (sg * (cb * e1[i] + sb * e2[i]) + cg * axis[i]);
    }
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_circle() -> ManifoldSpec {
        ManifoldSpec::circle(1.0).unwrap()
    }

    fn quarter_arc() -> RegionSpec {
        RegionSpec::new(unit_circle(), RegionKind::Arc, vec![0.0], PI / 4.0).unwrap()
    }

    #[test]
    fn circle_quasi_uniform_equispaced() {
        let cloud = sample_manifold(&unit_circle(), 4, 0, SamplingMode::QuasiUniform).unwrap();
        let angles: Vec<f64> = cloud
            .iter_points()
            .map(|p| p[1].atan2(p[0]).rem_euclid(2.0 * PI))
            .collect();
        let expected = [0.0, PI / 2.0, PI, 3.0 * PI / 2.0];
        for (a, e) in angles.iter().zip(expected) {
            assert!((a - e).abs() < 1e-12, "{a} vs {e}");
        }
    }

    #[test]
    fn sphere_random_mean_is_small() {
        // Monte Carlo CLT bound 3 n^{-1/2} sqrt(3) ~ 0.016 at n = 1e5.
        let spec = ManifoldSpec::sphere(1.0).unwrap();
        let n = 100_000;
        let cloud = sample_manifold(&spec, n, 3, SamplingMode::UniformRandom).unwrap();
        let mut mean = [0.0; 3];
        for p in cloud.iter_points() {
            for (m, v) in mean.iter_mut().zip(p) {
                *m += v;
            }
        }
        let nf = n as f64;
        let mean_norm = (mean.iter().map(|m| (m / nf) * (m / nf)).sum::<f64>()).sqrt();
        assert!(mean_norm < 0.02, "mean norm {mean_norm}");
    }

    #[test]
    fn clifford_quasi_grid() {
        let spec = ManifoldSpec::clifford_torus(1.0).unwrap();
        let cloud = sample_manifold(&spec, 16, 0, SamplingMode::QuasiUniform).unwrap();
        // 4 x 4 angle grid, all points at ambient norm = scale.
        let mut thetas: Vec<f64> = cloud
            .iter_points()
            .map(|p| p[1].atan2(p[0]).rem_euclid(2.0 * PI))
            .collect();
        thetas.sort_by(f64::total_cmp);
        thetas.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        assert_eq!(thetas.len(), 4);
        for p in cloud.iter_points() {
            let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn samplers_stay_on_manifold() {
        for spec in [
            unit_circle(),
            ManifoldSpec::sphere(2.5).unwrap(),
            ManifoldSpec::clifford_torus(1.5).unwrap(),
        ] {
            for mode in [SamplingMode::UniformRandom, SamplingMode::QuasiUniform] {
                let cloud = sample_manifold(&spec, 500, 11, mode).unwrap();
                assert!(cloud.max_constraint_residual() <= ON_MANIFOLD_TOL);
            }
        }
    }

    #[test]
    fn sampling_is_deterministic_across_thread_counts() {
        let spec = ManifoldSpec::sphere(1.0).unwrap();
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| sample_manifold(&spec, 2000, 9, SamplingMode::UniformRandom).unwrap());
        let multi = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| sample_manifold(&spec, 2000, 9, SamplingMode::UniformRandom).unwrap());
        assert_eq!(single.coords(), multi.coords());
    }

    #[test]
    fn geodesic_distance_examples() {
        let region = quarter_arc();
        // Boundary point.
        let x = unit_circle().embed(&[PI / 4.0]);
        assert!(region.geodesic_distance(&x).unwrap().abs() < 1e-12);
        // Antipode of the center: min(pi - pi/4, 2 pi - pi/4 - pi) = 3 pi / 4.
        let x = unit_circle().embed(&[PI]);
        let d = region.geodesic_distance(&x).unwrap();
        assert!((d - 3.0 * PI / 4.0).abs() < 1e-12);
    }

    #[test]
    fn cap_distance_is_colatitude_minus_radius() {
        let sphere = ManifoldSpec::sphere(1.0).unwrap();
        let cap = RegionSpec::new(sphere, RegionKind::Cap, vec![0.0, 0.0], 0.5).unwrap();
        let x = sphere.embed(&[1.2, 0.3]);
        let d = cap.geodesic_distance(&x).unwrap();
        assert!((d - 0.7).abs() < 1e-12);
    }

    #[test]
    fn off_manifold_point_rejected() {
        let region = quarter_arc();
        assert!(matches!(
            region.geodesic_distance(&[2.0, 0.0]),
            Err(Error::OffManifold { .. })
        ));
    }

    #[test]
    fn labeled_constant_values() {
        let set = sample_labeled(&quarter_arc(), 3, 0, &LabelFn::constant(1.0)).unwrap();
        assert_eq!(set.values(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn labeled_sin_range_on_arc() {
        // sin on [-pi/4, pi/4] stays within [-sqrt2/2, sqrt2/2].
        let set = sample_labeled(&quarter_arc(), 500, 1, &LabelFn::SinTheta).unwrap();
        let bound = std::f64::consts::SQRT_2 / 2.0;
        for v in set.values() {
            assert!(v.abs() <= bound + 1e-12);
        }
    }

    #[test]
    fn cap_samples_stay_inside() {
        let sphere = ManifoldSpec::sphere(1.0).unwrap();
        let cap = RegionSpec::new(sphere, RegionKind::Cap, vec![0.0, 0.0], 0.5).unwrap();
        let set = sample_labeled(&cap, 100, 5, &LabelFn::coordinate(2)).unwrap();
        for p in set.iter_points() {
            assert!(cap.geodesic_distance(p).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn off_center_cap_samples_stay_inside() {
        let sphere = ManifoldSpec::sphere(1.0).unwrap();
        let cap = RegionSpec::new(sphere, RegionKind::Cap, vec![1.1, 2.0], 0.4).unwrap();
        let set = sample_labeled(&cap, 200, 5, &LabelFn::constant(2.0)).unwrap();
        for p in set.iter_points() {
            assert!(cap.geodesic_distance(p).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn band_samples_stay_inside() {
        let torus = ManifoldSpec::clifford_torus(1.0).unwrap();
        let band = RegionSpec::new(torus, RegionKind::Band, vec![PI], 0.3).unwrap();
        let set = sample_labeled(&band, 100, 2, &LabelFn::SinTheta).unwrap();
        for p in set.iter_points() {
            assert!(band.geodesic_distance(p).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn region_validation() {
        // Wrong kind for the manifold.
        assert!(RegionSpec::new(unit_circle(), RegionKind::Cap, vec![0.0, 0.0], 0.5).is_err());
        // Radius too large (region must be proper).
        assert!(RegionSpec::new(unit_circle(), RegionKind::Arc, vec![0.0], PI).is_err());
        assert!(RegionSpec::new(unit_circle(), RegionKind::Arc, vec![0.0], 0.0).is_err());
    }

    #[test]
    fn balanced_factors_examples() {
        assert_eq!(balanced_factors(16), (4, 4));
        assert_eq!(balanced_factors(20000), (125, 160));
        assert_eq!(balanced_factors(7), (1, 7));
    }

    #[test]
    fn geodesic_between_on_torus() {
        let spec = ManifoldSpec::clifford_torus(1.0).unwrap();
        let a = spec.embed(&[0.0, 0.0]);
        let b = spec.embed(&[0.3, 0.4]);
        let d = spec.geodesic_between(&a, &b);
        assert!((d - spec.torus_factor_radius() * 0.5).abs() < 1e-12);
    }
}
