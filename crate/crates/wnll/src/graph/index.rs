//! Fixed-radius neighbor search on a uniform cell grid.
//!
//! Cell size equals the radius the index was built for, so a query at that
//! radius scans the 3^d neighborhood. Queries at larger radii widen the cell
//! window accordingly; there are no misses at any radius.

use crate::error::{Error, Result};
use std::collections::HashMap;

#[derive(Debug, Clone)]
pub struct NeighborIndex {
    coords: Vec<f64>,
    dim: usize,
    cell_size: f64,
    origin: [f64; 4],
    cells: HashMap<[i32; 4], Vec<u32>>,
}

#[inline(always)]
pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    match a.len() {
        2 => {
            let dx = a[0] - b[0];
            let dy = a[1] - b[1];
            dx * dx + dy * dy
        }
        3 => {
            let dx = a[0] - b[0];
            let dy = a[1] - b[1];
            let dz = a[2] - b[2];
            dx * dx + dy * dy + dz * dz
        }
        4 => {
            let dx = a[0] - b[0];
            let dy = a[1] - b[1];
            let dz = a[2] - b[2];
            let dw = a[3] - b[3];
            dx * dx + dy * dy + dz * dz + dw * dw
        }
        _ => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum(),
    }
}

impl NeighborIndex {
    /// Build an index over `points` (flat, `dim` coordinates each) for
    /// queries at `radius`.
    pub fn build(points: &[f64], dim: usize, radius: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyPointList);
        }
        if !(radius > 0.0) {
            return Err(Error::Config(format!(
                "neighbor radius must be positive, got {radius}"
            )));
        }
        if dim == 0 || dim > 4 || points.len() % dim != 0 {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: points.len(),
            });
        }
        let mut origin = [f64::INFINITY; 4];
        for p in points.chunks_exact(dim) {
            for (o, v) in origin.iter_mut().zip(p) {
                *o = o.min(*v);
            }
        }
        for o in origin.iter_mut().skip(dim) {
            *o = 0.0;
        }
        let n = points.len() / dim;
        let mut cells: HashMap<[i32; 4], Vec<u32>> = HashMap::new();
        for i in 0..n {
            let key = Self::key_of(&points[i * dim..(i + 1) * dim], &origin, radius);
            // Inserting in index order keeps every cell list ascending.
            cells.entry(key).or_default().push(i as u32);
        }
        Ok(Self {
            coords: points.to_vec(),
            dim,
            cell_size: radius,
            origin,
            cells,
        })
    }

    fn key_of(p: &[f64], origin: &[f64; 4], cell: f64) -> [i32; 4] {
        let mut key = [0i32; 4];
        for (k, (v, o)) in key.iter_mut().zip(p.iter().zip(origin)) {
            *k = ((v - o) / cell).floor() as i32;
        }
        key
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// Visit all points within `radius` of `x` (inclusive), in a fixed
    /// deterministic order (cell scan order, ascending index within a cell).
    pub fn for_each_within<F: FnMut(u32, f64)>(&self, x: &[f64], radius: f64, mut f: F) {
        let r2 = radius * radius;
        let w = (radius / self.cell_size).ceil() as i32;
        let center = Self::key_of(x, &self.origin, self.cell_size);
        let dims = self.dim as u32;
        let span = (2 * w + 1) as i64;
        let count = span.pow(dims);
        for c in 0..count {
            let mut rem = c;
            let mut key = center;
            for k in key.iter_mut().take(self.dim) {
                *k += (rem % span) as i32 - w;
                rem /= span;
            }
            if let Some(list) = self.cells.get(&key) {
                for &j in list {
                    let d2 = dist2(x, self.point(j as usize));
                    if d2 <= r2 {
                        f(j, d2);
                    }
                }
            }
        }
    }

    /// Like [`for_each_within`](Self::for_each_within) for the stored point
    /// `i`, restricted to indices `j >= i`. This is the half-pair enumeration
    /// used by the affinity assembly.
    pub fn for_each_within_ge<F: FnMut(u32, f64)>(&self, i: usize, radius: f64, mut f: F) {
        let x = self.point(i);
        let r2 = radius * radius;
        let w = (radius / self.cell_size).ceil() as i32;
        let center = Self::key_of(x, &self.origin, self.cell_size);
        let span = (2 * w + 1) as i64;
        let count = span.pow(self.dim as u32);
        let lo = i as u32;
        for c in 0..count {
            let mut rem = c;
            let mut key = center;
            for k in key.iter_mut().take(self.dim) {
                *k += (rem % span) as i32 - w;
                rem /= span;
            }
            if let Some(list) = self.cells.get(&key) {
                // Cell lists are ascending; skip the j < i prefix.
                let start = list.partition_point(|&j| j < lo);
                for &j in &list[start..] {
                    let d2 = dist2(x, self.point(j as usize));
                    if d2 <= r2 {
                        f(j, d2);
                    }
                }
            }
        }
    }

    /// Collect indices within `radius` of `x`, sorted ascending.
    pub fn query(&self, x: &[f64], radius: f64) -> Vec<u32> {
        let mut out = Vec::new();
        self.for_each_within(x, radius, |j, _| out.push(j));
        out.sort_unstable();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{sample_manifold, ManifoldSpec, SamplingMode};

    #[test]
    fn two_points_within_radius_find_each_other() {
        let points = [0.0, 0.0, 0.5, 0.0];
        let index = NeighborIndex::build(&points, 2, 1.0).unwrap();
        assert_eq!(index.query(&[0.0, 0.0], 1.0), vec![0, 1]);
        assert_eq!(index.query(&[0.5, 0.0], 1.0), vec![0, 1]);
    }

    #[test]
    fn distant_points_only_see_themselves() {
        let points = [0.0, 0.0, 1.5, 0.0];
        let index = NeighborIndex::build(&points, 2, 1.0).unwrap();
        assert_eq!(index.query(&[0.0, 0.0], 1.0), vec![0]);
        assert_eq!(index.query(&[1.5, 0.0], 1.0), vec![1]);
    }

    #[test]
    fn matches_brute_force_on_random_circle() {
        let spec = ManifoldSpec::circle(1.0).unwrap();
        let cloud = sample_manifold(&spec, 1000, 4, SamplingMode::UniformRandom).unwrap();
        let radius = 0.2;
        let index = NeighborIndex::build(cloud.coords(), 2, radius).unwrap();
        for i in 0..cloud.len() {
            let got = index.query(cloud.point(i), radius);
            let expected: Vec<u32> = (0..cloud.len() as u32)
                .filter(|&j| dist2(cloud.point(i), cloud.point(j as usize)) <= radius * radius)
                .collect();
            assert_eq!(got, expected, "point {i}");
        }
    }

    #[test]
    fn wide_queries_have_no_misses() {
        let spec = ManifoldSpec::circle(1.0).unwrap();
        let cloud = sample_manifold(&spec, 400, 7, SamplingMode::UniformRandom).unwrap();
        // Build for a small radius, query triple that.
        let index = NeighborIndex::build(cloud.coords(), 2, 0.1).unwrap();
        let radius = 0.3;
        for i in (0..cloud.len()).step_by(17) {
            let got = index.query(cloud.point(i), radius);
            let expected: Vec<u32> = (0..cloud.len() as u32)
                .filter(|&j| dist2(cloud.point(i), cloud.point(j as usize)) <= radius * radius)
                .collect();
            assert_eq!(got, expected);
        }
    }

    #[test]
    fn ge_enumeration_covers_all_half_pairs() {
        let spec = ManifoldSpec::circle(1.0).unwrap();
        let cloud = sample_manifold(&spec, 300, 9, SamplingMode::UniformRandom).unwrap();
        let radius = 0.25;
        let index = NeighborIndex::build(cloud.coords(), 2, radius).unwrap();
        let mut got = Vec::new();
        for i in 0..cloud.len() {
            index.for_each_within_ge(i, radius, |j, _| got.push((i as u32, j)));
        }
        got.sort_unstable();
        let mut expected = Vec::new();
        for i in 0..cloud.len() as u32 {
            for j in i..cloud.len() as u32 {
                if dist2(cloud.point(i as usize), cloud.point(j as usize)) <= radius * radius {
                    expected.push((i, j));
                }
            }
        }
        expected.sort_unstable();
        assert_eq!(got.len(), expected.len());
        assert_eq!(got, expected);
    }

    #[test]
    fn empty_input_rejected() {
        assert!(NeighborIndex::build(&[], 2, 1.0).is_err());
    }
}
