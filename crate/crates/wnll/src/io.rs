//! File formats.
//!
//! Point clouds serialize to CSV with header `x0,...,x{d-1}` (labeled sets
//! add a `b` column) and to JSON envelopes carrying the sampling metadata.
//! All numbers are written as shortest-roundtrip decimal text, so a save
//! followed by a load reproduces every value bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{LabeledSet, PointCloud};
use crate::solver::{Solution, SolveStats};

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_text(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(path, e))?;
        }
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn coord_header(dim: usize, with_b: bool) -> String {
    let mut cols: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
    if with_b {
        cols.push("b".to_string());
    }
    cols.join(",")
}

fn parse_f64(path: &Path, line: usize, field: &str) -> Result<f64> {
    field.trim().parse().map_err(|_| Error::Malformed {
        path: path.display().to_string(),
        line,
        msg: format!("expected a number, got `{field}`"),
    })
}

/// Write cloud coordinates as CSV.
pub fn save_points_csv(path: &Path, coords: &[f64], dim: usize) -> Result<()> {
    let mut out = String::new();
    out.push_str(&coord_header(dim, false));
    out.push('\n');
    for p in coords.chunks_exact(dim) {
        for (k, v) in p.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    write_text(path, &out)
}

/// Read raw points from CSV; returns `(dim, coords)`.
pub fn load_points_csv(path: &Path) -> Result<(usize, Vec<f64>)> {
    let text = read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::Malformed {
        path: path.display().to_string(),
        line: 1,
        msg: "empty file".into(),
    })?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let dim = cols.len();
    for (i, c) in cols.iter().enumerate() {
        if *c != format!("x{i}") {
            return Err(Error::Malformed {
                path: path.display().to_string(),
                line: 1,
                msg: format!("expected header column `x{i}`, got `{c}`"),
            });
        }
    }
    let mut coords = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dim {
            return Err(Error::Malformed {
                path: path.display().to_string(),
                line: idx + 1,
                msg: format!("expected {dim} fields, got {}", fields.len()),
            });
        }
        for f in fields {
            coords.push(parse_f64(path, idx + 1, f)?);
        }
    }
    if coords.is_empty() {
        return Err(Error::Malformed {
            path: path.display().to_string(),
            line: 1,
            msg: "no data rows".into(),
        });
    }
    Ok((dim, coords))
}

/// Write labeled points (`b` column appended) as CSV.
pub fn save_labeled_csv(path: &Path, coords: &[f64], values: &[f64], dim: usize) -> Result<()> {
    let mut out = String::new();
    out.push_str(&coord_header(dim, true));
    out.push('\n');
    for (p, b) in coords.chunks_exact(dim).zip(values) {
        for v in p {
            let _ = write!(out, "{v},");
        }
        let _ = writeln!(out, "{b}");
    }
    write_text(path, &out)
}

/// Read labeled points from CSV; returns `(dim, coords, values)`.
pub fn load_labeled_csv(path: &Path) -> Result<(usize, Vec<f64>, Vec<f64>)> {
    let text = read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::Malformed {
        path: path.display().to_string(),
        line: 1,
        msg: "empty file".into(),
    })?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.len() < 2 || cols.last() != Some(&"b") {
        return Err(Error::Malformed {
            path: path.display().to_string(),
            line: 1,
            msg: "labeled CSV needs coordinate columns followed by `b`".into(),
        });
    }
    let dim = cols.len() - 1;
    let mut coords = Vec::new();
    let mut values = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dim + 1 {
            return Err(Error::Malformed {
                path: path.display().to_string(),
                line: idx + 1,
                msg: format!("expected {} fields, got {}", dim + 1, fields.len()),
            });
        }
        for f in &fields[..dim] {
            coords.push(parse_f64(path, idx + 1, f)?);
        }
        values.push(parse_f64(path, idx + 1, fields[dim])?);
    }
    if values.is_empty() {
        return Err(Error::Malformed {
            path: path.display().to_string(),
            line: 1,
            msg: "no data rows".into(),
        });
    }
    Ok((dim, coords, values))
}

pub fn save_cloud_csv(path: &Path, cloud: &PointCloud) -> Result<()> {
    save_points_csv(path, cloud.coords(), cloud.dim())
}

pub fn save_labeled_set_csv(path: &Path, labeled: &LabeledSet) -> Result<()> {
    save_labeled_csv(path, labeled.coords(), labeled.values(), labeled.dim())
}

/// Solution CSV: coordinates, value, labeled flag — cloud rows then labeled
/// rows.
pub fn save_solution_csv(
    path: &Path,
    cloud_coords: &[f64],
    labeled_coords: &[f64],
    labeled_values: &[f64],
    dim: usize,
    solution: &Solution,
) -> Result<()> {
    let mut out = String::new();
    out.push_str(&coord_header(dim, false));
    out.push_str(",u,labeled\n");
    for (p, u) in cloud_coords.chunks_exact(dim).zip(&solution.u) {
        for v in p {
            let _ = write!(out, "{v},");
        }
        let _ = writeln!(out, "{u},0");
    }
    for (p, b) in labeled_coords.chunks_exact(dim).zip(labeled_values) {
        for v in p {
            let _ = write!(out, "{v},");
        }
        let _ = writeln!(out, "{b},1");
    }
    write_text(path, &out)
}

/// Pretty-printed JSON for any serializable object.
pub fn save_json<T: Serialize>(path: &Path, object: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(object)?;
    write_text(path, &text)
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Save then reload an object through its JSON envelope; the result is
/// bitwise identical to the input.
pub fn io_roundtrip<T: Serialize + DeserializeOwned>(path: &Path, object: &T) -> Result<T> {
    save_json(path, object)?;
    load_json(path)
}

pub fn save_solve_stats(path: &Path, stats: &SolveStats) -> Result<()> {
    save_json(path, stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{
        sample_labeled, sample_manifold, LabelFn, ManifoldSpec, RegionKind, RegionSpec,
        SamplingMode,
    };
    use std::f64::consts::PI;

    fn tmp(name: &str) -> std::path::PathBuf {
        let mut p = std::env::temp_dir();
        p.push(format!("wnll_io_{}_{}", std::process::id(), name));
        p
    }

    #[test]
    fn cloud_csv_roundtrip_is_bitwise() {
        let spec = ManifoldSpec::circle(1.0).unwrap();
        let cloud = sample_manifold(&spec, 10, 3, SamplingMode::UniformRandom).unwrap();
        let path = tmp("cloud.csv");
        save_cloud_csv(&path, &cloud).unwrap();
        let (dim, coords) = load_points_csv(&path).unwrap();
        assert_eq!(dim, 2);
        assert_eq!(coords, cloud.coords());
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn labeled_csv_roundtrip_is_bitwise() {
        let spec = ManifoldSpec::circle(1.0).unwrap();
        let region = RegionSpec::new(spec, RegionKind::Arc, vec![0.0], PI / 4.0).unwrap();
        let labeled = sample_labeled(&region, 7, 5, &LabelFn::SinTheta).unwrap();
        let path = tmp("labeled.csv");
        save_labeled_set_csv(&path, &labeled).unwrap();
        let (dim, coords, values) = load_labeled_csv(&path).unwrap();
        assert_eq!(dim, 2);
        assert_eq!(coords, labeled.coords());
        assert_eq!(values, labeled.values());
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn json_roundtrip_cloud_and_labeled() {
        let spec = ManifoldSpec::sphere(1.0).unwrap();
        let cloud = sample_manifold(&spec, 25, 9, SamplingMode::UniformRandom).unwrap();
        let path = tmp("cloud.json");
        let back: PointCloud = io_roundtrip(&path, &cloud).unwrap();
        assert_eq!(back, cloud);
        std::fs::remove_file(&path).ok();

        let region = RegionSpec::new(spec, RegionKind::Cap, vec![0.0, 0.0], 0.5).unwrap();
        let labeled = sample_labeled(&region, 5, 2, &LabelFn::coordinate(2)).unwrap();
        let path = tmp("labeled.json");
        let back: LabeledSet = io_roundtrip(&path, &labeled).unwrap();
        assert_eq!(back, labeled);
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn malformed_csv_reports_line_numbers() {
        let path = tmp("bad.csv");
        std::fs::write(&path, "x0,x1\n1.0,2.0\n3.0,oops\n").unwrap();
        match load_points_csv(&path) {
            Err(Error::Malformed { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected malformed error, got {other:?}"),
        }
        std::fs::write(&path, "x0,y1\n1.0,2.0\n").unwrap();
        match load_points_csv(&path) {
            Err(Error::Malformed { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected malformed header error, got {other:?}"),
        }
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn solution_csv_has_labeled_flags() {
        let spec = ManifoldSpec::circle(1.0).unwrap();
        let cloud = sample_manifold(&spec, 3, 0, SamplingMode::QuasiUniform).unwrap();
        let region = RegionSpec::new(spec, RegionKind::Arc, vec![0.0], PI / 4.0).unwrap();
        let labeled = sample_labeled(&region, 2, 1, &LabelFn::constant(1.0)).unwrap();
        let sol = Solution {
            u: vec![0.5, 0.25, -0.5],
        };
        let path = tmp("solution.csv");
        save_solution_csv(
            &path,
            cloud.coords(),
            labeled.coords(),
            labeled.values(),
            2,
            &sol,
        )
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x0,x1,u,labeled");
        assert_eq!(lines.len(), 6);
        assert!(lines[1].ends_with(",0"));
        assert!(lines[5].ends_with(",1"));
        std::fs::remove_file(&path).ok();
    }
}
