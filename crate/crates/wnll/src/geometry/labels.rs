//! Label function registry.
//!
//! Functions cross the config/CLI boundary by name, so only registered
//! functions (with registered intrinsic second derivatives where needed) can
//! drive the analytic Laplace-Beltrami reference.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{ManifoldKind, ManifoldSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum LabelFn {
    /// Constant `c`.
    Const(f64),
    /// Ambient coordinate projection `x -> x[axis]`.
    Coordinate(usize),
    /// Sine of the first parametric angle (circle and Clifford torus; not
    /// smooth on the sphere).
    SinTheta,
    /// A registered base function shifted by a constant.
    Offset { base: Box<LabelFn>, offset: f64 },
    /// Periodic linear interpolation of `(angle, value)` samples in the first
    /// parametric angle. No registered derivatives.
    Tabulated { angles: Vec<f64>, values: Vec<f64> },
}

impl LabelFn {
    pub fn constant(c: f64) -> Self {
        LabelFn::Const(c)
    }

    pub fn coordinate(axis: usize) -> Self {
        LabelFn::Coordinate(axis)
    }

    pub fn offset(base: LabelFn, offset: f64) -> Self {
        LabelFn::Offset {
            base: Box::new(base),
            offset,
        }
    }

    /// Registry id, when the function is expressible as one.
    pub fn id(&self) -> Option<String> {
        match self {
            LabelFn::Const(c) => Some(format!("const:{c}")),
            LabelFn::Coordinate(a) => Some(format!("coord:{a}")),
            LabelFn::SinTheta => Some("sin_theta".to_string()),
            _ => None,
        }
    }

    /// Parse a registry id such as `sin_theta`, `const:1.5`, or `coord:2`.
    pub fn from_id(id: &str) -> Result<Self> {
        if id == "sin_theta" {
            return Ok(LabelFn::SinTheta);
        }
        if let Some(v) = id.strip_prefix("const:") {
            let c: f64 = v
                .parse()
                .map_err(|_| Error::LabelFn(id.into(), "bad constant".into()))?;
            return Ok(LabelFn::Const(c));
        }
        if let Some(v) = id.strip_prefix("coord:") {
            let a: usize = v
                .parse()
                .map_err(|_| Error::LabelFn(id.into(), "bad axis".into()))?;
            return Ok(LabelFn::Coordinate(a));
        }
        Err(Error::LabelFn(id.into(), "unknown label function".into()))
    }

    /// Evaluate at an ambient point of the manifold.
    pub fn eval(&self, spec: &ManifoldSpec, x: &[f64]) -> Result<f64> {
        match self {
            LabelFn::Const(c) => Ok(*c),
            LabelFn::Coordinate(axis) => {
                if *axis >= spec.ambient_dim() {
                    return Err(Error::LabelFn(
                        format!("coord:{axis}"),
                        format!("axis out of range for d = {}", spec.ambient_dim()),
                    ));
                }
                Ok(x[*axis])
            }
            LabelFn::SinTheta => match spec.kind {
                ManifoldKind::Circle | ManifoldKind::CliffordTorus => Ok(x[1].atan2(x[0]).sin()),
                ManifoldKind::Sphere => Err(Error::LabelFn(
                    "sin_theta".into(),
                    "not smooth on the sphere (undefined at the poles)".into(),
                )),
            },
            LabelFn::Offset { base, offset } => Ok(base.eval(spec, x)? + offset),
            LabelFn::Tabulated { angles, values } => match spec.kind {
                ManifoldKind::Circle | ManifoldKind::CliffordTorus => {
                    let theta = x[1].atan2(x[0]);
                    Ok(interp_periodic(angles, values, theta))
                }
                ManifoldKind::Sphere => Err(Error::LabelFn(
                    "tabulated".into(),
                    "tabulated functions are parametrized by the first angle".into(),
                )),
            },
        }
    }

    /// Whether an analytic Laplace-Beltrami expression is registered on the
    /// given manifold.
    pub fn has_laplacian(&self, spec: &ManifoldSpec) -> bool {
        match self {
            LabelFn::Const(_) | LabelFn::Coordinate(_) => true,
            LabelFn::SinTheta => spec.kind != ManifoldKind::Sphere,
            LabelFn::Offset { base, .. } => base.has_laplacian(spec),
            LabelFn::Tabulated { .. } => false,
        }
    }
}

fn interp_periodic(angles: &[f64], values: &[f64], theta: f64) -> f64 {
    debug_assert!(angles.len() == values.len() && !angles.is_empty());
    // Nearest bracketing nodes in wrapped angle.
    let two_pi = std::f64::consts::TAU;
    let t = theta.rem_euclid(two_pi);
    let mut best_left = 0;
    let mut left_gap = f64::INFINITY;
    for (i, a) in angles.iter().enumerate() {
        let gap = (t - a.rem_euclid(two_pi)).rem_euclid(two_pi);
        if gap < left_gap {
            left_gap = gap;
            best_left = i;
        }
    }
    let mut best_right = 0;
    let mut right_gap = f64::INFINITY;
    for (i, a) in angles.iter().enumerate() {
        let gap = (a.rem_euclid(two_pi) - t).rem_euclid(two_pi);
        if gap < right_gap {
            right_gap = gap;
            best_right = i;
        }
    }
    let span = left_gap + right_gap;
    if span == 0.0 {
        values[best_left]
    } else {
        (values[best_left] * right_gap + values[best_right] * left_gap) / span
    }
}

/// Analytic `Delta_M f(x)` from the closed-form metric of the manifold.
pub fn laplace_beltrami_reference(spec: &ManifoldSpec, f: &LabelFn, x: &[f64]) -> Result<f64> {
    let r = spec.scale;
    match f {
        LabelFn::Const(_) => Ok(0.0),
        LabelFn::Coordinate(axis) => {
            if *axis >= spec.ambient_dim() {
                return Err(Error::LabelFn(
                    format!("coord:{axis}"),
                    "axis out of range".into(),
                ));
            }
            match spec.kind {
                // Coordinates are eigenfunctions: f'' = -f in the angle.
                ManifoldKind::Circle => Ok(-x[*axis] / (r * r)),
                // Degree-1 spherical harmonics: eigenvalue -l(l+1)/r^2 = -2/r^2.
                ManifoldKind::Sphere => Ok(-2.0 * x[*axis] / (r * r)),
                // Each coordinate depends on a single angle of the flat metric.
                ManifoldKind::CliffordTorus => {
                    let a = spec.torus_factor_radius();
                    Ok(-x[*axis] / (a * a))
                }
            }
        }
        LabelFn::SinTheta => {
            let value = f.eval(spec, x)?;
            match spec.kind {
                ManifoldKind::Circle => Ok(-value / (r * r)),
                ManifoldKind::CliffordTorus => {
                    let a = spec.torus_factor_radius();
                    Ok(-value / (a * a))
                }
                ManifoldKind::Sphere => unreachable!("eval rejects sin_theta on the sphere"),
            }
        }
        LabelFn::Offset { base, .. } => laplace_beltrami_reference(spec, base, x),
        LabelFn::Tabulated { .. } => Err(Error::LabelFn(
            "tabulated".into(),
            "no registered second derivatives".into(),
        )),
    }
}

// --- serde: accept either a registry id string or a tagged object ----------

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum TaggedLabelFn {
    Const {
        value: f64,
    },
    Coordinate {
        axis: usize,
    },
    SinTheta,
    Offset {
        base: Box<TaggedLabelFn>,
        offset: f64,
    },
    Tabulated {
        angles: Vec<f64>,
        values: Vec<f64>,
    },
}

impl From<&LabelFn> for TaggedLabelFn {
    fn from(f: &LabelFn) -> Self {
        match f {
            LabelFn::Const(value) => TaggedLabelFn::Const { value: *value },
            LabelFn::Coordinate(axis) => TaggedLabelFn::Coordinate { axis: *axis },
            LabelFn::SinTheta => TaggedLabelFn::SinTheta,
            LabelFn::Offset { base, offset } => TaggedLabelFn::Offset {
                base: Box::new(base.as_ref().into()),
                offset: *offset,
            },
            LabelFn::Tabulated { angles, values } => TaggedLabelFn::Tabulated {
                angles: angles.clone(),
                values: values.clone(),
            },
        }
    }
}

impl From<TaggedLabelFn> for LabelFn {
    fn from(f: TaggedLabelFn) -> Self {
        match f {
            TaggedLabelFn::Const { value } => LabelFn::Const(value),
            TaggedLabelFn::Coordinate { axis } => LabelFn::Coordinate(axis),
            TaggedLabelFn::SinTheta => LabelFn::SinTheta,
            TaggedLabelFn::Offset { base, offset } => LabelFn::Offset {
                base: Box::new((*base).into()),
                offset,
            },
            TaggedLabelFn::Tabulated { angles, values } => LabelFn::Tabulated { angles, values },
        }
    }
}

impl Serialize for LabelFn {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self.id() {
            Some(id) => serializer.serialize_str(&id),
            None => TaggedLabelFn::from(self).serialize(serializer),
        }
    }
}

impl<'de> Deserialize<'de> for LabelFn {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Id(String),
            Tagged(TaggedLabelFn),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Id(id) => LabelFn::from_id(&id).map_err(D::Error::custom),
            Repr::Tagged(t) => Ok(t.into()),
        }
    }
}
