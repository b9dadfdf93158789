use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported manifold kind: {0}")]
    UnsupportedManifold(String),

    #[error("invalid manifold spec: {0}")]
    InvalidManifold(String),

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error(
        "point is off the manifold (constraint residual {residual:e} exceeds tolerance {tol:e})"
    )]
    OffManifold { residual: f64, tol: f64 },

    #[error("label function `{0}` is not usable here: {1}")]
    LabelFn(String, String),

    #[error("empty point list")]
    EmptyPointList,

    #[error("labeled set must contain at least one point")]
    EmptyLabeledSet,

    #[error("invalid kernel profile: {0}")]
    InvalidProfile(String),

    #[error("kernel bandwidth must be positive, got {0}")]
    NonpositiveDelta(f64),

    #[error("weight mu must be positive, got {0}")]
    NonpositiveMu(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dense solve supports n <= {max}, got n = {n}")]
    DenseSizeExceeded { n: usize, max: usize },

    #[error(
        "dense factorization hit a nonpositive pivot at row {row} (singular or indefinite system)"
    )]
    SingularFactor { row: usize },

    #[error("quadrature did not converge to {tol:e} within resolution {max_resolution}")]
    QuadratureNonConvergence { tol: f64, max_resolution: usize },

    #[error("reference oracle did not converge: {0}")]
    OracleNonConvergence(String),

    #[error("sphere reference requires axisymmetric labeled data: {0}")]
    NonAxisymmetric(String),

    #[error("query at geodesic distance {dist} from the region; must exceed {required}")]
    QueryTooCloseToRegion { dist: f64, required: f64 },

    #[error("affinity graph would need {needed} bytes of edge storage, budget is {budget}")]
    GraphTooLarge { needed: usize, budget: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}:{line}: malformed file: {msg}")]
    Malformed {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
