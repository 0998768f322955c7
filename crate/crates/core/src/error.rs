use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by mesh handling, assembly, solves and the optimization driver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed mesh file (line {line}): {msg}")]
    MalformedMesh { line: usize, msg: String },

    #[error("unknown physical group `{0}`")]
    UnknownPhysicalGroup(String),

    #[error("cell {cell} has non-positive area {area:e}")]
    DegenerateCell { cell: usize, area: f64 },

    #[error("boundary edge ({0}, {1}) carries no boundary tag")]
    UntaggedBoundaryEdge(usize, usize),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("boundary tag {0} not present in mesh")]
    UnknownTag(String),

    #[error("periodic pairing failed: {0}")]
    Pairing(String),

    #[error("singular matrix: zero pivot at dof {dof}")]
    SingularMatrix { dof: usize },

    #[error("linear solve inaccurate: relative residual {residual:e} exceeds {tolerance:e}")]
    InaccurateSolve { residual: f64, tolerance: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("field belongs to mesh generation {field}, mesh is generation {mesh}")]
    StaleField { field: u64, mesh: u64 },

    #[error("regime mismatch: {0}")]
    RegimeMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty selection: {0}")]
    EmptySelection(String),

    #[error("degenerate cluster {cluster}: {msg}")]
    DegenerateCluster { cluster: usize, msg: String },

    #[error("no beneficial obstacle found at this threshold")]
    NoBeneficialObstacle,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
