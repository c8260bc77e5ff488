use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("degenerate tetrahedron {tet}: volume {volume:e} below threshold {threshold:e}")]
    DegenerateTet {
        tet: usize,
        volume: f64,
        threshold: f64,
    },

    #[error("non-manifold face {face:?} shared by more than two tetrahedra")]
    NonManifoldFace { face: [u32; 3] },

    #[error("unknown analytic field `{0}`")]
    UnknownField(String),

    #[error("mesh file line {line}: {message}")]
    MeshFormat { line: usize, message: String },

    #[error("invalid solver configuration: {0}")]
    InvalidSolver(String),

    #[error("invalid workload: {0}")]
    InvalidWorkload(String),

    #[error("flow-map lattice too small: {0:?} (need at least 3 points per axis)")]
    LatticeTooSmall([usize; 3]),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("invalid cost specification: {0}")]
    InvalidCostSpec(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
