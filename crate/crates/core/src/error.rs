use std::path::PathBuf;

/// Errors produced by mesh loading, analysis, slicing and optimization.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed {format} data: {message}")]
    Parse { format: &'static str, message: String },

    #[error("mesh has no faces")]
    EmptyMesh,

    #[error("face {face} references vertex {index} but the mesh has {vertex_count} vertices")]
    FaceIndexOutOfRange {
        face: usize,
        index: usize,
        vertex_count: usize,
    },

    #[error("face {face} repeats a vertex index")]
    DegenerateFace { face: usize },

    #[error("rotation is not orthonormal (max |R^T R - I| = {deviation:e})")]
    NonOrthonormalRotation { deviation: f64 },

    #[error("invalid plane: {0}")]
    InvalidPlane(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("risk report is stale: computed for {report_vertices} vertices / {report_faces} faces, mesh has {mesh_vertices} / {mesh_faces}")]
    StaleReport {
        report_vertices: usize,
        report_faces: usize,
        mesh_vertices: usize,
        mesh_faces: usize,
    },

    #[error("decimation target of {target} vertices would degenerate the mesh")]
    DecimationTooAggressive { target: usize },

    #[error("decimation stalled at {reached} vertices, target {target}")]
    DecimationStalled { reached: usize, target: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(format: &'static str, message: impl Into<String>) -> Self {
        Error::Parse {
            format,
            message: message.into(),
        }
    }
}
