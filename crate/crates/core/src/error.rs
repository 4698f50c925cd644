use thiserror::Error;

/// Errors produced by the packing engine and its supporting modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("shape `{name}` does not fit the container in any orientation")]
    ShapeTooLarge { name: String },

    #[error("object `{0}` has no occupied voxels")]
    EmptyObject(String),

    #[error("malformed object document: {0}")]
    MalformedDocument(String),

    #[error("footprint at ({x}, {y}) with size {w}x{d} leaves the container")]
    OutOfBounds { x: usize, y: usize, w: usize, d: usize },

    #[error("heightmap is {got_w}x{got_d}, grid expects {want_w}x{want_d}")]
    DimensionMismatch {
        got_w: usize,
        got_d: usize,
        want_w: usize,
        want_d: usize,
    },

    #[error("placement would raise column ({x}, {y}) to {height}, above the container top {limit}")]
    ExceedsContainer {
        x: usize,
        y: usize,
        height: u32,
        limit: usize,
    },

    #[error("internal consistency violated: {0}")]
    Internal(String),

    #[error("unknown method tag `{0}`")]
    UnknownMethod(String),

    #[error("empty candidate list")]
    NoCandidates,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
