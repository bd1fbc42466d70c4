use thiserror::Error;

/// Errors surfaced by the alignment library.
#[derive(Debug, Error)]
pub enum AlignError {
    #[error("600-cell construction invariant violated: {0}")]
    ConstructionInvariantViolated(String),
    #[error("degenerate tetrahedron cell: vertex matrix is numerically singular")]
    DegenerateCell,
    #[error("matrix B is not positive definite (pivot {pivot} below tolerance)")]
    SingularB { pivot: f64 },
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("no candidate rotations returned by rotational branch and bound")]
    NoCandidates,
    #[error("internal error: {0}")]
    Internal(String),
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, AlignError>;
