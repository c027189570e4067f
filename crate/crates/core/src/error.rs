use thiserror::Error;

/// Errors raised while building meshes, spaces and systems, or while solving.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid time partition: {0}")]
    TimePartition(String),

    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("mesh is not slab-decomposable: {0}")]
    NotSlabDecomposable(String),

    #[error("basis construction failed: {0}")]
    Basis(String),

    #[error("assembly failed: {0}")]
    Assembly(String),

    #[error("linear solver failed: {0}")]
    Solver(String),

    #[error("mesh file, line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
