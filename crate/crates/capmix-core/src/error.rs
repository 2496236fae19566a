use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CoreError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("only n = 1 and n = 2 are supported, got n = {0}")]
    UnsupportedDimension(usize),

    #[error("{what} is not positive definite at node {node:?} (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { what: &'static str, node: Option<usize>, min_eigenvalue: f64 },

    #[error("invalid norm model: {0}")]
    InvalidModel(String),

    #[error("omega0 = {omega0} outside the admissible interval ({lower}, {upper})")]
    OmegaOutOfRange { omega0: f64, lower: f64, upper: f64 },

    #[error("dual norm solve did not converge (best value {best:e}, residual {residual:e})")]
    DualNormNotConverged { best: f64, residual: f64 },

    #[error("boundary root not bracketed along direction {0}")]
    BoundaryNotFound(usize),

    #[error("bodies do not share a mesh")]
    MeshMismatch,

    #[error("random body stayed non-convex after {attempts} amplitude halvings")]
    NotConvex { attempts: usize },

    #[error("degenerate input: {0}")]
    Degenerate(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = core::result::Result<T, CoreError>;
