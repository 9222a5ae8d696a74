use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: parse error at line {line}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("schema violation in field `{field}`: {reason}")]
    Schema { field: String, reason: String },

    #[error("relative error is undefined for a zero target")]
    ZeroTarget,

    #[error("property `{0}` was not computed for this candidate")]
    MissingProperty(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error(
        "solver did not converge after {iterations} iterations (relative residual {residual:.3e})"
    )]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("degenerate material: {0}")]
    DegenerateMaterial(String),

    #[error("singular elastic tensor (condition number {condition:.3e})")]
    SingularTensor { condition: f64 },

    #[error("return mapping failed: {0}")]
    ReturnMapping(String),

    #[error("illegal pipeline transition from {from} on {event}")]
    IllegalTransition { from: String, event: String },

    #[error("invalid voxel file: {0}")]
    VoxelFormat(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
