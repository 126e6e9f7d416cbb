use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("empty trajectory")]
    EmptyTrajectory,

    #[error("unknown initial condition `{0}`")]
    UnknownInitial(String),

    #[error("ball violation: y-norm {y_norm} exceeds radius {radius}")]
    BallViolation { y_norm: f64, radius: f64 },

    #[error("picard iteration did not converge after {iterations} iterations (last distance {last_distance:e})")]
    NonConvergence {
        iterations: usize,
        last_distance: f64,
        ratios: Vec<f64>,
    },

    #[error("snapshot format error at byte offset {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag used in run manifests.
    pub fn reason(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "invalid_grid",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::NonFinite(_) => "non_finite",
            Error::GridMismatch(_) => "grid_mismatch",
            Error::EmptyTrajectory => "empty_trajectory",
            Error::UnknownInitial(_) => "unknown_initial",
            Error::BallViolation { .. } => "ball_violation",
            Error::NonConvergence { .. } => "non_convergence",
            Error::Format { .. } => "format",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    /// True for failures of the numerics rather than of the inputs or the filesystem.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFinite(_) | Error::NonConvergence { .. } | Error::BallViolation { .. }
        )
    }
}
