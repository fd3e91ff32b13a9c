use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid value for `{key}`: {message}")]
    Validation { key: String, message: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("solver: {0}")]
    Solver(#[from] khessian::solver::SolverError),
    #[error("envelope: {0}")]
    Envelope(#[from] khessian::envelope::EnvelopeError),
    #[error("radial: {0}")]
    Radial(#[from] khessian::radial::RadialError),
    #[error("field: {0}")]
    Field(#[from] khessian::torus::FieldError),
    #[error("algebra: {0}")]
    Algebra(#[from] khessian::algebra::AlgebraError),
    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl LabError {
    /// Process exit code: 2 for configuration problems, 3 for everything that
    /// went wrong while computing.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Parse { .. } | Self::Validation { .. } => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
