use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix of dimension {dim} is not positive definite (jitter up to {max_jitter:e} applied)")]
    NotPositiveDefinite { dim: usize, max_jitter: f64 },

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("eigenvalue iteration did not converge: {0}")]
    ConvergenceFailure(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("design columns {subset} are rank deficient")]
    RankDeficient { subset: String },

    #[error("invalid subset: {0}")]
    InvalidSubset(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("moment order {0} is not in 1..=4")]
    InvalidOrder(usize),

    #[error("quadrature grid has no nodes")]
    EmptyGrid,

    #[error("integration over {0} hyperparameters is not supported (at most 2)")]
    UnsupportedDimension(usize),

    #[error("at least two grid points are required, found {0}")]
    InsufficientGrid(usize),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid value for `{field}`: {constraint}")]
    Validation { field: String, constraint: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Coarse error classes; each maps to one process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Numerical,
    Io,
}

impl Error {
    pub fn validation(field: impl Into<String>, constraint: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            constraint: constraint.into(),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Parse { .. }
            | Error::Validation { .. }
            | Error::InvalidSubset(_)
            | Error::UnsupportedDimension(_) => ErrorClass::Config,
            Error::Io(_) | Error::Csv(_) => ErrorClass::Io,
            _ => ErrorClass::Numerical,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.class() {
            ErrorClass::Config => 2,
            ErrorClass::Numerical => 3,
            ErrorClass::Io => 4,
        }
    }

    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NotPositiveDefinite { .. } => "not_positive_definite",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::ConvergenceFailure(_) => "convergence_failure",
            Error::EmptyInput(_) => "empty_input",
            Error::RankDeficient { .. } => "rank_deficient",
            Error::InvalidSubset(_) => "invalid_subset",
            Error::InvalidInput(_) => "invalid_input",
            Error::InvalidOrder(_) => "invalid_order",
            Error::EmptyGrid => "empty_grid",
            Error::UnsupportedDimension(_) => "unsupported_dimension",
            Error::InsufficientGrid(_) => "insufficient_grid",
            Error::Parse { .. } => "parse_error",
            Error::Validation { .. } => "validation_error",
            Error::Io(_) => "io_error",
            Error::Csv(_) => "csv_error",
        }
    }
}

pub(crate) fn check_dim(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            found,
        })
    }
}
