use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("matrix is not symmetric (relative asymmetry {0:e})")]
    Asymmetric(f64),

    #[error("eigen iteration did not converge (residual {residual:e})")]
    NoConvergence { residual: f64 },

    #[error("matrix is unusable: {0}")]
    UnusableMatrix(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("leave-one-out fold {fold} failed: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of the numerical pipeline, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NotPositiveDefinite { .. }
            | Error::NoConvergence { .. }
            | Error::UnusableMatrix(_) => true,
            Error::Fold { source, .. } => source.is_numerical(),
            _ => false,
        }
    }

    /// Copy of this error; I/O and CSV errors keep only their message.
    pub fn duplicate(&self) -> Self {
        match self {
            Error::Domain(m) => Error::Domain(m.clone()),
            Error::Shape { expected, got } => Error::Shape {
                expected: *expected,
                got: *got,
            },
            Error::NotPositiveDefinite { pivot, value } => Error::NotPositiveDefinite {
                pivot: *pivot,
                value: *value,
            },
            Error::Asymmetric(a) => Error::Asymmetric(*a),
            Error::NoConvergence { residual } => Error::NoConvergence { residual: *residual },
            Error::UnusableMatrix(m) => Error::UnusableMatrix(m.clone()),
            Error::InvalidData(m) => Error::InvalidData(m.clone()),
            Error::Unsupported(m) => Error::Unsupported(m.clone()),
            Error::Fold { fold, source } => Error::Fold {
                fold: *fold,
                source: Box::new(source.duplicate()),
            },
            Error::Parse { line, message } => Error::Parse {
                line: *line,
                message: message.clone(),
            },
            Error::Io(e) => Error::Io(std::io::Error::new(e.kind(), e.to_string())),
            Error::Csv(e) => Error::InvalidData(e.to_string()),
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidData(msg.into())
    }
}
