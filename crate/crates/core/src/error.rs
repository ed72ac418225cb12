use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = CgcError> = std::result::Result<T, E>;

/// Which predictor group an error refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    X,
    Y,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::X => f.write_str("X"),
            Side::Y => f.write_str("Y"),
        }
    }
}

#[derive(Debug, Error)]
pub enum CgcError {
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("column `{0}` not found in header")]
    MissingColumn(String),

    #[error("non-numeric or non-finite value {value:?} at row {row}, column `{column}`")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },

    #[error("class `{label}` has {size} observation(s): class size below {min}")]
    ClassTooSmall {
        label: String,
        size: usize,
        min: usize,
    },

    #[error("need at least 2 classes, found {0}")]
    TooFewClasses(usize),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate predictor{}: all observations are identical so the Gini correlation is undefined", side_suffix(.side))]
    DegeneratePredictor { side: Option<Side> },

    #[error("degenerate variance estimate {variance:e}: the two predictor groups look perfectly linearly dependent (requires P(Y = aX + b) < 1)")]
    DegenerateVariance { variance: f64 },

    #[error("{what}: gave up after {attempts} redraws")]
    RetryExhausted { what: String, attempts: usize },

    #[error("replicate {replicate} at beta = {beta} failed: {source}")]
    ReplicateFailed {
        beta: f64,
        replicate: usize,
        #[source]
        source: Box<CgcError>,
    },
}

fn side_suffix(side: &Option<Side>) -> String {
    match side {
        Some(s) => format!(" {s}"),
        None => String::new(),
    }
}

impl CgcError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        CgcError::InvalidInput(msg.into())
    }

    /// Attach a predictor-group tag to a degenerate-predictor error.
    pub(crate) fn on_side(self, side: Side) -> Self {
        match self {
            CgcError::DegeneratePredictor { side: None } => {
                CgcError::DegeneratePredictor { side: Some(side) }
            }
            other => other,
        }
    }

    /// True for the errors that signal a degenerate predictor or variance.
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            CgcError::DegeneratePredictor { .. } | CgcError::DegenerateVariance { .. }
        )
    }
}
