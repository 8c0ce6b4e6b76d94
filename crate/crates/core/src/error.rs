use std::path::PathBuf;

use thiserror::Error;

use crate::model::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A 1-based grid or profile index fell outside its declared range.
    #[error("index out of range: {what} = {index}, valid range 1..={max}")]
    Range {
        what: &'static str,
        index: usize,
        max: usize,
    },

    /// Ranking metrics need at least one positive and one negative label.
    #[error("degenerate labels: need at least one positive and one negative ({n_pos} positive, {n_neg} negative)")]
    DegenerateLabels { n_pos: usize, n_neg: usize },

    #[error("PRR undefined: random and oracle rejection curves coincide (no errors to reject)")]
    UndefinedPrr,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: {}", join_violations(.violations))]
    Validation {
        line: usize,
        violations: Vec<Violation>,
    },

    #[error("manifest declares {declared} records, file holds {actual}")]
    CountMismatch { declared: usize, actual: usize },

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

fn join_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
