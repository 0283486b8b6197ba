use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong between configuring a run and writing its results.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown flag {0}")]
    UnknownFlag(String),

    #[error("missing required field `{0}`")]
    MissingField(String),

    #[error("{0}")]
    Usage(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("outcome must be +1 or -1, got {0}")]
    InvalidOutcome(i64),

    #[error("pair_id sets of the two stations differ: {0}")]
    MismatchedPairIds(String),

    #[error("station {station} stream has events without pair_id; use the stream matcher")]
    MissingPairId { station: u8 },

    #[error("no coincidences to tabulate")]
    NoCoincidences,

    #[error("no coincidences for setting combination ({0}, {1})")]
    EmptyCell(usize, usize),

    #[error("setting combination ({0}, {1}) is not in the table")]
    MissingCombination(usize, usize),

    #[error("angle {angle} rad is not among the station {station} settings")]
    UnknownSetting { station: u8, angle: f64 },

    #[error(
        "quadrature did not converge: estimated error {achieved:e} above tolerance {tolerance:e} after {subdivisions} subdivisions"
    )]
    QuadratureNonConvergence {
        achieved: f64,
        tolerance: f64,
        subdivisions: usize,
    },

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: String,
        line: u64,
        reason: String,
    },

    #[error("unsupported time-tag format version: {found:?} (expected {expected:?})")]
    VersionMismatch { found: String, expected: String },

    #[error("{context}: {source}")]
    Io {
        context: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            context: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input rather than a failed run.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. }
                | Error::UnknownFlag(_)
                | Error::MissingField(_)
                | Error::Usage(_)
                | Error::InvalidOutcome(_)
                | Error::UnknownSetting { .. }
                | Error::Parse { .. }
                | Error::VersionMismatch { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
