use std::path::PathBuf;

use thiserror::Error;

use crate::gp::GpError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("could not place user {user} after {attempts} attempts")]
    PlacementInfeasible { user: usize, attempts: usize },
    #[error("bit error rate {0} is outside (0, 0.2)")]
    BerOutOfRange(f64),
    #[error("user {user} is not assigned to subchannel {sc}")]
    NotAssigned { user: usize, sc: usize },
    #[error("unknown scheme `{0}`")]
    UnknownScheme(String),
    #[error("brute force supports M <= 4, N <= 3, K <= 2 (got M = {m}, N = {n}, K = {k})")]
    OracleScale { m: usize, n: usize, k: usize },
    #[error("{failed} of {total} trials failed (first error: {first})")]
    TooManyFailures {
        failed: usize,
        total: usize,
        first: String,
    },
    #[error("power solver failed: {source}")]
    Solver {
        #[source]
        source: GpError,
        /// Last feasible iterate, if any, as `(user, subchannel, power)`.
        last_feasible: Option<Vec<(usize, usize, f64)>>,
    },
    #[error(transparent)]
    Gp(#[from] GpError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag, used in CSV failure columns and the
    /// CLI's JSON error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidConfig(_) => "invalid_config",
            Error::InvalidScenario(_) => "invalid_scenario",
            Error::PlacementInfeasible { .. } => "placement_infeasible",
            Error::BerOutOfRange(_) => "ber_out_of_range",
            Error::NotAssigned { .. } => "not_assigned",
            Error::UnknownScheme(_) => "unknown_scheme",
            Error::OracleScale { .. } => "oracle_scale",
            Error::TooManyFailures { .. } => "too_many_failures",
            Error::Solver { .. } | Error::Gp(_) => "solver",
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::Csv(_) => "csv",
        }
    }
}
