use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid or inconsistent configuration. `key` is the dotted path of the offending entry.
    #[error("configuration error at `{key}`: {message}")]
    Config { key: String, message: String },

    /// A linear solve did not reach the requested tolerance.
    #[error("{system} solve did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    SolverDivergence {
        system: &'static str,
        iterations: usize,
        residual: f64,
    },

    /// The linear system is singular as posed (e.g. no Dirichlet data).
    #[error("singular {0} system: no Dirichlet constraints")]
    Singular(&'static str),

    /// A requested power exceeds what the cell can deliver.
    #[error("infeasible power profile at t = {time} s: {power} W exceeds the deliverable peak {peak:.3} W")]
    InfeasiblePower { time: f64, power: f64, peak: f64 },

    /// A level-set step would violate the CFL bound.
    #[error("CFL violation: max|V|·dt = {travel:.3e} m exceeds {limit:.3e} m")]
    Cfl { travel: f64, limit: f64 },

    /// Caller broke an operation precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed data in {path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
