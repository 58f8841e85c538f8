use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the domain of a function.
    #[error("domain error in {func}: {detail}")]
    Domain { func: &'static str, detail: String },

    /// A series hit its term cap before meeting the convergence rule.
    #[error("series did not converge after {terms} terms (partial sum {partial:e}, last term {last_term:e})")]
    Truncation {
        terms: usize,
        partial: f64,
        last_term: f64,
    },

    /// Adaptive quadrature ran out of subdivisions above tolerance.
    #[error("quadrature did not converge: estimate {estimate:e}, error {abs_error:e} after {intervals} intervals")]
    Integration {
        estimate: f64,
        abs_error: f64,
        intervals: usize,
    },

    /// Bisection or closed-form inversion is impossible for this input.
    #[error("not invertible: {0}")]
    NotInvertible(String),

    /// SINR is unbounded (no interference and no noise, or a zero distance).
    #[error("unbounded SINR: {0}")]
    UnboundedSinr(String),

    /// One or more configuration problems, reported together.
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Config(Vec<String>),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("validation failed: {0} check(s) did not pass")]
    Validation(usize),
}

impl Error {
    pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            func,
            detail: detail.into(),
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(vec![msg.into()])
    }

    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Json(_) | Error::Io { .. } => 2,
            Error::Truncation { .. } | Error::Integration { .. } | Error::NotInvertible(_) => 3,
            Error::Validation(_) => 4,
            Error::Domain { .. } | Error::UnboundedSinr(_) => 3,
        }
    }
}
