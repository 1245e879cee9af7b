use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure taxonomy. Input problems (bad config, bad data, broken cache) exit
/// with code 2; numerical solver breakdowns exit with code 3. Statistical
/// rejections are report content, never errors.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    Invalid(String),

    #[error("{path}:{line}: {message}")]
    DataRow {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },

    #[error("cache rejected: {0}")]
    CacheMismatch(String),

    #[error("the order set is empty: no linear order survives the model restrictions")]
    EmptyOrderSet,

    #[error("linear program failed: {0}")]
    Lp(String),

    #[error("least-squares solve failed: {0}")]
    Nnls(String),

    #[error("bootstrap replication {replication} failed after retry: {message}")]
    Bootstrap { replication: usize, message: String },

    #[error("feasibility solve failed on order {order:?}: {message}")]
    OrderSolve { order: Vec<usize>, message: String },
}

impl Error {
    pub fn invalid(message: impl Into<String>) -> Self {
        Error::Invalid(message.into())
    }

    pub fn io(path: impl Into<String>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 2 for input errors, 3 for solver failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invalid(_)
            | Error::DataRow { .. }
            | Error::Io { .. }
            | Error::CacheMismatch(_)
            | Error::EmptyOrderSet => 2,
            Error::Lp(_) | Error::Nnls(_) | Error::Bootstrap { .. } | Error::OrderSolve { .. } => 3,
        }
    }
}
