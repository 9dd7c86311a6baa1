use thiserror::Error;

/// Library-wide error type. The CLI maps `kind_code` onto process exit codes.
#[derive(Debug, Error)]
pub enum Error {
    /// Caller violated a precondition (bad index, length mismatch, parity, ...).
    #[error("usage: {0}")]
    Usage(String),
    /// Request exceeds a dense-representation cap.
    #[error("capacity: {0}")]
    Capacity(String),
    /// Argument outside a driver's defined domain.
    #[error("domain: {0}")]
    Domain(String),
    /// Scenario file is malformed or violates an invariant.
    #[error("parse: {0}")]
    Parse(String),
    /// A numerical tolerance was breached (norm drift, trace loss, comparison gap).
    #[error("numerical: {0}")]
    Numerical(String),
    /// Projective measurement asked for an outcome of probability below 1e-14.
    #[error("impossible outcome: probability {probability:.3e}")]
    ImpossibleOutcome { probability: f64 },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Exit-code class: 1 validation, 2 numerical, 3 I/O.
    pub fn kind_code(&self) -> i32 {
        match self {
            Error::Usage(_)
            | Error::Capacity(_)
            | Error::Domain(_)
            | Error::Parse(_)
            | Error::ImpossibleOutcome { .. } => 1,
            Error::Numerical(_) => 2,
            Error::Io(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
