//! Experiment harness for the `splitfeas` solvers: seeded experiment runs, aggregate
//! tables, projection oracles and the verification suite behind the `splitfeas` binary.

pub mod experiment;
pub mod oracles;
pub mod report;
pub mod verify;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Solver(#[from] splitfeas::Error),
}

pub type Result<T> = std::result::Result<T, BenchError>;

pub(crate) fn usage(msg: impl Into<String>) -> BenchError {
    BenchError::Usage(msg.into())
}
