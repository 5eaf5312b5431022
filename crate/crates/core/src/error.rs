use std::path::PathBuf;

use thiserror::Error;

use crate::harness::ConvergenceTable;
use crate::solvers::SolveReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("linear solve did not converge after {} iterations (relative residual {:.3e})", .report.iterations, .report.final_relative_residual)]
    NotConverged { report: SolveReport },

    #[error("non-finite value in linear solve after {iterations} iterations")]
    NonFiniteSolve { iterations: usize },

    #[error("degenerate projection at cell {cell}: |m| = {length:.3e}")]
    DegenerateProjection { cell: usize, length: f64 },

    #[error("solution blew up at cell {cell}")]
    Blowup { cell: usize },

    #[error("step {step} (t = {time}) failed: {source}")]
    StepFailed {
        step: usize,
        time: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("study aborted after {} completed rows: {source}", .partial.rows.len())]
    StudyAborted {
        partial: Box<ConvergenceTable>,
        #[source]
        source: Box<Error>,
    },

    #[error("order fit rejected: {0}")]
    InvalidOrderInput(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input or I/O).
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NotConverged { .. }
            | Error::NonFiniteSolve { .. }
            | Error::DegenerateProjection { .. }
            | Error::Blowup { .. } => true,
            Error::StepFailed { source, .. } | Error::StudyAborted { source, .. } => {
                source.is_numerical()
            }
            _ => false,
        }
    }
}
