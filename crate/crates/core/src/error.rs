use std::io;

use thiserror::Error;

/// Errors produced by the integrators, the window engine and the analysis tools.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported scheme: {family}({n})")]
    UnsupportedScheme { family: String, n: usize },

    #[error("numerical blow-up at step {step}, stage {stage}")]
    NumericalBlowUp { step: usize, stage: usize },

    #[error("numerical blow-up in slice {slice} (step {step}, stage {stage})")]
    SliceBlowUp {
        slice: usize,
        step: usize,
        stage: usize,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(
        "window did not converge after {iterations} iterations \
         (frontier {frontier} of {slices} slices, last max correction {last_correction:e})"
    )]
    NonConvergence {
        iterations: usize,
        frontier: usize,
        slices: usize,
        last_correction: f64,
    },

    #[error("parallel result differs from the sequential run: max error {max_error:e} (first at boundary {boundary})")]
    VerificationFailed { max_error: f64, boundary: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("iteration log is empty")]
    EmptyLog,

    #[error("degenerate least-squares design: {0}")]
    DegenerateFit(String),

    #[error("outside the speed-up model domain: {0}")]
    ModelDomain(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// Exit status of the command-line tool: 2 bad arguments or input, 3
    /// blow-up, 4 verification failure, 5 iteration cap, 6 degenerate fit,
    /// 1 I/O failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NumericalBlowUp { .. } | Error::SliceBlowUp { .. } => 3,
            Error::VerificationFailed { .. } => 4,
            Error::NonConvergence { .. } => 5,
            Error::DegenerateFit(_) | Error::EmptyLog => 6,
            Error::Io(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
