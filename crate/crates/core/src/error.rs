use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count {0} outside supported range 1..={max}", max = crate::qsim::MAX_QUBITS)]
    QubitCount(usize),

    #[error("qubit index {index} out of range for {n_qubits}-qubit state")]
    QubitIndex { index: usize, n_qubits: usize },

    #[error("CX control and target must differ (both {0})")]
    ControlIsTarget(usize),

    #[error("statevector length {0} is not a power of two")]
    StateLength(usize),

    #[error("shots must be at least 1")]
    ZeroShots,

    #[error("expected {expected} parameters, got {got}")]
    ParamCount { expected: usize, got: usize },

    #[error("circuit still has {0} unbound parameter slots")]
    Unbound(usize),

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("non-finite loss at iteration {iteration} ({context})")]
    NonFiniteLoss {
        iteration: usize,
        context: &'static str,
    },

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("ragged trial curves: trial {trial} has {got} epochs, expected {expected}")]
    RaggedCurves {
        trial: usize,
        expected: usize,
        got: usize,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
