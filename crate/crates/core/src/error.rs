use std::path::PathBuf;

/// Errors raised anywhere in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("degenerate covariance: {0}")]
    DegenerateCovariance(String),

    #[error("qubit index {index} out of range for {num_qubits} qubits")]
    QubitIndex { index: usize, num_qubits: usize },

    #[error("expected {expected} parameters, got {actual}")]
    Arity { expected: usize, actual: usize },

    #[error("imaginary residue {0:e} in expectation value")]
    Consistency(f64),

    #[error("invalid ansatz: {0}")]
    InvalidSpec(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("hamiltonian on {0} qubits is too large for dense diagonalization")]
    Size(usize),

    #[error("invalid population: {0}")]
    InvalidPopulation(String),

    #[error("invalid scale: {0}")]
    InvalidScale(String),

    #[error("fitness evaluation failed: {0}")]
    Evaluation(String),

    #[error("invalid batch: {0}")]
    InvalidBatch(String),

    #[error("gradient descent diverged at iteration {0}")]
    Divergence(usize),

    #[error("trace alignment: {0}")]
    Alignment(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Whether the error stems from user input rather than a failing run.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::InvalidSpec(_)
                | Error::InvalidBatch(_)
                | Error::InvalidPopulation(_)
                | Error::Parse { .. }
                | Error::Size(_)
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
