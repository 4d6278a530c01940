use thiserror::Error;

/// Errors produced by the library.
///
/// The CLI maps these onto exit codes: configuration and validation
/// problems exit with 2, numerical or degeneracy problems with 3.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input data (empty class, non-finite value, shape mismatch, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A parameter outside its documented range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Class geometry that makes a weighting scheme undefined
    /// (coincident class means, zero-norm mean).
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// A weight matrix that cannot drive a weighted fit
    /// (all-zero row, all-zero matrix).
    #[error("degenerate weights: {0}")]
    DegenerateWeights(String),

    /// Kernel parameters or values outside the valid range.
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    /// Numerical failure with diagnostics (indefinite matrix, singular covariance).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A file that could not be ingested, naming the offending record.
    #[error("ingestion error: {0}")]
    Ingestion(String),

    /// Operation not defined for the model kind (e.g. Fisherfaces of a kernel model).
    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code the CLI uses for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_)
            | Error::InvalidParameter(_)
            | Error::InvalidKernel(_)
            | Error::Ingestion(_)
            | Error::Unsupported(_)
            | Error::Io(_) => 2,
            Error::DegenerateGeometry(_) | Error::DegenerateWeights(_) | Error::Numerical(_) => 3,
        }
    }
}
