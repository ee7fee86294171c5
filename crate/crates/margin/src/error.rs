//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the library and the CLI harness.
#[derive(Debug, Error)]
pub enum Error {
    /// Input that cannot be meaningfully processed (zero-norm vector,
    /// empty batch, too few classes in a sample set, ...).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// Operands whose shapes do not agree.
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    /// A parameter outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A caller-visible invariant that does not hold.
    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    /// A class required by the operation has no samples.
    #[error("class {0} has no samples")]
    MissingClass(usize),

    /// Numerical procedure failed to converge.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Training diverged (non-finite loss).
    #[error("training diverged: non-finite loss at epoch {epoch}, batch {batch}")]
    Divergence { epoch: usize, batch: usize },

    /// An invalid run configuration (bad key, missing key, out-of-range value).
    #[error("configuration error: {0}")]
    Config(String),

    /// A data file that does not parse; positions are 1-based.
    #[error("{file}:{line}: column {column}: {message}")]
    Parse {
        file: String,
        line: usize,
        column: usize,
        message: String,
    },

    /// A checkpoint file that is truncated, has a bad magic/version, or
    /// inconsistent section lengths.
    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// `true` for errors caused by bad user-provided configuration rather
    /// than by runtime failures. The CLI maps these to exit code 1.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Config(_) | Error::InvalidParameter(_))
    }
}
