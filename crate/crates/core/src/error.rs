use thiserror::Error;

/// Errors raised by the exact and numeric routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoalabError {
    /// An index or order fell outside the supported window.
    #[error("index out of range: {0}")]
    Range(String),

    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A triangular generator has repeated diagonal entries.
    #[error("degenerate spectrum: {0}")]
    Degenerate(String),

    /// A floating-point evaluation left its admissible range.
    #[error("numeric instability: {0}")]
    NumericInstability(String),
}

pub type Result<T> = std::result::Result<T, CoalabError>;
