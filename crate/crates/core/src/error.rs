use thiserror::Error;

/// Errors produced anywhere in the workbench.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// Shapes, lengths or moduli of operands disagree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A structure failed its own invariants (e.g. a non-bijective permutation).
    #[error("validation error: {0}")]
    Validation(String),

    /// A key stream ran dry while generating material.
    #[error("generation error: {0}")]
    Generation(String),

    #[error("seed error: {0}")]
    Seed(String),

    /// Cipher spec and round material do not fit together.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown preset `{0}`")]
    Lookup(String),

    /// A fixture oracle was asked about a ciphertext it has no answer for.
    #[error("fixture miss: no recorded plaintext for ciphertext {0}")]
    FixtureMiss(String),

    /// The oracle answered with images of drifting shape during atom construction.
    #[error("protocol error: {0}")]
    Protocol(String),

    /// The Δ-map depends on the base plaintext, so it is not a transfer function.
    #[error("not a differential transfer function: {0}")]
    NotADtf(String),

    /// Exhaustive check requested on an instance that is too large.
    #[error("instance too large: {0}")]
    Scale(String),

    /// Malformed file contents.
    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
