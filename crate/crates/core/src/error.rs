//! Shared error type for the whole toolkit.

use thiserror::Error;

/// Error raised by any toolkit operation.
///
/// Variants mirror the failure classes of the library surface one-to-one so
/// that callers (including the C API, which maps them to status codes) can
/// dispatch on the kind without parsing messages.
#[derive(Debug, Error)]
pub enum Error {
    /// Input value outside the operation's domain (negative value, digit out
    /// of base range, k > n, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Text does not parse as a plain non-negative decimal numeral.
    #[error("parse error: {0}")]
    Parse(String),

    /// Two digit keys use different base, precision, or digit convention.
    #[error("convention mismatch: {0}")]
    Convention(String),

    /// Level or depth outside the valid range for the structure queried.
    #[error("range error: {0}")]
    Range(String),

    /// Unknown item identifier.
    #[error("not found: {0}")]
    NotFound(String),

    /// Incompatible shapes (vector lengths, grid dimensions).
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Input too large for an intentionally small-scale demo operation.
    #[error("scale error: {0}")]
    Scale(String),

    /// Malformed input file (missing column, bad header).
    #[error("format error: {0}")]
    Format(String),

    /// A data row could not be ingested.
    #[error("row error: {0}")]
    Row(String),

    /// Invalid configuration (weights, model parameters, plans).
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
