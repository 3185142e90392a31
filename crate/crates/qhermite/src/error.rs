//! Error type shared across the crate.
//!
//! Every fallible operation returns [`Error`]. The variants are deliberately
//! coarse: callers distinguish *why* a computation could not be certified
//! (domain violation, truncation failure, ambiguous rounding, precision
//! exhausted) rather than where it happened.

use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A series or product failed to push its certified tail below the
    /// requested tolerance within the iteration safeguard.
    #[error("tail did not converge below tolerance within {max_terms} terms")]
    TailNotConverged { max_terms: usize },

    /// The value is too close to an integer to certify its floor at the
    /// available precision (or within a decimal descriptor's uncertainty).
    #[error("floor/round is ambiguous at the available precision: {0}")]
    AmbiguousFloor(String),

    /// The working precision (or a decimal descriptor's digit supply) cannot
    /// certify the requested comparison or search.
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),

    /// A magnitude left the supported exponent range; callers should stay in
    /// logarithmic form.
    #[error("magnitude overflow; keep the logarithmic representation")]
    Overflow,

    /// `n` is too small for an asymptotic quantity to be meaningful
    /// (e.g. a strip width floor evaluated to zero).
    #[error("n = {n} is below the asymptotic threshold: {reason}")]
    NSmall { n: u64, reason: String },

    /// Malformed textual input (descriptor syntax, ranges, numbers).
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
