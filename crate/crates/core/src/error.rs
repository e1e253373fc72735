//! Error type shared by all engine modules.

use thiserror::Error;

/// Errors surfaced by the series engine, the genus formulas and the
/// model/fan verifiers.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// Two series with different truncation windows (or conductors) were
    /// combined.
    #[error("truncation parameter mismatch: {0}")]
    ParamMismatch(String),

    /// An exponent fell outside the representable grid (denominator does
    /// not divide D, or a window bound does not hold where required).
    #[error("exponent not representable: {0}")]
    BadExponent(String),

    /// A coefficient was queried outside the truncation window, where the
    /// stored data says nothing about its value.
    #[error("coefficient key outside the truncation window: {0}")]
    OutOfWindow(String),

    /// Series inversion failed (no unique minimal term, nilpotent or
    /// non-invertible leading coefficient, or no convergence in-window).
    #[error("series not invertible: {0}")]
    NotInvertible(String),

    /// exp/log precondition violation or non-terminating expansion.
    #[error("exp/log domain error: {0}")]
    ExpLog(String),

    /// A theta denominator vanished: the Kawamata log-terminal condition
    /// (or a character range condition) is violated.
    #[error("singular theta denominator (Kawamata violation): {0}")]
    Singular(String),

    /// Division by zero or inverse of a non-unit in the coefficient field.
    #[error("coefficient not invertible: {0}")]
    ZeroDivision(String),

    /// Numeric evaluation outside the domain (e.g. Im tau <= 0).
    #[error("numeric domain error: {0}")]
    NumericDomain(String),

    /// Strict integration hit a top-degree monomial with no declared
    /// intersection number.
    #[error("missing intersection number for monomial {0}")]
    MissingIntersection(String),

    /// A geometric model violated a structural invariant.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// A coefficient table does not extend far enough for the requested
    /// operation.
    #[error("insufficient series precision: {0}")]
    InsufficientPrecision(String),

    /// A fan or lattice datum violated a structural invariant.
    #[error("invalid fan data: {0}")]
    InvalidFan(String),

    /// Pushforward left a pole on an interior wall: the input was not
    /// face-compatible.
    #[error("face compatibility violation across wall {0}")]
    FaceViolation(String),

    /// Model/fan file syntax error with 1-based line number.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
