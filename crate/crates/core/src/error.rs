//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the exact and numeric layers.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Two operands live in different cyclotomic levels / q-expansion levels.
    #[error("level mismatch: {left} vs {right}")]
    LevelMismatch { left: u32, right: u32 },

    /// Inversion of zero, or division by a series with zero leading coefficient.
    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),

    /// An index that must not be divisible by the level is.
    #[error("index {index} is divisible by the level {level}")]
    IndexDivisibleByLevel { index: i64, level: u32 },

    /// Theorem hypotheses violated: `ac` or `bc` divisible by N.
    #[error("inadmissible triple (a={a}, b={b}, c={c}) at level {level}: ac or bc divisible by the level")]
    Inadmissible { a: i64, b: i64, c: i64, level: u32 },

    /// A series tail could not be brought below the requested tolerance
    /// within the term budget; the caller must switch expansions.
    #[error("tail budget exceeded: requested {requested:e}, achieved {achieved:e}")]
    TailBudget { requested: f64, achieved: f64 },

    /// A quadrature did not converge to the requested tolerance.
    #[error("tolerance not met: requested {requested:e}, estimated error {achieved:e}")]
    ToleranceNotMet { requested: f64, achieved: f64 },

    /// The q-expansion is not a product of Siegel units (clean outcome, not a bug).
    #[error("not a unit product: {0}")]
    NotUnitProduct(String),

    /// Not enough stored coefficients for the requested operation.
    #[error("insufficient precision: {0}")]
    InsufficientPrecision(String),

    /// Malformed input (CLI specs, JSON payloads, bad parameters).
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
