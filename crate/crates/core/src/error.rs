use thiserror::Error;

use crate::C64;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed or inconsistent input.
    #[error("input error: {0}")]
    Input(String),

    /// Input outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("degenerate basis: {0}")]
    DegenerateBasis(String),

    /// Two routes to the same quantity disagree beyond tolerance.
    #[error("internal consistency error: {what} (discrepancy {discrepancy:e})")]
    Consistency { what: String, discrepancy: f64 },

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("unsupported norm pairing ({domain}, {codomain}); supported: (1,q), (inf,inf), (2,2)")]
    UnsupportedPairing { domain: String, codomain: String },

    #[error("not provably invertible: no power a^m with m <= {max_power} has norm < 1")]
    NotProvablyInvertible { max_power: usize },

    #[error("singular: lambda = {lambda} is within {distance:e} of eigenvalue {nearest}")]
    Singular {
        lambda: C64,
        nearest: C64,
        distance: f64,
    },

    #[error("aliasing: grid of {m} points cannot resolve degree {degree} (need m > 2*degree)")]
    Aliasing { m: usize, degree: usize },

    #[error("depth exhausted: need depth {needed}, system has {available}")]
    Depth { needed: usize, available: usize },

    #[error("no convergence: {0}")]
    NonConvergence(String),

    /// A battery configuration failed to parse; `field` is a dotted path.
    #[error("invalid config at `{field}`: {message}")]
    Schema { field: String, message: String },

    #[error("unknown battery `{0}`; run `battery list` for the available names")]
    UnknownBattery(String),
}
