//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A physical quantity was NaN or infinite where a finite value is required.
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    /// Parameters violate a documented precondition.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// The generator has more than one communicating class, so the
    /// stationary distribution is not unique.
    #[error("reducible generator: {0}")]
    ReducibleGenerator(String),

    /// A linear solve or iteration failed for numerical reasons.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The output voltage never entered the decision band of its expected
    /// logic level within the integration horizon.
    #[error("gate {gate} never settled to {expected_volts} V within {horizon_s} s")]
    NeverSettles {
        gate: String,
        expected_volts: f64,
        horizon_s: f64,
    },

    /// Requested integration bound lies beyond the recorded trace.
    #[error("requested time {requested_s} s exceeds trace coverage {covered_s} s")]
    BeyondTrace { requested_s: f64, covered_s: f64 },

    /// The energy denominator of a ratio vanished while the numerator did not.
    #[error("information-energy ratio undefined: zero energy with nonzero information")]
    UndefinedRatio,

    /// Alternating maximization hit its iteration cap; the best iterate so
    /// far is reported alongside.
    #[error("capacity iteration did not converge after {iterations} steps (best {best_bits} bits)")]
    CapacityNotConverged { iterations: usize, best_bits: f64 },
}
