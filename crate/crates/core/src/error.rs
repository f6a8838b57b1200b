use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite value from {what} at {at}")]
    NumericalDomain { what: String, at: f64 },

    #[error("wave speed is not positive: c({u}) = {c}")]
    SpeedPositivity { u: f64, c: f64 },

    #[error("unknown model `{name}`; available: {}", available.join(", "))]
    UnknownModel {
        name: String,
        available: Vec<&'static str>,
    },

    #[error("adaptive quadrature did not converge on [{a}, {b}] (estimated error {estimate:e})")]
    Quadrature { a: f64, b: f64, estimate: f64 },

    #[error("monotone inversion failed for target {target}: {reason}")]
    MonotoneInversion { target: f64, reason: String },

    #[error("lambda = {lambda} is outside the supported range for {context}")]
    UnsupportedRegime { lambda: f64, context: &'static str },

    #[error("fixed-point iteration did not converge after {iterations} iterations (last update {last_update:e})")]
    FixedPointDivergence {
        iterations: usize,
        last_update: f64,
        history: Vec<f64>,
    },

    #[error("invariant `{what}` violated: value {value} against bound {bound}")]
    InvariantViolation {
        what: &'static str,
        value: f64,
        bound: f64,
    },

    #[error("{what}: path mismatch {mismatch:e} exceeds tolerance {tolerance:e}")]
    Compatibility {
        what: &'static str,
        mismatch: f64,
        tolerance: f64,
    },

    #[error("test function support escapes the solved region: {0}")]
    Support(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("comparison window has no overlap: {0}")]
    Window(String),

    #[error("degenerate sample set: {0}")]
    DegenerateSamples(String),

    #[error("gradient magnitude {magnitude} exceeded {cap} at t = {t}; direct scheme is pre-blowup only")]
    PreBlowupOnly { magnitude: f64, cap: f64, t: f64 },

    #[error("CFL number {cfl} exceeds the stability limit {limit}")]
    Stability { cfl: f64, limit: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
