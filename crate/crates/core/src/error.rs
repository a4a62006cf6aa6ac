use thiserror::Error;

/// Errors raised by the numerical toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid range: q_min = {q_min} must be below q_max = {q_max}")]
    InvalidRange { q_min: f64, q_max: f64 },

    #[error("invalid grid size {0}: must be a power of two and at least 8")]
    InvalidPoints(usize),

    #[error("state truncated by the grid: edge density ratio {ratio:e} exceeds {tolerance:e} ({basis} basis)")]
    Truncation {
        basis: &'static str,
        ratio: f64,
        tolerance: f64,
    },

    #[error("wavefunction is already in the {0} basis")]
    Basis(&'static str),

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("a mixture needs at least one component")]
    EmptyMixture,

    #[error("mixture weight {0} is negative")]
    NegativeWeight(f64),

    #[error("mixture weights sum to zero")]
    ZeroWeight,

    #[error("no grid point has postselection density above the floor")]
    AllMasked,

    #[error("q = {0} lies where the postselection density is below the floor")]
    MaskedPoint(f64),

    #[error("operation requires a real-valued field, got {0}")]
    ComplexField(&'static str),

    #[error("pointer current density {max_current:e} exceeds tolerance (max probability density {max_density:e})")]
    CurrentDensityViolation { max_current: f64, max_density: f64 },

    #[error("observable {0} is not diagonal in position or momentum")]
    UnsupportedObservable(String),

    #[error("pointer shift {shift} exceeds the grid margin {margin}")]
    GridOverflow { shift: f64, margin: f64 },

    #[error("classical weak value {value:e} at q = {q} is negative")]
    PositivityViolation { q: f64, value: f64 },

    #[error("observable is not nonnegative: found {value} at (q, p) = ({q}, {p})")]
    NotNonnegative { q: f64, p: f64, value: f64 },

    #[error("derivative of the kick observable is unavailable at (q, p) = ({q}, {p})")]
    DerivativeUnavailable { q: f64, p: f64 },

    #[error("kick flow failed to conserve the observable: drift {0:e}")]
    ConservationDrift(f64),

    #[error("phase-space density is invalid: {0}")]
    InvalidDensity(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
