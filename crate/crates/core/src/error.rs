use thiserror::Error;

/// Errors raised by the exact-arithmetic layer and the maps built on it.
///
/// Singularities carry the name of the quantity that vanished so callers
/// can report where an orbit hit a blow-up locus.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,

    #[error("series order mismatch: {left} vs {right}")]
    OrderMismatch { left: usize, right: usize },

    #[error("series with vanishing constant term is not invertible")]
    NonInvertibleSeries,

    #[error("could not draw a nondegenerate sample after {attempts} attempts")]
    DegenerateSample { attempts: usize },

    #[error("singular step: {quantity} vanished")]
    SingularStep { quantity: String },

    #[error("no candidate root survives the forward round trip")]
    NoConsistentRoot,

    #[error("degenerate frame: {quantity}")]
    DegenerateFrame { quantity: String },

    #[error("degenerate state: {quantity}")]
    DegenerateState { quantity: String },

    #[error("x-recovery system is singular (t = 1)")]
    LinearSolveSingular,

    #[error("singular action: {quantity} vanished")]
    SingularAction { quantity: String },

    #[error("q^rho1 is not rational for these parameters")]
    IrrationalPower,

    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    #[error("operation requires n = 1, got n = {n}")]
    WrongOrder { n: usize },

    #[error("vanishing denominator: {what}")]
    VanishingDenominator { what: String },

    #[error("constraint violated: {0}")]
    ConstraintViolated(String),

    #[error("integer size {bits} bits exceeds the limit of {limit} bits")]
    SizeLimit { bits: u64, limit: u64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn singular_step(quantity: impl Into<String>) -> Error {
    Error::SingularStep {
        quantity: quantity.into(),
    }
}
