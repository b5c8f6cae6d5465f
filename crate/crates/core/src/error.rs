use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("visibility {0} outside [0, 1]")]
    InvalidVisibility(f64),

    #[error("invalid pointer (F = {f}, G = {g}): {reason}")]
    InvalidPointer { f: f64, g: f64, reason: &'static str },

    #[error("angle {0} outside [0, pi]")]
    InvalidAngle(f64),

    #[error("precision factor {0} outside [0, 1]")]
    InvalidPrecision(f64),

    #[error("observer index {0} must be 1 or 2")]
    InvalidObserver(usize),

    #[error("non-finite matrix entry")]
    NonFinite,

    #[error("probability has imaginary residue {0:e}")]
    ImaginaryResidue(f64),

    #[error("constraint infeasible: {0}")]
    Infeasible(String),

    #[error("optimizer failed: {0}")]
    Optimizer(String),
}
