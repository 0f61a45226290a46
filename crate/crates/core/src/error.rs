use crate::radon::Space;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// `(l, m)` violates `|l| <= m` or `m - |l|` even.
    #[error("(l={l}, m={m}) is not a valid basis index")]
    InvalidIndex { l: i32, m: u32 },

    #[error("degree {degree} exceeds the configured cap {cap}")]
    DegreeCap { degree: u32, cap: u32 },

    #[error("derivative order {order} exceeds the configured maximum {max}")]
    OrderCap { order: u32, max: u32 },

    #[error("{what} = {value} is outside its domain")]
    OutOfDomain { what: &'static str, value: f64 },

    #[error("expected a {expected:?}-space field, got {found:?}")]
    SpaceMismatch { expected: Space, found: Space },

    #[error("length mismatch: expected {expected}, got {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("weights sum to {0}, expected 1")]
    WeightsNotNormalized(f64),

    /// A field that should evaluate to real values carries an imaginary part.
    #[error("imaginary residue {0:e} exceeds tolerance (broken conjugate symmetry)")]
    NotReal(f64),

    #[error("{0}")]
    Invalid(&'static str),
}
