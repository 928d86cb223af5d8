use thiserror::Error;

use crate::pathspace::Node;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("increment {value} does not belong to the alphabet of step {step}")]
    AlphabetMismatch { step: usize, value: f64 },

    #[error("invalid stopping rule: {0}")]
    InvalidStoppingRule(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("conditioning node {0} has zero probability")]
    NullPrefix(Node),

    #[error("no kernel measure at positive-probability boundary node {0}")]
    MissingKernel(Node),

    #[error("enumeration would produce {count} items, above the cap of {cap}")]
    SizeLimit { count: u128, cap: u64 },

    #[error("stopping rules are not ordered on path {0}")]
    PrecedenceViolation(Node),

    #[error("invalid family: {0}")]
    InvalidFamily(String),

    #[error("invalid value at {pointer}: {reason}")]
    InvalidSpec { pointer: String, reason: String },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}
