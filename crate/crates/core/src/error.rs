use thiserror::Error;

use crate::state::Convention;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("convention mismatch: expected {expected} coefficients, found {found}")]
    ConventionMismatch { expected: Convention, found: Convention },

    #[error("cannot form tensor product: spatial mode {0:?} occurs in both factors")]
    OverlappingModes(String),

    #[error("angle {0} rad is outside [0, pi/2]")]
    AngleOutOfRange(f64),

    #[error("mode label collision in {element}: {detail}")]
    LabelCollision { element: String, detail: String },

    #[error("state is not normalized (norm {0})")]
    Unnormalized(f64),

    #[error("W state of {0} photons is not supported (use 3 or 4)")]
    UnsupportedWSize(usize),

    #[error("expected {expected} modes, got {found}")]
    ModeCount { expected: usize, found: usize },

    #[error("invalid coincidence pattern: {0}")]
    InvalidPattern(String),

    #[error("undeclared mode {mode:?} at {location}")]
    UndeclaredMode { mode: String, location: String },

    #[error("{location}: {message}")]
    Parse { location: String, message: String },

    #[error("invalid sweep range: {0}")]
    InvalidRange(String),
}
