use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid cutoff: n_max must be at least 2, got {0}")]
    InvalidCutoff(usize),

    #[error("cutoff violation: population {leakage:.3e} in the top two Fock levels exceeds {tolerance:.1e}")]
    CutoffViolation { leakage: f64, tolerance: f64 },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("conditioning on an outcome with probability {0:.3e}")]
    UndefinedConditional(f64),

    #[error("invalid phases: {0}")]
    InvalidPhases(String),

    #[error("no transition: n={n}, l={l}")]
    NoTransition { n: usize, l: i32 },

    #[error("state is not parity locked (off-structure weight {0:.3e})")]
    NotParityLocked(f64),

    #[error("undefined visibility: zero normalization")]
    UndefinedVisibility,

    #[error("aliasing: {samples} samples per axis cannot resolve harmonic order {order} (need at least {required})")]
    Aliasing {
        samples: usize,
        order: usize,
        required: usize,
    },

    #[error("unresolved frequencies: design matrix condition ratio {0:.3e}")]
    UnresolvedFrequencies(f64),

    #[error("inconsistent populations: {0}")]
    InconsistentPopulations(String),

    #[error("trotter error {achieved:.3e} exceeds tolerance {tolerance:.1e} at {steps} steps")]
    TrotterTolerance {
        achieved: f64,
        tolerance: f64,
        steps: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
