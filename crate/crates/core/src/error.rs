use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("negative weight {value} at index {index}")]
    NegativeWeight { index: usize, value: String },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("dimension mismatch: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("space must have at least one point")]
    EmptySpace,

    #[error("duplicate label {0:?}")]
    DuplicateLabel(String),

    #[error("negative scale {0}")]
    NegativeScale(String),

    #[error("marginal is not a probability measure (mass {0})")]
    NotProbability(String),

    #[error("negative mass {0}")]
    NegativeMass(String),

    #[error("mass {requested} exceeds the largest shippable mass {max}")]
    InfeasibleMass { requested: String, max: String },

    #[error("epsilon {0} outside [0, 1]")]
    EpsilonOutOfRange(String),

    #[error("densities are not in V: mass of f*mu is {left}, mass of g*nu is {right}")]
    NotInV { left: String, right: String },

    #[error("truncation levels are not nondecreasing at level {0}")]
    NonMonotoneLevels(usize),

    #[error("truncation level {level} has an infinite entry at ({row}, {col})")]
    InfiniteLevel { level: usize, row: usize, col: usize },

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("postcondition violated: {0}")]
    PostconditionViolated(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("coupling charges atom {index} of the {side} space, which has zero weight")]
    DensityUndefined { side: &'static str, index: usize },

    #[error("deficit mismatch: row deficit {rows}, column deficit {cols}, expected {expected}")]
    DeficitMismatch {
        rows: String,
        cols: String,
        expected: String,
    },

    #[error("cell set is {got:?}, capacity needs a square set over {size} points")]
    NotSquare { size: usize, got: (usize, usize) },

    #[error("instance too large for brute force: {0}")]
    TooLarge(String),

    #[error("n must be at least 1")]
    InvalidSize,

    #[error("bandwidth {bandwidth} must be smaller than n = {n}")]
    BandTooWide { bandwidth: usize, n: usize },

    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
