use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum Error {
    #[error("invalid layout: {0}")]
    Layout(String),

    #[error("invalid element pattern: {0}")]
    ElementPattern(String),

    #[error("element angle must be nonnegative, got {0} rad")]
    NegativeAngle(f64),

    #[error("index out of range: {what} index {index} >= {len}")]
    Index {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("degenerate coupling matrix: principal singular value {0:e} is numerically zero")]
    DegenerateMatrix(f64),

    #[error("invalid grouping: {0}")]
    Grouping(String),

    #[error("invalid shaping parameters: {0}")]
    Shaping(String),

    #[error("invalid angular grid: {0}")]
    Grid(String),

    #[error("invalid passband: {0}")]
    Passband(String),

    #[error("invalid optimizer settings: {0}")]
    Optimizer(String),

    #[error("invalid deployment scenario: {0}")]
    Scenario(String),

    #[error("invalid power budget: {0}")]
    Budget(String),
}

pub type Result<T> = std::result::Result<T, Error>;
