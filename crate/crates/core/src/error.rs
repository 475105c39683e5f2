use thiserror::Error;

/// Errors produced by table construction, rotation and the diagnostics lab.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum RopeError {
    #[error("head dimension must be even and at least 2, got {0}")]
    InvalidHeadDim(usize),

    #[error("rope base must be finite and greater than 1, got {0}")]
    InvalidBase(f64),

    #[error("trained context length must be at least 1")]
    ZeroContext,

    #[error("dimension index {index} out of range (table has {pairs} pairs)")]
    DimOutOfRange { index: usize, pairs: usize },

    #[error("vector length {got} does not match head dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("scale factor must be finite and >= 1, got {0}")]
    InvalidScale(f64),

    #[error("ramp thresholds need beta > alpha >= 0, got alpha={alpha}, beta={beta}")]
    InvalidRamp { alpha: f64, beta: f64 },

    #[error(
        "target context {target} is inconsistent with scale {scale} and trained context {trained}"
    )]
    TargetMismatch {
        target: usize,
        scale: f64,
        trained: usize,
    },

    #[error("NTK-aware base change is singular for head dimension 2")]
    SingularBaseChange,

    #[error("rotation count must be positive and finite, got {0}")]
    InvalidRotations(f64),

    #[error("expected scheme `{expected}`, config has `{got}`")]
    SchemeMismatch {
        expected: &'static str,
        got: &'static str,
    },

    #[error("scaled frequency table has {got} entries, expected {expected}")]
    TableLength { expected: usize, got: usize },

    #[error("invalid table: {0}")]
    InvalidTable(String),

    #[error("tables are not comparable: {0}")]
    TableMismatch(String),

    #[error("softmax input is empty")]
    EmptyLogits,

    #[error("softmax input contains a non-finite value at index {0}")]
    NonFiniteLogit(usize),

    #[error("at least two points are required, got {0}")]
    TooFewPoints(usize),

    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: f64 },

    #[error("{0}")]
    Parse(String),
}

pub type Result<T, E = RopeError> = std::result::Result<T, E>;
