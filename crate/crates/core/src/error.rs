use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    #[error("invalid solenoid spec: {0}")]
    InvalidSpec(String),

    #[error("depth {depth} out of range 1..={max}")]
    DepthOutOfRange { depth: usize, max: usize },

    #[error("depth mismatch: {0} vs {1}")]
    DepthMismatch(usize, usize),

    /// The point must be constructed deeper before this evaluation can run.
    #[error("point depth {have} is insufficient, need at least {need}")]
    InsufficientDepth { have: usize, need: usize },

    #[error("frequency level {level} exceeds working depth {max}")]
    LevelOutOfRange { level: usize, max: usize },

    #[error("integer overflow in frequency arithmetic")]
    Overflow,

    #[error("series has a non-summable tail; only finite truncations can be evaluated")]
    DivergentTail,

    #[error("unsupported tail operation: {0}")]
    UnsupportedTail(String),

    #[error("mean value ({re}, {im}) is nonzero; subtract the mean first")]
    NonzeroMean { re: f64, im: f64 },

    #[error("series is not real-valued")]
    NotReal,

    #[error("field is not certified positive (lower bound {0})")]
    NotPositive(f64),

    #[error("reciprocal reconstruction error {residual:e} exceeds {limit:e}; increase the level or grid")]
    Reconstruction { residual: f64, limit: f64 },

    #[error("conjugacy residual {residual:e} exceeds {limit:e}")]
    ResidualTooLarge { residual: f64, limit: f64 },

    #[error("no crossing of level {0} is known")]
    NoCrossing(u32),

    #[error("integration step underflow ({0} steps requested)")]
    StepUnderflow(f64),

    /// Carries the serialized report of every attempted candidate.
    #[error("both perturbation candidates classified inconclusive")]
    BothInconclusive { reports: Vec<String> },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, LabError>;
