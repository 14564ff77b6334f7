use std::io;

/// Errors raised anywhere in the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("coordinate {value} exceeds the encodable magnitude {v_max}")]
    CoordinateOutOfRange { value: f64, v_max: f64 },

    #[error("squared distances may reach {bound}, which does not fit below 2^{bits}")]
    RangeOverflow { bound: u128, bits: u32 },

    #[error("encoded coordinate {value} exceeds the scale maximum {max}")]
    ResidualOutOfRange { value: u64, max: u64 },

    #[error("padding distance {d_max} does not exceed the largest attainable candidate distance {bound}")]
    DmaxTooSmall { bound: u128, d_max: u64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("need at least {needed} vectors, got {got}")]
    TooFewVectors { needed: usize, got: usize },

    #[error("{n0} vectors do not fit into {n_list} lists of capacity {capacity}")]
    InfeasibleCapacity { n0: usize, n_list: usize, capacity: usize },

    #[error("item identifier {item} is not below 2^{bits}")]
    ItemOutOfRange { item: u64, bits: u32 },

    #[error("duplicate item identifier {0}")]
    DuplicateItem(u64),

    #[error("{what} must be a power of two, got {value}")]
    NotPowerOfTwo { what: &'static str, value: usize },

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("authentication path has {got} siblings, position {position} needs at least {needed}")]
    PathLengthMismatch { got: usize, needed: usize, position: usize },

    #[error("tuple must not be empty")]
    EmptyTuple,

    #[error("sequence lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("code budget {budget} is not divisible by log2(K) = {log_k}")]
    NonIntegralDerivedParam { budget: usize, log_k: u32 },

    #[error("infeasible budgets: {0}")]
    InfeasibleBudgets(String),

    #[error("malformed {what}: {reason}")]
    Malformed { what: &'static str, reason: String },

    #[error("circuit fingerprint mismatch")]
    FingerprintMismatch,

    #[error("witness is inconsistent with the claimed statement: {0}")]
    WitnessInconsistent(String),

    #[error("proof rejected: {0}")]
    Rejected(String),

    #[error("proof generation failed: {0}")]
    Prover(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn malformed(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Malformed { what, reason: reason.into() }
    }
}
