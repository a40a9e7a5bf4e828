use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty bitstring")]
    EmptyBitstring,
    #[error("invalid character {found:?} at position {position} in bitstring")]
    InvalidBit { found: char, position: usize },
    #[error("length mismatch: expected {expected}, got {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("no records")]
    NoRecords,
    #[error("malformed row {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("duplicate bitstring {0}")]
    DuplicateBitstring(String),
    #[error("dataset is missing required vector {0}")]
    MissingVector(String),
    #[error("stage {stage} exceeds maximum stage {max}")]
    StageOutOfRange { stage: usize, max: usize },
    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),
    #[error("{what} = {n} is too large for exhaustive enumeration (max {max})")]
    TooLarge { what: &'static str, n: usize, max: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("training diverged at epoch {epoch} (loss {loss})")]
    Diverged { epoch: usize, loss: f64 },
    #[error("model has no nonzero coefficient to scale by")]
    AllZeroModel,
    #[error("n0 = {n0} is out of range 0..={n}")]
    CardinalityOutOfRange { n0: usize, n: usize },
    #[error("qubit index {index} out of range for {n} qubits")]
    QubitOutOfRange { index: usize, n: usize },
    #[error("site {0} fixed more than once")]
    DoubleFix(usize),
    #[error("circuit expects {expected} parameters, got {found}")]
    ParameterCount { expected: usize, found: usize },
    #[error("objective returned non-finite value {value} at evaluation {evaluation}")]
    NonFiniteObjective { evaluation: usize, value: f64 },
    #[error("calibration matrix is ill-conditioned (condition estimate {condition:e})")]
    IllConditioned { condition: f64 },
    #[error("distribution is not normalized (total {0})")]
    Unnormalized(f64),
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
