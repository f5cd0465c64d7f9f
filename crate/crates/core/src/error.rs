use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("lattice basis is singular (|det| = {det:e}, threshold {threshold:e})")]
    SingularBasis { det: f64, threshold: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("lattice enumeration needs {candidates} candidate cells, budget is {budget}")]
    BudgetExceeded { candidates: f64, budget: f64 },

    #[error("frequency |xi| = {norm} exceeds the grid guard {limit}")]
    FrequencyOutOfRange { norm: f64, limit: f64 },

    #[error("inner box must lie strictly inside the outer box")]
    DegenerateBoxes,

    #[error("inadmissible Gabor parameters alpha = {alpha}, beta = {beta}: alpha*beta must be < 2*pi")]
    InadmissibleParameters { alpha: f64, beta: f64 },

    #[error("coefficient table has no entry for j = {j:?}, k = {k:?}")]
    MissingCoefficients { j: Vec<i64>, k: Vec<i64> },

    #[error("series has {got} shells, classification needs at least {need}")]
    TooFewShells { got: usize, need: usize },

    #[error("cell around x0 = {x0:?} leaves no room for a cutoff: {reason}")]
    DomainClipped { x0: Vec<f64>, reason: String },

    #[error("epsilon = {epsilon} puts Gabor supports around x0 outside the signal domain")]
    EpsilonTooLarge { epsilon: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
