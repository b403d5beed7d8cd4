use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("value {value} lies outside [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("noise sample {w} exceeds the bound W/2 = {half_bound}")]
    NoiseOutOfBounds { w: f64, half_bound: f64 },

    #[error("matrix has a non-real eigenvalue {re} + {im}i")]
    NonRealEigenvalue { re: f64, im: f64 },

    #[error("cannot decompose matrix automatically: {0}")]
    DegenerateDecomposition(String),

    #[error("code rate {rate} is not below capacity {capacity}")]
    RateAboveCapacity { rate: f64, capacity: f64 },

    #[error("exact enumeration limited to n <= {max_n}, r <= {max_r} (got n = {n}, r = {r})")]
    BudgetExceeded { n: usize, r: usize, max_n: usize, max_r: usize },

    #[error("no blocklength in [{n_min}, {n_max}] stabilizes the estimator")]
    AllUnbounded { n_min: usize, n_max: usize },

    #[error("no root in the bracket [{lo}, {hi}]")]
    NoRoot { lo: f64, hi: f64 },

    #[error("linear system is numerically singular")]
    SingularSystem,

    #[error("invariant violated: {0}")]
    InvariantViolation(String),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }
}
