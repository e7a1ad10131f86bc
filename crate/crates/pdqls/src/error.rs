use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max |H_ij - conj(H_ji)| = {max_asymmetry:.3e})")]
    NotHermitian { max_asymmetry: f64 },

    #[error("operator norm {spectral_radius} exceeds 1")]
    NormExceeded { spectral_radius: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dimension {0} exceeds the dense cap of {cap}", cap = crate::linalg::DENSE_CAP)]
    TooLarge(usize),

    #[error("null post-selection (p_succ = {p_succ:.3e})")]
    NullPostselection { p_succ: f64 },

    #[error("row {row} is not diagonally dominant (margin {margin:.3e})")]
    NotDiagonallyDominant { row: usize, margin: f64 },

    #[error("block encoding must be normalized, got alpha = {alpha}")]
    NotNormalized { alpha: f64 },

    #[error("|p(x)| = {value} exceeds {bound} at x = {x}")]
    PolynomialBound { x: f64, value: f64, bound: f64 },

    #[error("term {term}: {reason}")]
    InvalidTerm { term: usize, reason: String },

    #[error("term {term} is not positive definite (lambda_min = {lambda_min:.3e})")]
    NotPositiveDefinite { term: usize, lambda_min: f64 },

    #[error("eigenvalue {eigenvalue} outside promised interval [{lo}, {hi}]")]
    SpectrumPromise { eigenvalue: f64, lo: f64, hi: f64 },

    #[error("window construction failed (eps = {eps}, delta = {delta}, degree = {degree}): {detail}")]
    WindowConstruction {
        eps: f64,
        delta: f64,
        degree: usize,
        detail: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numerical check failed: {0}")]
    NumericalCheck(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of a numerical self-check, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NumericalCheck(_) | Error::NullPostselection { .. } | Error::WindowConstruction { .. }
        )
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
