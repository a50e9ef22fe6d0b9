use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument violates a precondition (base-point mismatch, bad weights, membership).
    #[error("domain error: {0}")]
    Domain(String),

    /// Tangent vector longer than the injectivity radius of the sphere.
    #[error("tangent norm {norm} is not below the injectivity radius {limit}")]
    Injectivity { norm: f64, limit: f64 },

    #[error("points are (numerically) antipodal; the logarithm is undefined")]
    Antipodal,

    #[error("numerical routine failed to converge: {0}")]
    Convergence(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("trace is missing data required for certification: {0}")]
    MissingData(String),

    /// A bound was requested outside the range where its hypotheses hold.
    #[error("hypothesis not satisfied: {0}")]
    Hypothesis(String),

    #[error("iterate left the admissible domain at t={t}: distance {distance} > radius {radius}")]
    RuntimeContainment { t: usize, distance: f64, radius: f64 },

    /// Broken internal invariant; indicates a bug rather than bad input.
    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
