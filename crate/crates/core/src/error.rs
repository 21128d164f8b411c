use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("ensemble has no atoms")]
    EmptyEnsemble,
    #[error("atom {index}: {len} entries do not form a square matrix of dimension {dim}")]
    NonSquare { index: usize, len: usize, dim: usize },
    #[error("atom {0}: probability must be strictly positive")]
    ZeroProbability(usize),
    #[error("atom {index}: not invertible (|det| = {det:e})")]
    NotInvertible { index: usize, det: f64 },
    #[error("atom {0}: not allowable (negative entry, or a row or column without a positive entry)")]
    NotAllowable(usize),
    #[error("matrix is singular (smallest singular value {0:e})")]
    SingularInvertible(f64),
    #[error("cannot project the zero vector")]
    ZeroVector,
    #[error("negative coordinate for a point of the positive sphere")]
    NegativeCoordinate,
    #[error("image collapsed to zero (|gx| = {0:e})")]
    CollapsedImage(f64),
    #[error("directions belong to different spaces or norms")]
    SpaceMismatch,
    #[error("dimension {0} unsupported: the spectral solver requires d = 2")]
    UnsupportedDimension(usize),
    #[error("power iteration did not converge within {0} iterations")]
    NoConvergence(usize),
    #[error("dominant eigenvalue not separated (second/first = {0:.4})")]
    GapCollapse(f64),
    #[error("polynomial fit of Lambda is ill-conditioned (residual {0:e})")]
    IllConditionedFit(f64),
    #[error("degenerate variance (sigma^2 = {0:e})")]
    DegenerateVariance(f64),
    #[error("tilt equation has no root in [-{window}, {window}]")]
    RootOutsideWindow { window: f64 },
    #[error("{value} lies outside the admissible window {window}")]
    OutsideWindow { value: f64, window: f64 },
    #[error("negative tilted weight {0:e}")]
    NegativeWeight(f64),
    #[error("every path was rejected for weight overflow")]
    AllWeightsRejected,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unsupported file format version {0}")]
    FormatVersion(u32),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
