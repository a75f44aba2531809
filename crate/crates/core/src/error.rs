use thiserror::Error;

/// Everything that can go wrong in the geometry, positioning, sparsification
/// and selection layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("origin is not in the interior of the body")]
    OriginNotInterior,
    #[error("body is unbounded")]
    Unbounded,
    #[error("body is empty")]
    InfeasibleBody,
    #[error("intersection has empty interior")]
    EmptyInterior,
    #[error("dimension {dim} exceeds the configured cap {cap}")]
    DimensionTooLarge { dim: usize, cap: usize },
    #[error("body is not full-dimensional")]
    DegenerateBody,
    #[error("point set does not affinely span the space")]
    DegeneratePointSet,
    #[error("found {found} contact points, need at least {needed}")]
    TooFewContacts { found: usize, needed: usize },
    #[error("no valid decomposition of the identity (residual {residual:e})")]
    NoValidDecomposition { residual: f64 },
    #[error("no multiset within budget {budget} meets epsilon {epsilon} and the centroid bound")]
    BudgetInfeasible { budget: usize, epsilon: f64 },
    #[error("index {index} out of range for source of size {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("target point is not in the convex hull")]
    NotInHull,
    #[error("lifted operator violates the (1 +/- 2 eps) sandwich: eigenvalues [{lambda_min}, {lambda_max}]")]
    SandwichViolated { lambda_min: f64, lambda_max: f64 },
    #[error(
        "body is not in {mode} position (center offset {center_offset:e}, shape gap {shape_gap:e})"
    )]
    NotInPosition {
        mode: &'static str,
        center_offset: f64,
        shape_gap: f64,
    },
    #[error("family generation failed: {0}")]
    GenerationFailed(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("numerical solver failed: {0}")]
    SolverFailed(String),
    #[error("i/o failure: {0}")]
    IoFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::IoFailure(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::IoFailure(e.to_string())
    }
}
