use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point is at the origin; the norm is not smooth there")]
    ZeroPoint,

    #[error("norm is not smooth at the requested point: {0}")]
    NonSmoothPoint(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid norm specification: {0}")]
    InvalidSpec(String),

    #[error("expression parse error: {0}")]
    Parse(String),

    #[error("point lies outside the norm's validity cone: {0}")]
    OutOfCone(String),

    #[error("Hessian is not positive definite at a sampled point: {0}")]
    ConvexityLost(String),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("plane is degenerate (vectors nearly parallel or null)")]
    DegeneratePlane,

    #[error("Newton iteration failed to converge: {0}")]
    NewtonFailed(String),

    #[error("root bracketing failed: {0}")]
    BracketFailed(String),

    #[error("deformation supports overlap or touch the band boundary")]
    OverlappingSupports,

    #[error("indicatrix lengths disagree: {0} vs {1}")]
    LengthMismatch(f64, f64),

    #[error("quadrature failed to stabilise: {0}")]
    QuadratureFailure(String),

    #[error("classification is indeterminate: {0}")]
    Indeterminate(String),

    #[error("too few samples: need at least {need}, got {got}")]
    InsufficientSamples { need: usize, got: usize },

    #[error("model fit failed: {0}")]
    FitFailure(String),

    #[error("sampled map does not act by a fixed orthogonal block on the sphere factors: {0}")]
    NotOrbitPreserving(String),

    #[error("ODE integration failed: {0}")]
    Integration(String),

    #[error("integrated profile became non-positive at theta = {0}")]
    NonPositiveH(f64),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
