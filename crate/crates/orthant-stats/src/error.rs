use thiserror::Error;

use crate::orthant_complex::AxisSet;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("axis {axis} is outside the ambient dimension {dim}")]
    AxisOutOfRange { axis: usize, dim: usize },

    #[error("ambient dimension {0} is not supported (must be between 1 and 64)")]
    UnsupportedDimension(usize),

    #[error("flag condition fails: every 2-face of {0} is present but the orthant is not")]
    FlagViolation(AxisSet),

    #[error("axes {0} do not span a stratum of the space")]
    NotAStratum(AxisSet),

    #[error("coordinate {value} on axis {axis} is negative or not finite")]
    InvalidCoordinate { axis: usize, value: f64 },

    #[error("malformed geodesic support: {0}")]
    MalformedSupport(String),

    #[error("no valid geodesic support found between the two points")]
    NoSupportFound,

    #[error("geodesic parameter {0} is outside [0, 1]")]
    ParameterOutOfRange(f64),

    #[error("oracle budget exceeded after {0} carrier sequences")]
    BudgetExceeded(usize),

    #[error("vector is zero")]
    ZeroVector,

    #[error("point lies on the singular set D of the base point")]
    OnSingularSet,

    #[error("geodesic support did not stabilise along the step ladder")]
    StabilizationFailure,

    #[error("invalid tangent vector: {0}")]
    InvalidTangent(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("mean iteration did not converge after {iterations} iterations (gradient norm {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("matrix is singular")]
    SingularMatrix,

    #[error("preconditions failed: {}", .0.join("; "))]
    PreconditionFailed(Vec<String>),

    #[error("hypothesis not met: {0}")]
    HypothesisNotMet(String),

    #[error("Monte-Carlo replicate {rep} failed: {source}")]
    Replicate {
        rep: usize,
        #[source]
        source: Box<Error>,
    },
}
