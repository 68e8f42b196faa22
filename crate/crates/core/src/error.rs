use thiserror::Error;

/// Errors raised by the geometry routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported grid dimension {0} (expected 2 or 3)")]
    UnsupportedDimension(usize),

    #[error("grid resolution {got} is below the minimum {min}")]
    ResolutionTooLow { got: usize, min: usize },

    #[error("length mismatch: expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("operands live on different grids ({0} vs {1})")]
    GridMismatch(String, String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("density is not positive at node {index} (value {value:e})")]
    NonPositiveDensity { index: usize, value: f64 },

    #[error("total mass {0:e} cannot be normalized")]
    ZeroMass(f64),

    #[error("velocity must have unit Fisher norm, got {0}")]
    NonUnitVelocity(f64),

    #[error("curve leaves the positive densities at t = {t}")]
    LeftPositiveCone { t: f64 },

    #[error("points are too far apart for the totally normal regime (distance {0})")]
    OutOfNormalRegime(f64),

    #[error("parameter t = {t} outside [0, {length}]")]
    ParameterOutOfRange { t: f64, length: f64 },

    #[error("boundary Jacobian is not positive at node {index} (value {value:e})")]
    NonPositiveJacobian { index: usize, value: f64 },

    #[error("pushforward mass drifted by {0:e} before renormalization")]
    MassDrift(f64),

    #[error("zero-mean constraint drifted by {0:e}")]
    MeanDrift(f64),

    #[error("point with norm {0} is not inside the open unit ball")]
    OutsideBall(f64),

    #[error("ideal point has norm {0}, expected 1")]
    NotUnitDirection(f64),

    #[error("point is too close to the ideal point for a finite Busemann value")]
    BusemannOverflow,

    #[error("matrix is not orthogonal (defect {0:e})")]
    NotOrthogonal(f64),

    #[error("barycenter solver did not converge after {iterations} iterations (gradient norm {gradient_norm:e})")]
    NoConvergence { iterations: usize, gradient_norm: f64 },

    #[error("Hessian is numerically singular (min eigenvalue {0:e})")]
    SingularHessian(f64),

    #[error("point is not the barycenter of the measure (gradient norm {0:e})")]
    NotBarycenter(f64),

    #[error("Gram matrix of the horizontal frame is degenerate")]
    DegenerateGram,

    #[error("shooting failed: {0}")]
    Shooting(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("malformed input: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Whether the error stems from bad user input rather than a numerical
    /// failure of a well-posed computation.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::UnsupportedDimension(_)
                | Error::ResolutionTooLow { .. }
                | Error::LengthMismatch { .. }
                | Error::GridMismatch(..)
                | Error::DimensionMismatch { .. }
                | Error::NonPositiveDensity { .. }
                | Error::ZeroMass(_)
                | Error::OutsideBall(_)
                | Error::NotUnitDirection(_)
                | Error::NotOrthogonal(_)
                | Error::OutOfNormalRegime(_)
                | Error::InvalidArgument(_)
                | Error::Io(_)
                | Error::Format(_)
        )
    }
}
