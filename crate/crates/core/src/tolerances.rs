//! Numerical constants shared by the library and the verification suites.
//!
//! Analytic identities are checked at machine-precision tolerances; anything
//! that goes through grid resampling is budgeted separately.

/// Densities at or below this value are treated as non-positive.
pub const POSITIVITY: f64 = 1e-14;

/// Unit mass / zero mean invariants of stored densities.
pub const MASS: f64 = 1e-10;

/// Grid nodes must be unit vectors and weights must sum to one within this.
pub const GRID: f64 = 1e-12;

/// Slack allowed when a Bhattacharyya coefficient overshoots `[-1, 1]`.
pub const ARCCOS_CLAMP: f64 = 1e-12;

/// Unit-speed requirement for closed-form Fisher geodesics.
pub const UNIT_SPEED: f64 = 1e-8;

/// Step for finite-difference geometric oracles (curvature, covariant acceleration).
pub const FD_GEOMETRIC_STEP: f64 = 1e-4;

/// Step for the second difference of the KL divergence.
pub const FD_KL_STEP: f64 = 1e-3;

/// Step for boundary-map Jacobians in intrinsic coordinates.
pub const FD_JACOBIAN_STEP: f64 = 1e-6;

/// Maximum allowed mass drift of a resampled pushforward before renormalization.
pub const PUSHFORWARD_MASS_DRIFT: f64 = 1e-6;

/// Positions closer than this to a grid node (in grid-step units) snap to the node.
pub const NODE_SNAP: f64 = 1e-9;

/// Maximum drift of the zero-mean constraint of an ODE velocity before projection.
pub const ODE_MEAN_DRIFT: f64 = 1e-6;

/// Ball points must satisfy `|x| < 1 - BALL_MARGIN`.
pub const BALL_MARGIN: f64 = 1e-9;

/// Ideal points must be unit vectors within this.
pub const IDEAL_UNIT: f64 = 1e-12;

/// Orthogonality defect accepted for isometry rotation parts.
pub const ORTHOGONAL: f64 = 1e-12;

/// Barycenter solver: stopping gradient norm.
pub const BARYCENTER_GRADIENT: f64 = 1e-10;

/// Barycenter solver: iteration budget.
pub const BARYCENTER_MAX_ITERATIONS: usize = 200;

/// Barycenter solver: Hessians with a smaller eigenvalue are singular.
pub const BARYCENTER_MIN_EIGENVALUE: f64 = 1e-12;

/// Armijo sufficient-decrease constant.
pub const ARMIJO_C: f64 = 1e-4;

/// Fiber membership: gradient norm of the averaged Busemann function.
pub const FIBER_GRADIENT: f64 = 1e-8;

/// Fiber-geodesic criterion: distance of a barycenter from the fiber base.
pub const FIBER_DISTANCE: f64 = 1e-6;

/// Allowed deviation from one of the Poisson kernel's mass before renormalization.
pub const POISSON_MASS: f64 = 1e-8;
