//! The space of positive probability densities on a discretized sphere.

mod density;
mod grid;
mod pushforward;

pub use density::{
    alpha_pairing, d_rho_alpha, kl_divergence, measure_from_samples, rho_alpha,
    tangent_from_samples, Measure, TangentMeasure,
};
pub(crate) use density::sup_diff;
pub use grid::{
    integrate, make_grid, parallel_quadrature, set_parallel_quadrature, QuadratureGrid,
    MIN_RESOLUTION,
};
pub use pushforward::{
    intrinsic_jacobian, pushforward, pushforward_tangent, tangent_frame, BoundaryMap,
    CircleRotation, Composed, Resampler,
};
