//! Pushforward of measures along boundary homeomorphisms.
//!
//! The pushforward density at a node `θ` is `f(Φ⁻¹θ) · Jac(Φ⁻¹)(θ)`. Values of
//! `f` off the grid come from a periodic cubic spline on the circle and from
//! bilinear interpolation in `(polar, azimuth)` on the 2-sphere. Preimages
//! that land on a node (to `NODE_SNAP` grid steps) read the node value
//! directly, so commensurate rotations permute densities exactly.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::measure::density::{Measure, TangentMeasure};
use crate::measure::grid::{Layout, QuadratureGrid};
use crate::tolerances;

/// A bijection of the boundary sphere with a positive Jacobian.
pub trait BoundaryMap {
    /// Ambient dimension `d` of the sphere `S^{d-1}`.
    fn dim(&self) -> usize;

    fn forward(&self, theta: &DVector<f64>) -> DVector<f64>;

    fn backward(&self, theta: &DVector<f64>) -> DVector<f64>;

    /// Jacobian determinant of the inverse map with respect to the sphere
    /// measure. Defaults to central differences in an orthonormal frame.
    fn backward_jacobian(&self, theta: &DVector<f64>) -> f64 {
        intrinsic_jacobian(|p| self.backward(p), theta)
    }
}

/// Orthonormal basis of the tangent space of `S^{d-1}` at `theta`.
pub fn tangent_frame(theta: &DVector<f64>) -> Vec<DVector<f64>> {
    let d = theta.len();
    let mut frame: Vec<DVector<f64>> = Vec::with_capacity(d - 1);
    let mut basis: Vec<DVector<f64>> = vec![theta.clone()];
    for k in 0..d {
        if frame.len() == d - 1 {
            break;
        }
        let mut v = DVector::zeros(d);
        v[k] = 1.0;
        for b in &basis {
            let c = v.dot(b);
            v -= b * c;
        }
        let n = v.norm();
        if n > 1e-3 {
            v /= n;
            basis.push(v.clone());
            frame.push(v);
        }
    }
    frame
}

/// Intrinsic Jacobian determinant of a sphere map at `theta`, by central
/// differences along great circles with step `FD_JACOBIAN_STEP`.
pub fn intrinsic_jacobian<F>(map: F, theta: &DVector<f64>) -> f64
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let h = tolerances::FD_JACOBIAN_STEP;
    let frame = tangent_frame(theta);
    let d = theta.len();
    let mut cols = DMatrix::zeros(d, frame.len());
    for (k, e) in frame.iter().enumerate() {
        let plus = map(&(theta * h.cos() + e * h.sin()));
        let minus = map(&(theta * h.cos() - e * h.sin()));
        cols.set_column(k, &((plus - minus) / (2.0 * h)));
    }
    let gram = cols.transpose() * &cols;
    gram.determinant().max(0.0).sqrt()
}

/// Rotation of the circle by a fixed angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleRotation {
    pub angle: f64,
}

impl CircleRotation {
    pub fn new(angle: f64) -> Self {
        Self { angle }
    }

    /// Rotation by `k` grid steps of an `n`-node circle grid.
    pub fn grid_steps(k: i64, n: usize) -> Self {
        Self::new(2.0 * PI * k as f64 / n as f64)
    }

    fn rotate(theta: &DVector<f64>, a: f64) -> DVector<f64> {
        let (s, c) = a.sin_cos();
        DVector::from_vec(vec![c * theta[0] - s * theta[1], s * theta[0] + c * theta[1]])
    }
}

impl BoundaryMap for CircleRotation {
    fn dim(&self) -> usize {
        2
    }

    fn forward(&self, theta: &DVector<f64>) -> DVector<f64> {
        Self::rotate(theta, self.angle)
    }

    fn backward(&self, theta: &DVector<f64>) -> DVector<f64> {
        Self::rotate(theta, -self.angle)
    }

    fn backward_jacobian(&self, _theta: &DVector<f64>) -> f64 {
        1.0
    }
}

/// `outer ∘ inner`.
pub struct Composed<'a> {
    pub outer: &'a dyn BoundaryMap,
    pub inner: &'a dyn BoundaryMap,
}

impl BoundaryMap for Composed<'_> {
    fn dim(&self) -> usize {
        self.outer.dim()
    }

    fn forward(&self, theta: &DVector<f64>) -> DVector<f64> {
        self.outer.forward(&self.inner.forward(theta))
    }

    fn backward(&self, theta: &DVector<f64>) -> DVector<f64> {
        self.inner.backward(&self.outer.backward(theta))
    }

    fn backward_jacobian(&self, theta: &DVector<f64>) -> f64 {
        let mid = self.outer.backward(theta);
        self.inner.backward_jacobian(&mid) * self.outer.backward_jacobian(theta)
    }
}

/// Evaluates grid samples at arbitrary points of the sphere.
pub struct Resampler<'a> {
    grid: &'a QuadratureGrid,
    samples: &'a [f64],
    second_derivatives: Vec<f64>,
}

impl<'a> Resampler<'a> {
    pub fn new(grid: &'a QuadratureGrid, samples: &'a [f64]) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: samples.len(),
            });
        }
        let second_derivatives = match grid.layout() {
            Layout::Circle { n } => periodic_spline_moments(samples, 2.0 * PI / *n as f64),
            Layout::Sphere { .. } => Vec::new(),
        };
        Ok(Self {
            grid,
            samples,
            second_derivatives,
        })
    }

    pub fn eval(&self, point: &DVector<f64>) -> f64 {
        match self.grid.layout() {
            Layout::Circle { n } => self.eval_circle(*n, point),
            Layout::Sphere { polar, azimuths } => self.eval_sphere(polar, *azimuths, point),
        }
    }

    fn eval_circle(&self, n: usize, point: &DVector<f64>) -> f64 {
        let h = 2.0 * PI / n as f64;
        let pos = point[1].atan2(point[0]).rem_euclid(2.0 * PI) / h;
        let (i, s) = split_position(pos, n);
        let j = (i + 1) % n;
        if s == 0.0 {
            return self.samples[i];
        }
        let y = self.samples;
        let m = &self.second_derivatives;
        let r = 1.0 - s;
        r * y[i] + s * y[j] + h * h / 6.0 * ((r * r * r - r) * m[i] + (s * s * s - s) * m[j])
    }

    fn eval_sphere(&self, polar: &[f64], azimuths: usize, point: &DVector<f64>) -> f64 {
        let z = point[2].clamp(-1.0, 1.0);
        let theta = z.acos();
        let phi = point[1].atan2(point[0]).rem_euclid(2.0 * PI);
        let levels = polar.len();

        let at_level = |level: usize, phi: f64| -> f64 {
            let pos = phi.rem_euclid(2.0 * PI) / (2.0 * PI / azimuths as f64);
            let (k, s) = split_position(pos, azimuths);
            let base = level * azimuths;
            let a = self.samples[base + k];
            if s == 0.0 {
                a
            } else {
                let b = self.samples[base + (k + 1) % azimuths];
                (1.0 - s) * a + s * b
            }
        };

        // Virtual levels across the poles reuse the first/last ring at φ + π.
        if theta < polar[0] {
            let lo = -polar[0];
            let s = snap((theta - lo) / (polar[0] - lo));
            return (1.0 - s) * at_level(0, phi + PI) + s * at_level(0, phi);
        }
        if theta > polar[levels - 1] {
            let last = polar[levels - 1];
            let hi = 2.0 * PI - last;
            let s = snap((theta - last) / (hi - last));
            return (1.0 - s) * at_level(levels - 1, phi) + s * at_level(levels - 1, phi + PI);
        }
        let j = polar.partition_point(|&p| p <= theta).saturating_sub(1).min(levels - 2);
        let s = snap((theta - polar[j]) / (polar[j + 1] - polar[j]));
        if s == 0.0 {
            return at_level(j, phi);
        }
        if s == 1.0 {
            return at_level(j + 1, phi);
        }
        (1.0 - s) * at_level(j, phi) + s * at_level(j + 1, phi)
    }
}

fn snap(s: f64) -> f64 {
    if s.abs() < tolerances::NODE_SNAP {
        0.0
    } else if (1.0 - s).abs() < tolerances::NODE_SNAP {
        1.0
    } else {
        s
    }
}

/// Splits a periodic grid position into a node index and a fraction in
/// `[0, 1)`, snapping to the nearest node when within `NODE_SNAP`.
fn split_position(pos: f64, n: usize) -> (usize, f64) {
    let nearest = pos.round();
    if (pos - nearest).abs() < tolerances::NODE_SNAP {
        return ((nearest as i64).rem_euclid(n as i64) as usize, 0.0);
    }
    let i = pos.floor();
    ((i as i64).rem_euclid(n as i64) as usize, pos - i)
}

/// Second derivatives of the periodic cubic spline through `y` on a uniform
/// grid with spacing `h`: solves the cyclic system
/// `M[i-1] + 4 M[i] + M[i+1] = 6 (y[i+1] - 2 y[i] + y[i-1]) / h²`.
fn periodic_spline_moments(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let rhs: Vec<f64> = (0..n)
        .map(|i| 6.0 * (y[(i + 1) % n] - 2.0 * y[i] + y[(i + n - 1) % n]) / (h * h))
        .collect();
    solve_cyclic_tridiagonal(1.0, 4.0, 1.0, &rhs)
}

/// Sherman–Morrison solve of a constant-coefficient cyclic tridiagonal system.
fn solve_cyclic_tridiagonal(sub: f64, diag: f64, sup: f64, rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    let gamma = -diag;
    let mut b = vec![diag; n];
    b[0] = diag - gamma;
    b[n - 1] = diag - sub * sup / gamma;
    let x = solve_tridiagonal(sub, &b, sup, rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = sub;
    let z = solve_tridiagonal(sub, &b, sup, &u);
    let fact = (x[0] + sup * x[n - 1] / gamma) / (1.0 + z[0] + sup * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect()
}

fn solve_tridiagonal(sub: f64, diag: &[f64], sup: f64, rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - sub * c[i - 1];
        c[i] = sup / m;
        d[i] = (rhs[i] - sub * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

fn check_map_dim(map: &dyn BoundaryMap, grid: &QuadratureGrid) -> Result<()> {
    if map.dim() != grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: grid.dim(),
            got: map.dim(),
        });
    }
    Ok(())
}

/// Resampled, Jacobian-weighted density values `f(Φ⁻¹θᵢ)·Jac(Φ⁻¹)(θᵢ)`.
fn transported(map: &dyn BoundaryMap, grid: &Arc<QuadratureGrid>, density: &[f64]) -> Result<Vec<f64>> {
    check_map_dim(map, grid)?;
    let resampler = Resampler::new(grid, density)?;
    grid.nodes()
        .iter()
        .enumerate()
        .map(|(index, theta)| {
            let jac = map.backward_jacobian(theta);
            if !(jac > 0.0) {
                return Err(Error::NonPositiveJacobian { index, value: jac });
            }
            Ok(resampler.eval(&map.backward(theta)) * jac)
        })
        .collect()
}

/// Pushforward `Φ♯μ`, renormalized to unit mass.
pub fn pushforward(map: &dyn BoundaryMap, mu: &Measure) -> Result<Measure> {
    let grid = mu.grid();
    let values = transported(map, grid, mu.density())?;
    let mass = grid.integrate(&values)?;
    if (mass - 1.0).abs() > tolerances::PUSHFORWARD_MASS_DRIFT {
        return Err(Error::MassDrift(mass - 1.0));
    }
    Measure::from_positive_density(grid, values)
}

/// Pushforward of a tangent vector, `(dΦ♯)_μ τ = Φ♯τ`, projected to zero mean.
pub fn pushforward_tangent(map: &dyn BoundaryMap, tau: &TangentMeasure) -> Result<TangentMeasure> {
    let grid = tau.grid();
    let values = transported(map, grid, tau.density())?;
    TangentMeasure::from_samples(grid, values)
}
