//! Barycenters of boundary measures in the Poincaré ball.
//!
//! A density `f` on the sphere defines the averaged Busemann function
//! `𝔹_μ(x) = ∫ B_θ(x) dμ(θ)`. It is strictly convex on real hyperbolic space,
//! and its unique critical point is the barycenter. Hessians and frame
//! gradients are expressed in the g-orthonormal frame `E_k = e_k / λ(x)`,
//! `λ = 2/(1 − |x|²)`, where the Busemann gradient has coordinates
//! `c = λ ∇B_θ`, a Euclidean unit vector.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::fisher::{connect, fisher_inner, geometric_mean, levi_civita};
use crate::hyperbolic::{hyp_distance, hyp_exp, BallPoint, MoebiusIsometry};
use crate::measure::{pushforward, sup_diff, Measure, QuadratureGrid, TangentMeasure};
use crate::tolerances;

/// Real hyperbolic space of ball dimension `dim` with volume entropy `Q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperbolicModel {
    pub dim: usize,
    pub entropy: f64,
}

impl HyperbolicModel {
    /// `ℝH^d` with curvature −1, whose volume entropy is `d − 1`.
    pub fn real_hyperbolic(dim: usize) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::UnsupportedDimension(dim));
        }
        Ok(Self {
            dim,
            entropy: (dim - 1) as f64,
        })
    }

    pub fn new(dim: usize, entropy: f64) -> Result<Self> {
        if !(entropy > 0.0) {
            return Err(Error::InvalidArgument(format!("entropy must be positive, got {entropy}")));
        }
        Ok(Self { dim, entropy })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarycenterResult {
    pub point: BallPoint,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub hessian_min_eigenvalue: f64,
}

fn check_dims(grid: &QuadratureGrid, x: &BallPoint) -> Result<()> {
    if grid.dim() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: grid.dim(),
            got: x.dim(),
        });
    }
    Ok(())
}

/// Per-node Busemann data at a fixed `x`.
struct NodeData {
    /// `B_θᵢ(x)`.
    values: Vec<f64>,
    /// Euclidean gradients `dB_θᵢ` as covectors, so `dB(u) = eg · u`.
    euclidean: Vec<DVector<f64>>,
    /// `λ` at `x`.
    lambda: f64,
}

impl NodeData {
    fn new(grid: &QuadratureGrid, x: &BallPoint) -> Result<Self> {
        check_dims(grid, x)?;
        let xc = x.coords();
        let xx = xc.norm_squared();
        let s = 1.0 - xx;
        let mut values = Vec::with_capacity(grid.len());
        let mut euclidean = Vec::with_capacity(grid.len());
        for theta in grid.nodes() {
            let dist2 = (xc - theta).norm_squared() / theta.norm_squared();
            if dist2 < tolerances::BALL_MARGIN * tolerances::BALL_MARGIN {
                return Err(Error::BusemannOverflow);
            }
            values.push((dist2 / s).ln());
            euclidean.push((xc - theta) * (2.0 / dist2) + xc * (2.0 / s));
        }
        Ok(Self {
            values,
            euclidean,
            lambda: 2.0 / s,
        })
    }

    /// Frame coordinates of the Busemann gradient at node `i`.
    fn frame(&self, i: usize, k: usize) -> f64 {
        self.euclidean[i][k] / self.lambda
    }

    fn value(&self, grid: &QuadratureGrid, f: &[f64]) -> f64 {
        grid.sum(|i| f[i] * self.values[i])
    }

    fn frame_gradient(&self, grid: &QuadratureGrid, f: &[f64]) -> DVector<f64> {
        let d = grid.dim();
        DVector::from_fn(d, |k, _| grid.sum(|i| f[i] * self.frame(i, k)))
    }

    fn frame_hessian(&self, grid: &QuadratureGrid, f: &[f64]) -> DMatrix<f64> {
        let d = grid.dim();
        let mut h = DMatrix::zeros(d, d);
        for a in 0..d {
            for b in a..d {
                let delta = if a == b { 1.0 } else { 0.0 };
                let v = grid.sum(|i| f[i] * (delta - self.frame(i, a) * self.frame(i, b)));
                h[(a, b)] = v;
                h[(b, a)] = v;
            }
        }
        h
    }
}

/// `𝔹_μ(x) = Σ wᵢ fᵢ B_θᵢ(x)`.
pub fn averaged_busemann(mu: &Measure, x: &BallPoint) -> Result<f64> {
    let grid = mu.grid();
    Ok(NodeData::new(grid, x)?.value(grid, mu.density()))
}

/// Riemannian gradient of [`averaged_busemann`] in Euclidean coordinates.
pub fn averaged_busemann_gradient(mu: &Measure, x: &BallPoint) -> Result<DVector<f64>> {
    let grid = mu.grid();
    let data = NodeData::new(grid, x)?;
    Ok(data.frame_gradient(grid, mu.density()) / data.lambda)
}

/// Hessian of [`averaged_busemann`] in the g-orthonormal frame `e_k / λ`.
pub fn averaged_busemann_hessian(mu: &Measure, x: &BallPoint) -> Result<DMatrix<f64>> {
    let grid = mu.grid();
    Ok(NodeData::new(grid, x)?.frame_hessian(grid, mu.density()))
}

fn min_eigenvalue(h: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(h.clone())
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Damped Riemannian Newton iteration for the critical point of `𝔹_μ`,
/// started at the origin.
pub fn barycenter(mu: &Measure, model: &HyperbolicModel) -> Result<BarycenterResult> {
    let grid = Arc::clone(mu.grid());
    if grid.dim() != model.dim {
        return Err(Error::DimensionMismatch {
            expected: model.dim,
            got: grid.dim(),
        });
    }
    let f = mu.density();
    let mut x = BallPoint::origin(model.dim);
    let mut data = NodeData::new(&grid, &x)?;
    let mut value = data.value(&grid, f);
    let mut gradient = data.frame_gradient(&grid, f);
    for iteration in 0..=tolerances::BARYCENTER_MAX_ITERATIONS {
        let hessian = data.frame_hessian(&grid, f);
        let min_eig = min_eigenvalue(&hessian);
        if !(min_eig >= tolerances::BARYCENTER_MIN_EIGENVALUE) {
            return Err(Error::SingularHessian(min_eig));
        }
        let gnorm = gradient.norm();
        if gnorm <= tolerances::BARYCENTER_GRADIENT {
            return Ok(BarycenterResult {
                point: x,
                gradient_norm: gnorm,
                iterations: iteration,
                hessian_min_eigenvalue: min_eig,
            });
        }
        if iteration == tolerances::BARYCENTER_MAX_ITERATIONS {
            break;
        }
        let step = hessian
            .cholesky()
            .ok_or(Error::SingularHessian(min_eig))?
            .solve(&(-&gradient));
        let slope = gradient.dot(&step);
        let slack = 1e-14 * (1.0 + value.abs());
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let candidate = hyp_exp(&x, &(&step * (t / data.lambda)));
            let cdata = NodeData::new(&grid, &candidate)?;
            let cvalue = cdata.value(&grid, f);
            let cgrad = cdata.frame_gradient(&grid, f);
            // Near the minimum the decrease drowns in round-off, so a
            // smaller gradient also counts as progress.
            if cvalue <= value + tolerances::ARMIJO_C * t * slope + slack || cgrad.norm() < gnorm {
                accepted = Some((candidate, cdata, cvalue, cgrad));
                break;
            }
            t *= 0.5;
        }
        let Some((nx, ndata, nvalue, ngrad)) = accepted else {
            return Err(Error::NoConvergence {
                iterations: iteration,
                gradient_norm: gnorm,
            });
        };
        x = nx;
        data = ndata;
        value = nvalue;
        gradient = ngrad;
    }
    Err(Error::NoConvergence {
        iterations: tolerances::BARYCENTER_MAX_ITERATIONS,
        gradient_norm: gradient.norm(),
    })
}

/// The measure `exp(−Q B_θ(x)) dθ`.
pub fn poisson_kernel_measure(
    x: &BallPoint,
    model: &HyperbolicModel,
    grid: &Arc<QuadratureGrid>,
) -> Result<Measure> {
    let data = NodeData::new(grid, x)?;
    let samples: Vec<f64> = data.values.iter().map(|b| (-model.entropy * b).exp()).collect();
    let mass = grid.integrate(&samples)?;
    if (mass - 1.0).abs() > tolerances::POISSON_MASS {
        return Err(Error::MassDrift(mass - 1.0));
    }
    Measure::from_samples(grid, samples)
}

fn require_critical(mu: &Measure, x: &BallPoint) -> Result<NodeData> {
    let grid = mu.grid();
    let data = NodeData::new(grid, x)?;
    let g = data.frame_gradient(grid, mu.density()).norm();
    if g > tolerances::FIBER_GRADIENT {
        return Err(Error::NotBarycenter(g));
    }
    Ok(data)
}

fn nu_from_data(mu: &Measure, data: &NodeData, u: &DVector<f64>) -> Result<TangentMeasure> {
    let f = mu.density();
    let samples = (0..f.len()).map(|i| data.euclidean[i].dot(u) * f[i]).collect();
    TangentMeasure::from_samples(mu.grid(), samples)
}

/// `ν_x^μ(u)` with density `(dB_θ)_x(u) · f`. `x` must be the barycenter of `μ`.
pub fn nu_map(mu: &Measure, x: &BallPoint, u: &DVector<f64>) -> Result<TangentMeasure> {
    let data = require_critical(mu, x)?;
    if u.len() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            got: u.len(),
        });
    }
    nu_from_data(mu, &data, u)
}

/// Images of the g-orthonormal frame under `ν_x^μ`.
fn nu_frame(mu: &Measure, x: &BallPoint) -> Result<Vec<TangentMeasure>> {
    let data = require_critical(mu, x)?;
    (0..x.dim())
        .map(|k| {
            let mut e = DVector::zeros(x.dim());
            e[k] = 1.0 / data.lambda;
            nu_from_data(mu, &data, &e)
        })
        .collect()
}

/// Splits `τ` into `(vertical, horizontal)`: horizontal is the G-orthogonal
/// projection onto the image of `ν_x^μ`.
pub fn fiber_decompose(
    mu: &Measure,
    x: &BallPoint,
    tau: &TangentMeasure,
) -> Result<(TangentMeasure, TangentMeasure)> {
    mu.check_grid(tau.grid())?;
    let basis = nu_frame(mu, x)?;
    let d = basis.len();
    let mut gram = DMatrix::zeros(d, d);
    let mut rhs = DVector::zeros(d);
    for a in 0..d {
        for b in 0..d {
            gram[(a, b)] = fisher_inner(mu, &basis[a], &basis[b])?;
        }
        rhs[a] = fisher_inner(mu, tau, &basis[a])?;
    }
    if min_eigenvalue(&gram) <= tolerances::BARYCENTER_MIN_EIGENVALUE * gram.trace().abs().max(1.0) {
        return Err(Error::DegenerateGram);
    }
    let coeffs = gram.cholesky().ok_or(Error::DegenerateGram)?.solve(&rhs);
    let mut horizontal = TangentMeasure::zero(mu.grid());
    for (k, nu) in basis.iter().enumerate() {
        horizontal = horizontal.combine(1.0, nu, coeffs[k]);
    }
    let vertical = tau.combine(1.0, &horizontal, -1.0);
    Ok((vertical, horizontal))
}

/// Horizontal part of `∇_α β` for fields tangent to the fiber through `μ`.
pub fn second_fundamental_form(
    mu: &Measure,
    x: &BallPoint,
    alpha: &TangentMeasure,
    beta: &TangentMeasure,
) -> Result<TangentMeasure> {
    let nabla = levi_civita(mu, alpha, beta)?;
    Ok(fiber_decompose(mu, x, &nabla)?.1)
}

/// `G_{μ_x}(dΘ u, dΘ v) = Q² ∫ dB_θ(u) dB_θ(v) dμ_x`, with `u`, `v` in
/// Euclidean coordinates at `x`.
pub fn pullback_metric(
    x: &BallPoint,
    u: &DVector<f64>,
    v: &DVector<f64>,
    model: &HyperbolicModel,
    grid: &Arc<QuadratureGrid>,
) -> Result<f64> {
    let mu = poisson_kernel_measure(x, model, grid)?;
    let data = NodeData::new(grid, x)?;
    let f = mu.density();
    let q = model.entropy;
    Ok(q * q * grid.sum(|i| f[i] * data.euclidean[i].dot(u) * data.euclidean[i].dot(v)))
}

/// The pullback metric at `x` in a g-unit direction, against both candidate
/// constants `Q/n` and `Q²/n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomothetyReport {
    pub dim: usize,
    pub measured: f64,
    pub q_over_n: f64,
    pub q_squared_over_n: f64,
}

pub fn homothety_report(
    x: &BallPoint,
    model: &HyperbolicModel,
    grid: &Arc<QuadratureGrid>,
) -> Result<HomothetyReport> {
    let mut u = DVector::zeros(model.dim);
    u[0] = 1.0 / x.conformal_factor();
    let q = model.entropy;
    let n = model.dim as f64;
    Ok(HomothetyReport {
        dim: model.dim,
        measured: pullback_metric(x, &u, &u, model, grid)?,
        q_over_n: q / n,
        q_squared_over_n: q * q / n,
    })
}

/// Both sides of `∇d𝔹_{μ_x}(u,u) = Q G_{μ_x}(ν(u), ν(u))` at a Poisson measure.
pub fn hessian_identity(
    x: &BallPoint,
    u: &DVector<f64>,
    model: &HyperbolicModel,
    grid: &Arc<QuadratureGrid>,
) -> Result<(f64, f64)> {
    let mu = poisson_kernel_measure(x, model, grid)?;
    let h = averaged_busemann_hessian(&mu, x)?;
    let uf = u * x.conformal_factor();
    let lhs = (uf.transpose() * h * &uf)[(0, 0)];
    let nu = nu_map(&mu, x, u)?;
    let rhs = model.entropy * fisher_inner(&mu, &nu, &nu)?;
    Ok((lhs, rhs))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberGeodesicReport {
    /// Distance from `x` of the barycenter of the geometric mean.
    pub sigma_distance: f64,
    pub sigma_in_fiber: bool,
    /// Largest distance from `x` of barycenters along the connecting geodesic.
    pub max_distance: f64,
    /// Whether the two findings agree.
    pub consistent: bool,
}

/// Compares membership of `σ(μ, μ₁)` in the fiber over `x` with the behavior
/// of the connecting geodesic, sampled at `samples` points of `[0, ℓ]`.
pub fn fiber_geodesic_check(
    mu: &Measure,
    mu1: &Measure,
    x: &BallPoint,
    model: &HyperbolicModel,
    samples: usize,
) -> Result<FiberGeodesicReport> {
    require_critical(mu, x)?;
    require_critical(mu1, x)?;
    let sigma = geometric_mean(mu, mu1)?;
    let sigma_distance = hyp_distance(&barycenter(&sigma, model)?.point, x);
    let segment = connect(mu, mu1)?;
    let mut max_distance: f64 = 0.0;
    if !segment.is_degenerate() {
        let n = samples.max(2);
        for k in 0..n {
            let t = segment.length() * k as f64 / (n - 1) as f64;
            let p = barycenter(&segment.point(t)?, model)?.point;
            max_distance = max_distance.max(hyp_distance(&p, x));
        }
    }
    let sigma_in_fiber = sigma_distance <= tolerances::FIBER_DISTANCE;
    Ok(FiberGeodesicReport {
        sigma_distance,
        sigma_in_fiber,
        max_distance,
        consistent: sigma_in_fiber == (max_distance <= tolerances::FIBER_DISTANCE),
    })
}

/// `d(bar(φ̂♯μ), φ(bar μ))`.
pub fn equivariance_defect(phi: &MoebiusIsometry, mu: &Measure, model: &HyperbolicModel) -> Result<f64> {
    let pushed = pushforward(phi, mu)?;
    let lhs = barycenter(&pushed, model)?.point;
    let rhs = phi.apply(&barycenter(mu, model)?.point)?;
    Ok(hyp_distance(&lhs, &rhs))
}

/// Sup-norm gap between `Θ(φx)` and `φ̂♯Θ(x)`.
pub fn theta_commutation_defect(
    phi: &MoebiusIsometry,
    x: &BallPoint,
    model: &HyperbolicModel,
    grid: &Arc<QuadratureGrid>,
) -> Result<f64> {
    let lhs = poisson_kernel_measure(&phi.apply(x)?, model, grid)?;
    let rhs = pushforward(phi, &poisson_kernel_measure(x, model, grid)?)?;
    Ok(sup_diff(lhs.density(), rhs.density()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::make_grid;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn entropy_matches_volume_growth() {
        // (1/r) log vol B(r) with vol ∝ ∫₀ʳ sinh^{d−1}; compare slopes far out.
        for d in [2usize, 3] {
            let log_vol = |r: f64| {
                let n = 20_000;
                let h = r / n as f64;
                let mut acc = 0.0;
                for k in 0..=n {
                    let w = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
                    acc += w * (k as f64 * h).sinh().powi(d as i32 - 1);
                }
                (acc * h / 3.0).ln()
            };
            let slope = (log_vol(200.0) - log_vol(100.0)) / 100.0;
            let model = HyperbolicModel::real_hyperbolic(d).unwrap();
            assert!((slope - model.entropy).abs() < 1e-6, "{d}: {slope}");
        }
        assert!(HyperbolicModel::new(2, 0.0).is_err());
    }

    #[test]
    fn uniform_measure_at_origin() {
        let g = make_grid(2, 64).unwrap();
        let mu = Measure::uniform(&g);
        let o = BallPoint::origin(2);
        assert_eq!(averaged_busemann(&mu, &o).unwrap(), 0.0);
        assert!(averaged_busemann_gradient(&mu, &o).unwrap().norm() < 1e-15);
        let h = averaged_busemann_hessian(&mu, &o).unwrap();
        assert!((h - DMatrix::identity(2, 2) * 0.5).amax() < 1e-14);
        let r = barycenter(&mu, &HyperbolicModel::real_hyperbolic(2).unwrap()).unwrap();
        assert_eq!(r.iterations, 0);
        assert!(r.point.coords().norm() < 1e-15);
    }

    #[test]
    fn poisson_examples() {
        let g = make_grid(2, 256).unwrap();
        let model = HyperbolicModel::real_hyperbolic(2).unwrap();
        let x = BallPoint::from_slice(&[0.5, 0.0]).unwrap();
        let mu = poisson_kernel_measure(&x, &model, &g).unwrap();
        assert!((mu.density()[0] - 3.0).abs() < 1e-12);
        let o = poisson_kernel_measure(&BallPoint::origin(2), &model, &g).unwrap();
        assert!(o.density().iter().all(|&f| (f - 1.0).abs() < 1e-15));
        let x = BallPoint::from_slice(&[0.3, 0.0]).unwrap();
        let r = barycenter(&poisson_kernel_measure(&x, &model, &g).unwrap(), &model).unwrap();
        assert!(hyp_distance(&r.point, &x) < 1e-8);
        assert!(r.gradient_norm <= 1e-10 && r.hessian_min_eigenvalue > 0.0);
    }

    #[test]
    fn poisson_mass_guard() {
        let g = make_grid(2, 8).unwrap();
        let model = HyperbolicModel::real_hyperbolic(2).unwrap();
        let x = BallPoint::from_slice(&[0.9, 0.0]).unwrap();
        assert!(matches!(poisson_kernel_measure(&x, &model, &g), Err(Error::MassDrift(_))));
    }

    #[test]
    fn nu_map_requires_barycenter() {
        let g = make_grid(2, 64).unwrap();
        let mu = Measure::uniform(&g);
        let x = BallPoint::from_slice(&[0.2, 0.0]).unwrap();
        assert!(matches!(nu_map(&mu, &x, &v(&[0.5, 0.0])), Err(Error::NotBarycenter(_))));
        let o = BallPoint::origin(2);
        assert_eq!(nu_map(&mu, &o, &v(&[0.0, 0.0])).unwrap().sup_norm(), 0.0);
        // dB_θ(0)(u) = −2⟨θ, u⟩.
        let nu = nu_map(&mu, &o, &v(&[0.5, 0.0])).unwrap();
        for (i, theta) in g.nodes().iter().enumerate() {
            assert!((nu.density()[i] + theta[0]).abs() < 1e-14);
        }
    }

    #[test]
    fn fiber_decomposition_of_image_and_kernel() {
        let g = make_grid(2, 128).unwrap();
        let mu = Measure::uniform(&g);
        let o = BallPoint::origin(2);
        let image = nu_map(&mu, &o, &v(&[0.1, 0.3])).unwrap();
        let (vert, hor) = fiber_decompose(&mu, &o, &image).unwrap();
        assert!(vert.sup_norm() < 1e-14);
        assert!(sup_diff(hor.density(), image.density()) < 1e-14);
        let kernel = TangentMeasure::from_fn(&g, |x| x[0] * x[1]).unwrap();
        let (vert, hor) = fiber_decompose(&mu, &o, &kernel).unwrap();
        assert!(hor.sup_norm() < 1e-14);
        assert!(sup_diff(vert.density(), kernel.density()) < 1e-14);
    }

    #[test]
    fn pullback_at_origin_in_the_plane() {
        let g = make_grid(2, 64).unwrap();
        let model = HyperbolicModel::real_hyperbolic(2).unwrap();
        let r = homothety_report(&BallPoint::origin(2), &model, &g).unwrap();
        assert!((r.measured - 0.5).abs() < 1e-14);
        assert_eq!(r.q_over_n, r.q_squared_over_n);
    }

    #[test]
    fn convex_along_geodesics() {
        let g = make_grid(2, 64).unwrap();
        let mu = Measure::from_fn(&g, |x| 1.0 + 0.6 * x[0] + 0.2 * x[1] * x[1]).unwrap();
        let start = BallPoint::from_slice(&[-0.5, 0.3]).unwrap();
        let dir = v(&[0.8, -0.6]);
        let h = 1e-3;
        for k in 0..40 {
            let at = |t: f64| averaged_busemann(&mu, &crate::hyperbolic::hyp_geodesic(&start, &dir, t)).unwrap();
            let t = 0.1 * k as f64;
            assert!(at(t + h) - 2.0 * at(t) + at(t - h) >= -1e-8 * h * h, "t = {t}");
        }
    }
}
