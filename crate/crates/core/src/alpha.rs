//! The α-connections, their duality and curvature, and α-geodesics.
//!
//! The α-geodesic equation
//! `∂ₜ(ḟ/f) + ((1−α)/2)(ḟ/f)² + ((1+α)/2) ∫(ḟ/f)² f dλ = 0`
//! becomes, after substituting `∂ₜ(ḟ/f) = f̈/f − (ḟ/f)²`,
//! `f̈ = ((1+α)/2)(ḟ²/f − E f)` with `E = ∫ ḟ²/f dλ`, which is what the
//! RK4 integrator steps. Writing `u = f^β`, `β = (1−α)/2`, the same equation
//! reads `ü = −β(1−β) E u`, so an α-geodesic stays in the plane spanned by
//! `u(0)` and `u̇(0)`. The two-point shooting solver relies on this: the
//! initial direction is fixed by the endpoints and only the speed is searched.

use std::sync::Arc;

use log::warn;

use crate::error::{Error, Result};
use crate::fisher::{fisher_inner, fisher_norm, metric_derivative, scaled_connection, scaled_curvature};
use crate::measure::{Measure, QuadratureGrid, TangentMeasure};
use crate::tolerances;

fn warn_if_unusual(alpha: f64) {
    if !(-1.0..=1.0).contains(&alpha) {
        warn!("alpha = {alpha} lies outside [-1, 1]; formulas are extrapolated");
    }
}

/// `∇^(α)_τ τ₁ = −((1+α)/2)((dτ/dμ)(dτ₁/dμ) − G_μ(τ,τ₁)) μ`.
pub fn alpha_connection(
    alpha: f64,
    mu: &Measure,
    tau: &TangentMeasure,
    tau1: &TangentMeasure,
) -> Result<TangentMeasure> {
    scaled_connection(mu, tau, tau1, 1.0 + alpha)
}

/// `|τG(τ₁,τ₂) − G(∇^(α)_τ τ₁, τ₂) − G(τ₁, ∇^(−α)_τ τ₂)|`.
pub fn duality_defect(
    alpha: f64,
    mu: &Measure,
    tau: &TangentMeasure,
    tau1: &TangentMeasure,
    tau2: &TangentMeasure,
) -> Result<f64> {
    let lhs = metric_derivative(mu, tau, tau1, tau2)?;
    let a = fisher_inner(mu, &alpha_connection(alpha, mu, tau, tau1)?, tau2)?;
    let b = fisher_inner(mu, tau1, &alpha_connection(-alpha, mu, tau, tau2)?)?;
    Ok((lhs - a - b).abs())
}

/// `R^(α)_μ(τ₁,τ₂)τ = ((1−α²)/4)(G(τ,τ₂)τ₁ − G(τ,τ₁)τ₂)`.
pub fn alpha_curvature(
    alpha: f64,
    mu: &Measure,
    tau1: &TangentMeasure,
    tau2: &TangentMeasure,
    tau: &TangentMeasure,
) -> Result<TangentMeasure> {
    scaled_curvature(mu, tau1, tau2, tau, (1.0 - alpha * alpha) / 4.0)
}

/// Density and density velocity along an α-geodesic.
#[derive(Debug, Clone)]
pub struct AlphaGeodesicState {
    grid: Arc<QuadratureGrid>,
    pub f: Vec<f64>,
    pub fdot: Vec<f64>,
    pub alpha: f64,
    pub t: f64,
}

impl AlphaGeodesicState {
    pub fn new(mu: &Measure, velocity: &TangentMeasure, alpha: f64) -> Result<Self> {
        mu.check_grid(velocity.grid())?;
        warn_if_unusual(alpha);
        Ok(Self {
            grid: Arc::clone(mu.grid()),
            f: mu.density().to_vec(),
            fdot: velocity.density().to_vec(),
            alpha,
            t: 0.0,
        })
    }

    pub fn grid(&self) -> &Arc<QuadratureGrid> {
        &self.grid
    }

    pub fn measure(&self) -> Result<Measure> {
        Measure::from_positive_density(&self.grid, self.f.clone())
    }

    pub fn velocity(&self) -> TangentMeasure {
        TangentMeasure::from_density_unchecked(&self.grid, self.fdot.clone())
    }

    fn acceleration(&self, f: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        if f.iter().any(|&x| !(x > tolerances::POSITIVITY)) {
            return Err(Error::LeftPositiveCone { t: self.t });
        }
        let energy = self.grid.sum(|i| v[i] * v[i] / f[i]);
        let c = (1.0 + self.alpha) / 2.0;
        Ok((0..f.len()).map(|i| c * (v[i] * v[i] / f[i] - energy * f[i])).collect())
    }
}

fn axpy(x: &[f64], a: f64, y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(xi, yi)| xi + a * yi).collect()
}

/// One classical RK4 step followed by re-projection of `ḟ` to zero mean.
pub fn alpha_geodesic_step(state: &AlphaGeodesicState, dt: f64) -> Result<AlphaGeodesicState> {
    let (f, v) = (&state.f, &state.fdot);
    let a1 = state.acceleration(f, v)?;
    let f2 = axpy(f, dt / 2.0, v);
    let v2 = axpy(v, dt / 2.0, &a1);
    let a2 = state.acceleration(&f2, &v2)?;
    let f3 = axpy(f, dt / 2.0, &v2);
    let v3 = axpy(v, dt / 2.0, &a2);
    let a3 = state.acceleration(&f3, &v3)?;
    let f4 = axpy(f, dt, &v3);
    let v4 = axpy(v, dt, &a3);
    let a4 = state.acceleration(&f4, &v4)?;

    let n = f.len();
    let new_f: Vec<f64> = (0..n)
        .map(|i| f[i] + dt / 6.0 * (v[i] + 2.0 * v2[i] + 2.0 * v3[i] + v4[i]))
        .collect();
    let mut new_v: Vec<f64> = (0..n)
        .map(|i| v[i] + dt / 6.0 * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i]))
        .collect();
    if new_f.iter().any(|&x| !(x > tolerances::POSITIVITY)) {
        return Err(Error::LeftPositiveCone { t: state.t + dt });
    }
    let drift = state.grid.sum(|i| new_v[i]);
    if drift.abs() > tolerances::ODE_MEAN_DRIFT {
        return Err(Error::MeanDrift(drift));
    }
    new_v.iter_mut().for_each(|x| *x -= drift);
    Ok(AlphaGeodesicState {
        grid: Arc::clone(&state.grid),
        f: new_f,
        fdot: new_v,
        alpha: state.alpha,
        t: state.t + dt,
    })
}

pub fn alpha_geodesic_integrate(
    state: &AlphaGeodesicState,
    dt: f64,
    steps: usize,
) -> Result<AlphaGeodesicState> {
    let mut s = state.clone();
    for _ in 0..steps {
        s = alpha_geodesic_step(&s, dt)?;
    }
    Ok(s)
}

/// States at `samples` equally spaced times in `[0, t_end]`, integrating with
/// a step no larger than `dt`.
pub fn alpha_geodesic_samples(
    state: &AlphaGeodesicState,
    t_end: f64,
    dt: f64,
    samples: usize,
) -> Result<Vec<AlphaGeodesicState>> {
    if samples < 2 {
        return Err(Error::InvalidArgument("at least two samples are required".into()));
    }
    let interval = t_end / (samples - 1) as f64;
    let sub = ((interval / dt).ceil() as usize).max(1);
    let h = interval / sub as f64;
    let mut out = vec![state.clone()];
    let mut s = state.clone();
    for k in 1..samples {
        s = alpha_geodesic_integrate(&s, h, sub)?;
        s.t = interval * k as f64;
        out.push(s.clone());
    }
    Ok(out)
}

/// m-geodesic `(1−t)μ + tμ₁`.
pub fn m_geodesic(mu: &Measure, mu1: &Measure, t: f64) -> Result<Measure> {
    mu.check_grid(mu1.grid())?;
    let (f, f1) = (mu.density(), mu1.density());
    let density: Vec<f64> = f.iter().zip(f1).map(|(a, b)| (1.0 - t) * a + t * b).collect();
    if density.iter().any(|&v| !(v > tolerances::POSITIVITY)) {
        return Err(Error::LeftPositiveCone { t });
    }
    Measure::from_positive_density(mu.grid(), density)
}

/// e-geodesic `(∫(dμ₁/dμ)^{t/ℓ} dμ)⁻¹ (dμ₁/dμ)^{t/ℓ} μ`.
pub fn e_geodesic(mu: &Measure, mu1: &Measure, t: f64, ell: f64) -> Result<Measure> {
    mu.check_grid(mu1.grid())?;
    if !(ell > 0.0) {
        return Err(Error::InvalidArgument(format!("e-geodesic length must be positive, got {ell}")));
    }
    let s = t / ell;
    let (f, f1) = (mu.density(), mu1.density());
    let samples: Vec<f64> = f.iter().zip(f1).map(|(a, b)| a * (b / a).powf(s)).collect();
    Measure::from_samples(mu.grid(), samples)
}

/// Initial velocity of [`e_geodesic`]: `f (log r − ∫ f log r) / ℓ`, `r = f₁/f`.
pub fn e_geodesic_velocity(mu: &Measure, mu1: &Measure, ell: f64) -> Result<TangentMeasure> {
    mu.check_grid(mu1.grid())?;
    let log_ratio: Vec<f64> = mu
        .density()
        .iter()
        .zip(mu1.density())
        .map(|(a, b)| (b / a).ln() / ell)
        .collect();
    TangentMeasure::from_relative(mu, &log_ratio)
}

/// Sup-norm residual of the α-geodesic equation for a curve of measures,
/// using fourth-order central differences with the given step.
pub fn alpha_geodesic_residual<F>(curve: F, t: f64, alpha: f64, step: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<Measure>,
{
    let pts: Vec<Measure> = [-2.0, -1.0, 0.0, 1.0, 2.0]
        .iter()
        .map(|k| curve(t + k * step))
        .collect::<Result<_>>()?;
    let grid = Arc::clone(pts[2].grid());
    let n = grid.len();
    let d = |i: usize, k: usize| pts[k].density()[i];
    let h = step;
    let f: Vec<f64> = (0..n).map(|i| d(i, 2)).collect();
    let fd: Vec<f64> = (0..n)
        .map(|i| (d(i, 0) - 8.0 * d(i, 1) + 8.0 * d(i, 3) - d(i, 4)) / (12.0 * h))
        .collect();
    let fdd: Vec<f64> = (0..n)
        .map(|i| {
            (-d(i, 0) + 16.0 * d(i, 1) - 30.0 * d(i, 2) + 16.0 * d(i, 3) - d(i, 4)) / (12.0 * h * h)
        })
        .collect();
    let energy = grid.sum(|i| fd[i] * fd[i] / f[i]);
    let c = (1.0 + alpha) / 2.0;
    Ok((0..n)
        .map(|i| {
            let r = fd[i] / f[i];
            (fdd[i] / f[i] - c * (r * r - energy)).abs()
        })
        .fold(0.0, f64::max))
}

/// Result of the two-point shooting solve for an α-geodesic on `t ∈ [0, 1]`.
#[derive(Debug, Clone)]
pub struct AlphaShot {
    pub initial_velocity: TangentMeasure,
    pub alpha: f64,
    pub dt: f64,
    pub steps: usize,
    /// Sup-norm mismatch between the integrated endpoint and the target.
    pub endpoint_error: f64,
}

/// Fraction of the way from `μ` to `μ₁` reached by a density `g`, read off
/// the plane of the α-representation.
fn progress(mu: &Measure, mu1: &Measure, g: &[f64], beta: f64) -> f64 {
    let grid = mu.grid();
    let (f, f1) = (mu.density(), mu1.density());
    let n = f.len();
    // Least-squares fit of rep(g) on two basis samples.
    let (p, q, y): (Vec<f64>, Vec<f64>, Vec<f64>) = if beta == 0.0 {
        (
            (0..n).map(|i| (f1[i] / f[i]).ln()).collect(),
            vec![1.0; n],
            (0..n).map(|i| (g[i] / f[i]).ln()).collect(),
        )
    } else {
        (
            f1.iter().map(|x| x.powf(beta)).collect(),
            f.iter().map(|x| x.powf(beta)).collect(),
            g.iter().map(|x| x.powf(beta)).collect(),
        )
    };
    let pp = grid.sum(|i| p[i] * p[i]);
    let pq = grid.sum(|i| p[i] * q[i]);
    let qq = grid.sum(|i| q[i] * q[i]);
    let py = grid.sum(|i| p[i] * y[i]);
    let qy = grid.sum(|i| q[i] * y[i]);
    let det = pp * qq - pq * pq;
    let b = (py * qq - qy * pq) / det;
    let a = (pp * qy - pq * py) / det;
    if beta == 0.0 {
        b
    } else {
        b / (a + b)
    }
}

/// Solves for the α-geodesic from `μ` (t = 0) to `μ₁` (t = 1) by shooting on
/// the speed along the known initial direction.
pub fn shoot_alpha_geodesic(mu: &Measure, mu1: &Measure, alpha: f64, steps: usize) -> Result<AlphaShot> {
    mu.check_grid(mu1.grid())?;
    warn_if_unusual(alpha);
    if steps == 0 {
        return Err(Error::InvalidArgument("steps must be positive".into()));
    }
    let beta = (1.0 - alpha) / 2.0;
    let (f, f1) = (mu.density(), mu1.density());
    let relative: Vec<f64> = if beta == 0.0 {
        f.iter().zip(f1).map(|(a, b)| (b / a).ln()).collect()
    } else {
        f.iter().zip(f1).map(|(a, b)| (b / a).powf(beta)).collect()
    };
    let direction = TangentMeasure::from_relative(mu, &relative)?;
    let norm = fisher_norm(mu, &direction)?;
    if norm == 0.0 {
        return Ok(AlphaShot {
            initial_velocity: direction,
            alpha,
            dt: 1.0 / steps as f64,
            steps,
            endpoint_error: mu.sup_distance(mu1),
        });
    }
    let direction = direction.scaled(1.0 / norm);
    let dt = 1.0 / steps as f64;

    let reach = |speed: f64| -> Option<f64> {
        let state = AlphaGeodesicState::new(mu, &direction.scaled(speed), alpha).ok()?;
        let end = alpha_geodesic_integrate(&state, dt, steps).ok()?;
        let p = progress(mu, mu1, &end.f, beta);
        p.is_finite().then_some(p)
    };

    let guess = crate::fisher::ell_distance(mu, mu1)?.max(1e-12);
    let (mut lo, mut hi) = (0.0, guess);
    let mut bracketed = false;
    for _ in 0..60 {
        match reach(hi) {
            Some(p) if p < 1.0 => {
                lo = hi;
                hi *= 2.0;
            }
            _ => {
                bracketed = true;
                break;
            }
        }
    }
    if !bracketed {
        return Err(Error::Shooting("could not bracket the endpoint".into()));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match reach(mid) {
            Some(p) if p < 1.0 => lo = mid,
            _ => hi = mid,
        }
    }
    // Prefer whichever bracket end lands closer to the target.
    let mut best: Option<(f64, TangentMeasure)> = None;
    for speed in [lo, hi] {
        let v = direction.scaled(speed);
        let state = AlphaGeodesicState::new(mu, &v, alpha)?;
        if let Ok(end) = alpha_geodesic_integrate(&state, dt, steps) {
            let err = crate::measure::sup_diff(&end.f, f1);
            if best.as_ref().map_or(true, |(e, _)| err < *e) {
                best = Some((err, v));
            }
        }
    }
    let (endpoint_error, initial_velocity) =
        best.ok_or_else(|| Error::Shooting("integration failed at both bracket ends".into()))?;
    Ok(AlphaShot {
        initial_velocity,
        alpha,
        dt,
        steps,
        endpoint_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fisher::{geodesic_point, geometric_mean, levi_civita};
    use crate::measure::{make_grid, sup_diff};

    fn setup() -> (Arc<QuadratureGrid>, Measure, Measure) {
        let g = make_grid(2, 128).unwrap();
        let mu = Measure::from_fn(&g, |x| (0.4 * x[0] - 0.1 * x[1]).exp()).unwrap();
        let mu1 = Measure::from_fn(&g, |x| 1.0 + 0.3 * x[1] + 0.2 * (x[0] * x[0] - x[1] * x[1])).unwrap();
        (g, mu, mu1)
    }

    #[test]
    fn special_values_of_alpha() {
        let (g, mu, _) = setup();
        let t1 = TangentMeasure::from_fn(&g, |x| x[0] + 0.3 * x[1]).unwrap();
        let t2 = TangentMeasure::from_fn(&g, |x| x[0] * x[1]).unwrap();
        let lc = levi_civita(&mu, &t1, &t2).unwrap();
        let a0 = alpha_connection(0.0, &mu, &t1, &t2).unwrap();
        assert!(sup_diff(lc.density(), a0.density()) == 0.0);
        assert!(alpha_connection(-1.0, &mu, &t1, &t2).unwrap().sup_norm() == 0.0);

        let lambda = Measure::uniform(&g);
        let c = TangentMeasure::from_fn(&g, |x| x[0]).unwrap();
        let e = alpha_connection(1.0, &lambda, &c, &c).unwrap();
        for (i, x) in g.nodes().iter().enumerate() {
            let cos2 = x[0] * x[0] - x[1] * x[1];
            assert!((e.density()[i] + 0.5 * cos2).abs() < 1e-14);
        }
        for a in [-1.0, 1.0] {
            assert!(alpha_curvature(a, &mu, &t1, &t2, &c).unwrap().sup_norm() == 0.0);
        }
    }

    #[test]
    fn duality_holds_for_sample_alphas() {
        let (g, mu, _) = setup();
        let t = TangentMeasure::from_fn(&g, |x| x[0] - 0.2 * x[1] * x[0]).unwrap();
        let t1 = TangentMeasure::from_fn(&g, |x| x[1] + 0.5 * x[0] * x[0]).unwrap();
        let t2 = TangentMeasure::from_fn(&g, |x| (2.0 * x[0]).sin()).unwrap();
        for a in [0.0, 0.5, 1.0, -0.7] {
            assert!(duality_defect(a, &mu, &t, &t1, &t2).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn m_and_e_endpoints() {
        let (_, mu, mu1) = setup();
        assert!(m_geodesic(&mu, &mu1, 0.0).unwrap().sup_distance(&mu) < 1e-15);
        assert!(m_geodesic(&mu, &mu1, 1.0).unwrap().sup_distance(&mu1) < 1e-15);
        let mid = m_geodesic(&mu, &mu1, 0.5).unwrap();
        let avg: Vec<f64> = mu.density().iter().zip(mu1.density()).map(|(a, b)| (a + b) / 2.0).collect();
        assert!(sup_diff(mid.density(), &avg) < 1e-15);

        for ell in [1.0, 2.5] {
            assert!(e_geodesic(&mu, &mu1, 0.0, ell).unwrap().sup_distance(&mu) < 1e-14);
            assert!(e_geodesic(&mu, &mu1, ell, ell).unwrap().sup_distance(&mu1) < 1e-14);
            let mid = e_geodesic(&mu, &mu1, ell / 2.0, ell).unwrap();
            assert!(mid.sup_distance(&geometric_mean(&mu, &mu1).unwrap()) < 1e-10);
        }
        assert!(e_geodesic(&mu, &mu1, 0.5, 0.0).is_err());
    }

    #[test]
    fn closed_forms_solve_the_ode() {
        let (_, mu, mu1) = setup();
        let r = alpha_geodesic_residual(|t| m_geodesic(&mu, &mu1, t), 0.4, -1.0, 1e-2).unwrap();
        assert!(r <= 1e-10, "{r}");
        let r = alpha_geodesic_residual(|t| e_geodesic(&mu, &mu1, t, 1.0), 0.4, 1.0, 1e-2).unwrap();
        assert!(r <= 1e-8, "{r}");
    }

    #[test]
    fn m_line_is_integrated_exactly() {
        let (_, mu, mu1) = setup();
        let h = mu1.difference(&mu).unwrap();
        let s = AlphaGeodesicState::new(&mu, &h, -1.0).unwrap();
        let end = alpha_geodesic_integrate(&s, 0.01, 100).unwrap();
        assert!(sup_diff(&end.f, mu1.density()) < 1e-12);
    }

    #[test]
    fn lc_geodesic_matches_closed_form() {
        let (g, mu, _) = setup();
        let raw = TangentMeasure::from_relative(&mu, &g.sample(|x| 0.5 * x[1] + 0.2 * x[0] * x[1])).unwrap();
        let tau = raw.scaled(1.0 / fisher_norm(&mu, &raw).unwrap());
        let s = AlphaGeodesicState::new(&mu, &tau, 0.0).unwrap();
        let end = alpha_geodesic_integrate(&s, 1e-3, 1000).unwrap();
        let exact = geodesic_point(&mu, &tau, 1.0).unwrap();
        assert!(sup_diff(&end.f, exact.density()) < 1e-6);
    }

    #[test]
    fn shooting_hits_the_target() {
        let (_, mu, mu1) = setup();
        for alpha in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            let shot = shoot_alpha_geodesic(&mu, &mu1, alpha, 400).unwrap();
            assert!(shot.endpoint_error < 1e-8, "alpha {alpha}: {}", shot.endpoint_error);
        }
    }
}
