//! Riemannian geometry of the Fisher metric on positive densities.
//!
//! Tangent vectors are treated as constant vector fields on the affine space
//! of measures, which gives closed forms for the connection, curvature and
//! geodesics. The space has constant sectional curvature 1/4, and its
//! geodesics are great circles of the square-root embedding.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::measure::{Measure, TangentMeasure};
use crate::tolerances;

/// `G_μ(τ, τ₁) = ∫ (dτ/dμ)(dτ₁/dμ) dμ`.
pub fn fisher_inner(mu: &Measure, tau: &TangentMeasure, tau1: &TangentMeasure) -> Result<f64> {
    mu.check_grid(tau.grid())?;
    mu.check_grid(tau1.grid())?;
    let (f, h, h1) = (mu.density(), tau.density(), tau1.density());
    Ok(mu.grid().sum(|i| h[i] * h1[i] / f[i]))
}

pub fn fisher_norm(mu: &Measure, tau: &TangentMeasure) -> Result<f64> {
    Ok(fisher_inner(mu, tau, tau)?.sqrt())
}

/// Derivative of `G(τ₁, τ₂)` along the constant field `τ`:
/// `-∫ (dτ/dμ)(dτ₁/dμ)(dτ₂/dμ) dμ`.
pub fn metric_derivative(
    mu: &Measure,
    tau: &TangentMeasure,
    tau1: &TangentMeasure,
    tau2: &TangentMeasure,
) -> Result<f64> {
    mu.check_grid(tau.grid())?;
    mu.check_grid(tau1.grid())?;
    mu.check_grid(tau2.grid())?;
    let (f, a, b, c) = (mu.density(), tau.density(), tau1.density(), tau2.density());
    Ok(-mu.grid().sum(|i| a[i] * b[i] * c[i] / (f[i] * f[i])))
}

/// `-(k/2)((dτ/dμ)(dτ₁/dμ) − G_μ(τ,τ₁)) μ`; `k = 1` is the Levi-Civita
/// connection and `k = 1 + α` the α-connection.
pub(crate) fn scaled_connection(
    mu: &Measure,
    tau: &TangentMeasure,
    tau1: &TangentMeasure,
    k: f64,
) -> Result<TangentMeasure> {
    let g = fisher_inner(mu, tau, tau1)?;
    let (f, h, h1) = (mu.density(), tau.density(), tau1.density());
    let density = (0..f.len())
        .map(|i| -0.5 * k * (h[i] * h1[i] / f[i] - g * f[i]))
        .collect();
    Ok(TangentMeasure::from_density_unchecked(mu.grid(), density))
}

/// Levi-Civita connection on constant fields, `(∇_τ τ₁)_μ`.
pub fn levi_civita(mu: &Measure, tau: &TangentMeasure, tau1: &TangentMeasure) -> Result<TangentMeasure> {
    scaled_connection(mu, tau, tau1, 1.0)
}

/// `c · (G(τ,τ₂)τ₁ − G(τ,τ₁)τ₂)`.
pub(crate) fn scaled_curvature(
    mu: &Measure,
    tau1: &TangentMeasure,
    tau2: &TangentMeasure,
    tau: &TangentMeasure,
    c: f64,
) -> Result<TangentMeasure> {
    let g2 = fisher_inner(mu, tau, tau2)?;
    let g1 = fisher_inner(mu, tau, tau1)?;
    Ok(tau1.combine(c * g2, tau2, -c * g1))
}

/// Riemann curvature `R_μ(τ₁, τ₂)τ = ¼(G(τ,τ₂)τ₁ − G(τ,τ₁)τ₂)`.
pub fn curvature(
    mu: &Measure,
    tau1: &TangentMeasure,
    tau2: &TangentMeasure,
    tau: &TangentMeasure,
) -> Result<TangentMeasure> {
    scaled_curvature(mu, tau1, tau2, tau, 0.25)
}

/// Point at parameter `t` of the unit-speed geodesic from `μ` with initial
/// velocity `τ`: `(cos(t/2) + sin(t/2) dτ/dμ)² μ`.
pub fn geodesic_point(mu: &Measure, tau: &TangentMeasure, t: f64) -> Result<Measure> {
    let speed = fisher_norm(mu, tau)?;
    if (speed - 1.0).abs() > tolerances::UNIT_SPEED {
        return Err(Error::NonUnitVelocity(speed));
    }
    unit_geodesic_point(mu, tau, t)
}

fn unit_geodesic_point(mu: &Measure, tau: &TangentMeasure, t: f64) -> Result<Measure> {
    let (s, c) = (t / 2.0).sin_cos();
    let (f, h) = (mu.density(), tau.density());
    let density: Vec<f64> = (0..f.len())
        .map(|i| {
            let r = c + s * h[i] / f[i];
            r * r * f[i]
        })
        .collect();
    if density.iter().any(|&v| !(v > tolerances::POSITIVITY)) {
        return Err(Error::LeftPositiveCone { t });
    }
    Measure::from_positive_density(mu.grid(), density)
}

/// Bhattacharyya coefficient `∫ √(dμ₁/dμ) dμ = ∫ √(f f₁) dλ`.
pub fn bhattacharyya(mu: &Measure, mu1: &Measure) -> Result<f64> {
    mu.check_grid(mu1.grid())?;
    let (f, f1) = (mu.density(), mu1.density());
    Ok(mu.grid().sum(|i| (f[i] * f1[i]).sqrt()))
}

/// Fisher distance `ℓ(μ, μ₁) = 2 arccos(∫ √(dμ₁/dμ) dμ)`.
pub fn ell_distance(mu: &Measure, mu1: &Measure) -> Result<f64> {
    let bc = bhattacharyya(mu, mu1)?;
    Ok(2.0 * clamped_acos(bc))
}

fn clamped_acos(x: f64) -> f64 {
    let slack = tolerances::ARCCOS_CLAMP;
    debug_assert!(x <= 1.0 + slack && x >= -1.0 - slack, "cosine {x} out of range");
    x.clamp(-1.0, 1.0).acos()
}

/// Normalized geometric mean `σ(μ, μ₁)`: density `√(f f₁)` over the
/// Bhattacharyya coefficient.
pub fn geometric_mean(mu: &Measure, mu1: &Measure) -> Result<Measure> {
    mu.check_grid(mu1.grid())?;
    let (f, f1) = (mu.density(), mu1.density());
    let root: Vec<f64> = f.iter().zip(f1).map(|(a, b)| (a * b).sqrt()).collect();
    Measure::from_samples(mu.grid(), root)
}

/// Unit-speed Fisher geodesic `μ(t)`, `t ∈ [0, length]`, joining two measures.
#[derive(Debug, Clone)]
pub struct GeodesicSegment {
    start: Measure,
    end: Measure,
    initial_velocity: TangentMeasure,
    length: f64,
}

impl GeodesicSegment {
    pub fn start(&self) -> &Measure {
        &self.start
    }

    pub fn end(&self) -> &Measure {
        &self.end
    }

    pub fn initial_velocity(&self) -> &TangentMeasure {
        &self.initial_velocity
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn is_degenerate(&self) -> bool {
        self.length == 0.0
    }

    fn check_parameter(&self, t: f64) -> Result<()> {
        if !(0.0..=self.length).contains(&t) {
            return Err(Error::ParameterOutOfRange {
                t,
                length: self.length,
            });
        }
        Ok(())
    }

    /// Curve point via the closed form.
    pub fn point(&self, t: f64) -> Result<Measure> {
        self.check_parameter(t)?;
        if self.is_degenerate() {
            return Ok(self.start.clone());
        }
        unit_geodesic_point(&self.start, &self.initial_velocity, t)
    }

    /// Barycentric coordinates `(a, b, c)` of `μ(t)` on the simplex spanned by
    /// `μ`, `μ₁` and `σ(μ, μ₁)`.
    pub fn evaluate_simplex(&self, t: f64) -> Result<(f64, f64, f64)> {
        self.check_parameter(t)?;
        if self.is_degenerate() {
            return Ok((1.0, 0.0, 0.0));
        }
        let l = self.length;
        let s2 = (l / 2.0).sin().powi(2);
        let a = ((l - t) / 2.0).sin().powi(2) / s2;
        let b = (t / 2.0).sin().powi(2) / s2;
        let c = 2.0 * (l / 2.0).cos() * ((l - t) / 2.0).sin() * (t / 2.0).sin() / s2;
        Ok((a, b, c))
    }

    /// `a·μ + b·μ₁ + c·σ(μ, μ₁)`.
    pub fn simplex_point(&self, t: f64) -> Result<Measure> {
        let (a, b, c) = self.evaluate_simplex(t)?;
        let sigma = geometric_mean(&self.start, &self.end)?;
        let (f, f1, s) = (self.start.density(), self.end.density(), sigma.density());
        let density = (0..f.len()).map(|i| a * f[i] + b * f1[i] + c * s[i]).collect();
        Measure::from_positive_density(self.start.grid(), density)
    }
}

/// The unique geodesic segment joining `μ` to `μ₁`.
///
/// Equal measures give a zero-length segment with zero velocity.
pub fn connect(mu: &Measure, mu1: &Measure) -> Result<GeodesicSegment> {
    let bc = bhattacharyya(mu, mu1)?;
    let length = 2.0 * clamped_acos(bc);
    if length == 0.0 || mu.sup_distance(mu1) == 0.0 {
        return Ok(GeodesicSegment {
            start: mu.clone(),
            end: mu1.clone(),
            initial_velocity: TangentMeasure::zero(mu.grid()),
            length: 0.0,
        });
    }
    if length >= PI {
        return Err(Error::OutOfNormalRegime(length));
    }
    let sigma = geometric_mean(mu, mu1)?;
    let tau = sigma.difference(mu)?.scaled(1.0 / (length / 2.0).tan());
    Ok(GeodesicSegment {
        start: mu.clone(),
        end: mu1.clone(),
        initial_velocity: tau,
        length,
    })
}

/// `exp_μ(τ)`: the geodesic from `μ` in direction `τ/|τ|` at parameter `|τ|`.
pub fn exp_map(mu: &Measure, tau: &TangentMeasure) -> Result<Measure> {
    let norm = fisher_norm(mu, tau)?;
    if norm == 0.0 {
        return Ok(mu.clone());
    }
    if norm >= PI {
        return Err(Error::OutOfNormalRegime(norm));
    }
    unit_geodesic_point(mu, &tau.scaled(1.0 / norm), norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::make_grid;

    fn grid() -> std::sync::Arc<crate::measure::QuadratureGrid> {
        make_grid(2, 256).unwrap()
    }

    #[test]
    fn trig_inner_products() {
        let g = grid();
        let lambda = Measure::uniform(&g);
        let c = TangentMeasure::from_fn(&g, |x| x[0]).unwrap();
        let s = TangentMeasure::from_fn(&g, |x| x[1]).unwrap();
        assert!((fisher_inner(&lambda, &c, &c).unwrap() - 0.5).abs() < 1e-14);
        assert!(fisher_inner(&lambda, &c, &s).unwrap().abs() < 1e-15);
        let zero = TangentMeasure::zero(&g);
        let mu = Measure::from_fn(&g, |x| 2.0 + x[1]).unwrap();
        assert_eq!(fisher_inner(&mu, &c, &zero).unwrap(), 0.0);
    }

    #[test]
    fn connection_of_cosine() {
        let g = grid();
        let lambda = Measure::uniform(&g);
        let c = TangentMeasure::from_fn(&g, |x| x[0]).unwrap();
        let nabla = levi_civita(&lambda, &c, &c).unwrap();
        // cos²θ − ½ = ½ cos 2θ, so the result is −¼ cos 2θ.
        for (i, x) in g.nodes().iter().enumerate() {
            let cos2 = x[0] * x[0] - x[1] * x[1];
            assert!((nabla.density()[i] + 0.25 * cos2).abs() < 1e-14);
        }
        assert!(nabla.mean().abs() < 1e-15);
    }

    #[test]
    fn curvature_example() {
        let g = grid();
        let lambda = Measure::uniform(&g);
        let c = TangentMeasure::from_fn(&g, |x| x[0]).unwrap();
        let s = TangentMeasure::from_fn(&g, |x| x[1]).unwrap();
        let r = curvature(&lambda, &c, &s, &s).unwrap();
        for (i, x) in g.nodes().iter().enumerate() {
            assert!((r.density()[i] - x[0] / 8.0).abs() < 1e-14);
        }
        let r0 = curvature(&lambda, &c, &c, &s).unwrap();
        assert!(r0.sup_norm() < 1e-15);
    }

    #[test]
    fn geodesic_requires_unit_speed_and_positivity() {
        let g = grid();
        let lambda = Measure::uniform(&g);
        let c = TangentMeasure::from_fn(&g, |x| x[0]).unwrap();
        assert!(matches!(geodesic_point(&lambda, &c, 0.5), Err(Error::NonUnitVelocity(_))));
        let unit = c.scaled(2f64.sqrt());
        let p0 = geodesic_point(&lambda, &unit, 0.0).unwrap();
        assert!(p0.sup_distance(&lambda) < 1e-15);
        // Density 2cos²θ vanishes at θ = π/2.
        assert!(matches!(
            geodesic_point(&lambda, &unit, PI),
            Err(Error::LeftPositiveCone { .. })
        ));
    }

    #[test]
    fn closed_form_has_period_two_pi() {
        let g = grid();
        let mu = Measure::from_fn(&g, |x| (0.3 * x[0] - 0.2 * x[1]).exp()).unwrap();
        let raw = TangentMeasure::from_relative(&mu, &g.sample(|x| 0.2 * x[0] * x[1])).unwrap();
        let tau = raw.scaled(1.0 / fisher_norm(&mu, &raw).unwrap());
        let a = geodesic_point(&mu, &tau, 0.4).unwrap();
        let b = geodesic_point(&mu, &tau, 0.4 + 2.0 * PI).unwrap();
        assert!(a.sup_distance(&b) < 1e-12);
    }

    #[test]
    fn connect_reproduces_endpoints_and_degenerates() {
        let g = grid();
        let mu = Measure::from_fn(&g, |x| (0.5 * x[0]).exp()).unwrap();
        let mu1 = Measure::from_fn(&g, |x| 1.0 + 0.4 * x[1] * x[0] + 0.3 * x[1]).unwrap();
        let seg = connect(&mu, &mu1).unwrap();
        assert!(seg.point(0.0).unwrap().sup_distance(&mu) < 1e-14);
        assert!(seg.point(seg.length()).unwrap().sup_distance(&mu1) < 1e-9);
        assert!((fisher_norm(&mu, seg.initial_velocity()).unwrap() - 1.0).abs() < 1e-12);
        assert!(seg.point(seg.length() * 1.01).is_err());

        let same = connect(&mu, &mu).unwrap();
        assert!(same.is_degenerate());
        assert_eq!(same.evaluate_simplex(0.0).unwrap(), (1.0, 0.0, 0.0));
    }

    #[test]
    fn simplex_coordinates() {
        let g = grid();
        let mu = Measure::uniform(&g);
        let mu1 = Measure::from_fn(&g, |x| 1.0 + 0.5 * x[0]).unwrap();
        let seg = connect(&mu, &mu1).unwrap();
        let l = seg.length();
        assert_eq!(seg.evaluate_simplex(0.0).unwrap(), (1.0, 0.0, 0.0));
        let (a, b, c) = seg.evaluate_simplex(l).unwrap();
        assert!(a.abs() < 1e-15 && (b - 1.0).abs() < 1e-15 && c.abs() < 1e-15);
        let (a, b, c) = seg.evaluate_simplex(l / 2.0).unwrap();
        assert!((a - b).abs() < 1e-15);
        assert!((c - 2.0 * (l / 2.0).cos() * a).abs() < 1e-15);
        assert!((a + b + c - 1.0).abs() < 1e-15);
        for k in 0..=10 {
            let t = l * k as f64 / 10.0;
            let d = seg.point(t).unwrap().sup_distance(&seg.simplex_point(t).unwrap());
            assert!(d < 1e-10, "{t}: {d}");
        }
    }

    #[test]
    fn exp_map_inverts_connect() {
        let g = grid();
        let mu = Measure::from_fn(&g, |x| (0.2 * x[1] + 0.4 * x[0] * x[0]).exp()).unwrap();
        let mu1 = Measure::from_fn(&g, |x| 1.0 + 0.3 * x[0]).unwrap();
        let seg = connect(&mu, &mu1).unwrap();
        let v = seg.initial_velocity().scaled(seg.length());
        assert!(exp_map(&mu, &v).unwrap().sup_distance(&mu1) < 1e-9);
        assert!(exp_map(&mu, &TangentMeasure::zero(&g)).unwrap().sup_distance(&mu) == 0.0);
        for s in [0.1, 0.5, 0.9] {
            let p = exp_map(&mu, &seg.initial_velocity().scaled(s * seg.length())).unwrap();
            let d = ell_distance(&mu, &p).unwrap();
            assert!((d - s * seg.length()).abs() < 1e-10);
        }
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let a = Measure::uniform(&make_grid(2, 16).unwrap());
        let b = Measure::uniform(&make_grid(2, 32).unwrap());
        assert!(matches!(ell_distance(&a, &b), Err(Error::GridMismatch(..))));
    }
}
