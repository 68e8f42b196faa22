//! Positive probability densities and zero-mean tangent densities on a grid.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::measure::grid::QuadratureGrid;
use crate::tolerances;

/// A point of the space of positive probability measures, stored as its
/// density against the reference measure at the grid nodes.
#[derive(Debug, Clone)]
pub struct Measure {
    grid: Arc<QuadratureGrid>,
    density: Vec<f64>,
}

/// A tangent vector: a signed density with zero reference-measure mean.
#[derive(Debug, Clone)]
pub struct TangentMeasure {
    grid: Arc<QuadratureGrid>,
    density: Vec<f64>,
}

fn check_len(grid: &QuadratureGrid, len: usize) -> Result<()> {
    if grid.len() != len {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            got: len,
        });
    }
    Ok(())
}

fn check_positive(density: &[f64]) -> Result<()> {
    match density
        .iter()
        .enumerate()
        .find(|(_, &v)| !(v > tolerances::POSITIVITY))
    {
        Some((index, &value)) => Err(Error::NonPositiveDensity { index, value }),
        None => Ok(()),
    }
}

impl Measure {
    /// Normalizes positive samples to unit mass.
    pub fn from_samples(grid: &Arc<QuadratureGrid>, samples: Vec<f64>) -> Result<Self> {
        check_len(grid, samples.len())?;
        if let Some((index, &value)) = samples.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
            return Err(Error::NonPositiveDensity { index, value });
        }
        let mass = grid.integrate(&samples)?;
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::ZeroMass(mass));
        }
        let density: Vec<f64> = samples.into_iter().map(|s| s / mass).collect();
        check_positive(&density)?;
        Ok(Self {
            grid: Arc::clone(grid),
            density,
        })
    }

    /// Builds a measure from a function of the node position.
    pub fn from_fn<F>(grid: &Arc<QuadratureGrid>, f: F) -> Result<Self>
    where
        F: Fn(&nalgebra::DVector<f64>) -> f64,
    {
        Self::from_samples(grid, grid.sample(f))
    }

    /// The reference measure itself (density 1).
    pub fn uniform(grid: &Arc<QuadratureGrid>) -> Self {
        Self {
            grid: Arc::clone(grid),
            density: vec![1.0; grid.len()],
        }
    }

    /// Validates positivity and renormalizes away round-off in the mass.
    pub(crate) fn from_positive_density(
        grid: &Arc<QuadratureGrid>,
        density: Vec<f64>,
    ) -> Result<Self> {
        check_positive(&density)?;
        Self::from_samples(grid, density)
    }

    pub fn grid(&self) -> &Arc<QuadratureGrid> {
        &self.grid
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn into_density(self) -> Vec<f64> {
        self.density
    }

    pub fn mass(&self) -> f64 {
        self.grid.sum(|i| self.density[i])
    }

    pub(crate) fn check_grid(&self, other: &QuadratureGrid) -> Result<()> {
        self.grid.check_same(other)
    }

    /// `dτ/dμ` sampled at the nodes.
    pub fn relative(&self, tau: &TangentMeasure) -> Result<Vec<f64>> {
        self.check_grid(&tau.grid)?;
        Ok(tau
            .density
            .iter()
            .zip(&self.density)
            .map(|(h, f)| h / f)
            .collect())
    }

    /// Point `μ + tτ` of the affine line through `μ`.
    pub fn shifted(&self, tau: &TangentMeasure, t: f64) -> Result<Measure> {
        self.check_grid(&tau.grid)?;
        let density: Vec<f64> = self
            .density
            .iter()
            .zip(&tau.density)
            .map(|(f, h)| f + t * h)
            .collect();
        check_positive(&density)?;
        Ok(Self {
            grid: Arc::clone(&self.grid),
            density,
        })
    }

    /// Tangent vector `μ₁ − μ`.
    pub fn difference(&self, other: &Measure) -> Result<TangentMeasure> {
        self.check_grid(&other.grid)?;
        let density = self
            .density
            .iter()
            .zip(&other.density)
            .map(|(a, b)| a - b)
            .collect();
        Ok(TangentMeasure {
            grid: Arc::clone(&self.grid),
            density,
        })
    }

    /// Largest absolute density difference.
    pub fn sup_distance(&self, other: &Measure) -> f64 {
        sup_diff(&self.density, &other.density)
    }
}

impl TangentMeasure {
    /// Projects arbitrary samples onto the zero-mean subspace.
    pub fn from_samples(grid: &Arc<QuadratureGrid>, samples: Vec<f64>) -> Result<Self> {
        let mean = grid.integrate(&samples)?;
        Ok(Self {
            grid: Arc::clone(grid),
            density: samples.into_iter().map(|s| s - mean).collect(),
        })
    }

    pub fn from_fn<F>(grid: &Arc<QuadratureGrid>, f: F) -> Result<Self>
    where
        F: Fn(&nalgebra::DVector<f64>) -> f64,
    {
        Self::from_samples(grid, grid.sample(f))
    }

    /// Accepts a density only if its mean already vanishes.
    pub fn from_density(grid: &Arc<QuadratureGrid>, density: Vec<f64>) -> Result<Self> {
        let mean = grid.integrate(&density)?;
        if mean.abs() > tolerances::MASS {
            return Err(Error::MeanDrift(mean));
        }
        Ok(Self {
            grid: Arc::clone(grid),
            density,
        })
    }

    pub(crate) fn from_density_unchecked(grid: &Arc<QuadratureGrid>, density: Vec<f64>) -> Self {
        debug_assert_eq!(grid.len(), density.len());
        Self {
            grid: Arc::clone(grid),
            density,
        }
    }

    pub fn zero(grid: &Arc<QuadratureGrid>) -> Self {
        Self {
            grid: Arc::clone(grid),
            density: vec![0.0; grid.len()],
        }
    }

    /// The tangent vector `(g − ∫g dμ) · μ`, the inverse of `dτ/dμ` on
    /// functions with zero `μ`-mean.
    pub fn from_relative(mu: &Measure, relative: &[f64]) -> Result<Self> {
        check_len(&mu.grid, relative.len())?;
        let f = &mu.density;
        let mean = mu.grid.sum(|i| relative[i] * f[i]);
        Ok(Self {
            grid: Arc::clone(&mu.grid),
            density: relative.iter().zip(f).map(|(g, f)| (g - mean) * f).collect(),
        })
    }

    pub fn grid(&self) -> &Arc<QuadratureGrid> {
        &self.grid
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn mean(&self) -> f64 {
        self.grid.sum(|i| self.density[i])
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            grid: Arc::clone(&self.grid),
            density: self.density.iter().map(|h| c * h).collect(),
        }
    }

    /// `a·self + b·other`. Panics if the grids differ.
    pub fn combine(&self, a: f64, other: &TangentMeasure, b: f64) -> Self {
        assert!(
            self.grid.same_as(&other.grid),
            "tangent measures on different grids"
        );
        Self {
            grid: Arc::clone(&self.grid),
            density: self
                .density
                .iter()
                .zip(&other.density)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.density.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

}

pub(crate) fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Free-function form of [`Measure::from_samples`].
pub fn measure_from_samples(grid: &Arc<QuadratureGrid>, samples: Vec<f64>) -> Result<Measure> {
    Measure::from_samples(grid, samples)
}

/// Free-function form of [`TangentMeasure::from_samples`].
pub fn tangent_from_samples(
    grid: &Arc<QuadratureGrid>,
    samples: Vec<f64>,
) -> Result<TangentMeasure> {
    TangentMeasure::from_samples(grid, samples)
}

/// Kullback–Leibler divergence `-∫ log(dμ₁/dμ) dμ`.
pub fn kl_divergence(mu: &Measure, mu1: &Measure) -> Result<f64> {
    mu.check_grid(&mu1.grid)?;
    let f = &mu.density;
    let f1 = &mu1.density;
    Ok(-mu.grid.sum(|i| f[i] * (f1[i] / f[i]).ln()))
}

/// The embedding `ρ^(α)`: `2/(1-α) f^{(1-α)/2}` for `α ≠ 1`, `log f` for `α = 1`.
pub fn rho_alpha(mu: &Measure, alpha: f64) -> Vec<f64> {
    if alpha == 1.0 {
        mu.density.iter().map(|f| f.ln()).collect()
    } else {
        let p = (1.0 - alpha) / 2.0;
        let c = 2.0 / (1.0 - alpha);
        mu.density.iter().map(|f| c * f.powf(p)).collect()
    }
}

/// Differential of `ρ^(α)` at `μ` applied to `τ`: `f^{-(1+α)/2} h`.
pub fn d_rho_alpha(mu: &Measure, alpha: f64, tau: &TangentMeasure) -> Result<Vec<f64>> {
    mu.check_grid(&tau.grid)?;
    let p = -(1.0 + alpha) / 2.0;
    Ok(mu
        .density
        .iter()
        .zip(&tau.density)
        .map(|(f, h)| f.powf(p) * h)
        .collect())
}

/// `∫ dρ^(α)(τ) · dρ^(−α)(τ₁) dλ`.
pub fn alpha_pairing(
    mu: &Measure,
    alpha: f64,
    tau: &TangentMeasure,
    tau1: &TangentMeasure,
) -> Result<f64> {
    let a = d_rho_alpha(mu, alpha, tau)?;
    let b = d_rho_alpha(mu, -alpha, tau1)?;
    Ok(mu.grid.sum(|i| a[i] * b[i]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::grid::make_grid;

    #[test]
    fn normalization() {
        let g = make_grid(2, 64).unwrap();
        let m = Measure::from_samples(&g, vec![2.0; 64]).unwrap();
        assert!(m.density().iter().all(|&v| (v - 1.0).abs() < 1e-15));

        let s = g.sample(|x| 1.0 + 0.5 * x[0]);
        let m = Measure::from_samples(&g, s.clone()).unwrap();
        assert!(sup_diff(m.density(), &s) < 1e-15);
    }

    #[test]
    fn rejects_non_positive() {
        let g = make_grid(2, 8).unwrap();
        let mut s = vec![1.0; 8];
        s[3] = 0.0;
        assert!(matches!(
            Measure::from_samples(&g, s),
            Err(Error::NonPositiveDensity { index: 3, .. })
        ));
        assert!(matches!(
            Measure::from_samples(&g, vec![1.0; 7]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn tangent_projection() {
        let g = make_grid(2, 128).unwrap();
        let c = g.sample(|x| x[0]);
        let t = TangentMeasure::from_samples(&g, c.clone()).unwrap();
        assert!(sup_diff(t.density(), &c) < 1e-15);

        let t = TangentMeasure::from_samples(&g, vec![5.0; 128]).unwrap();
        assert!(t.sup_norm() < 1e-14);

        let t = TangentMeasure::from_fn(&g, |x| 1.0 + x[1]).unwrap();
        assert!(sup_diff(t.density(), &g.sample(|x| x[1])) < 1e-14);
        assert!(TangentMeasure::from_density(&g, vec![1.0; 128]).is_err());
    }

    #[test]
    fn kl_basics() {
        let g = make_grid(2, 256).unwrap();
        let m = Measure::from_fn(&g, |x| (x[0] + 0.3 * x[1]).exp()).unwrap();
        assert_eq!(kl_divergence(&m, &m).unwrap(), 0.0);
        let other = make_grid(2, 128).unwrap();
        let u = Measure::uniform(&other);
        assert!(matches!(kl_divergence(&m, &u), Err(Error::GridMismatch(..))));
    }

    #[test]
    fn rho_alpha_constants() {
        let g = make_grid(2, 16).unwrap();
        let u = Measure::uniform(&g);
        assert!(rho_alpha(&u, 0.5).iter().all(|&v| (v - 4.0).abs() < 1e-15));
        assert!(rho_alpha(&u, 0.0).iter().all(|&v| (v - 2.0).abs() < 1e-15));
        assert!(rho_alpha(&u, 1.0).iter().all(|&v| v == 0.0));
    }
}
