//! Quadrature grids on the boundary sphere `S^{d-1}`.
//!
//! The reference measure is the normalized uniform measure, so every grid's
//! weights sum to one. On the circle the rule is the uniform trapezoid rule,
//! which integrates trigonometric polynomials of degree `< N` exactly. On the
//! 2-sphere it is Gauss–Legendre in `cos(polar)` times a uniform azimuth rule.

use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use gauss_quad::legendre::GaussLegendre;
use nalgebra::DVector;

use crate::error::{Error, Result};

/// Smallest accepted grid resolution.
pub const MIN_RESOLUTION: usize = 8;

const LEAF: usize = 64;
const PARALLEL_MIN: usize = 4096;

static PARALLEL: AtomicBool = AtomicBool::new(false);

/// Enables data-parallel quadrature sums.
///
/// The reduction tree does not depend on the number of workers, so results
/// are bit-identical with or without parallelism.
pub fn set_parallel_quadrature(enabled: bool) {
    PARALLEL.store(enabled, Ordering::Relaxed);
}

pub fn parallel_quadrature() -> bool {
    PARALLEL.load(Ordering::Relaxed)
}

/// Pairwise sum of `term(i)` over `0..n` with a fixed reduction tree.
pub(crate) fn tree_sum<F>(n: usize, term: &F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    tree_sum_range(0, n, term, parallel_quadrature())
}

fn tree_sum_range<F>(lo: usize, hi: usize, term: &F, parallel: bool) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let len = hi - lo;
    if len <= LEAF {
        let mut acc = 0.0;
        for i in lo..hi {
            acc += term(i);
        }
        return acc;
    }
    let mid = lo + len / 2;
    if parallel && len >= PARALLEL_MIN {
        let (a, b) = rayon::join(
            || tree_sum_range(lo, mid, term, parallel),
            || tree_sum_range(mid, hi, term, parallel),
        );
        a + b
    } else {
        tree_sum_range(lo, mid, term, parallel) + tree_sum_range(mid, hi, term, parallel)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Layout {
    /// `n` equally spaced angles starting at 0.
    Circle { n: usize },
    /// Node index is `level * azimuths + k`; polar angles ascend.
    Sphere { polar: Vec<f64>, azimuths: usize },
}

/// Nodes and weights discretizing the normalized measure on `S^{d-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    dim: usize,
    resolution: usize,
    nodes: Vec<DVector<f64>>,
    weights: Vec<f64>,
    layout: Layout,
}

/// Builds the grid for ball dimension `dim` (2 or 3).
///
/// For `dim = 2` the grid has `resolution` nodes; for `dim = 3` it has
/// `resolution` polar levels and `2 * resolution` azimuths.
pub fn make_grid(dim: usize, resolution: usize) -> Result<Arc<QuadratureGrid>> {
    QuadratureGrid::new(dim, resolution).map(Arc::new)
}

impl QuadratureGrid {
    pub fn new(dim: usize, resolution: usize) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::UnsupportedDimension(dim));
        }
        if resolution < MIN_RESOLUTION {
            return Err(Error::ResolutionTooLow {
                got: resolution,
                min: MIN_RESOLUTION,
            });
        }
        Ok(if dim == 2 {
            Self::circle(resolution)
        } else {
            Self::sphere(resolution)
        })
    }

    fn circle(n: usize) -> Self {
        let step = 2.0 * PI / n as f64;
        let nodes = (0..n)
            .map(|i| {
                let a = step * i as f64;
                DVector::from_vec(vec![a.cos(), a.sin()])
            })
            .collect();
        Self {
            dim: 2,
            resolution: n,
            nodes,
            weights: vec![1.0 / n as f64; n],
            layout: Layout::Circle { n },
        }
    }

    fn sphere(levels: usize) -> Self {
        let azimuths = 2 * levels;
        let rule = GaussLegendre::new(NonZeroUsize::new(levels).expect("levels >= 8"));
        // (cos polar, weight), sorted so that polar angle ascends.
        let mut pairs: Vec<(f64, f64)> = rule.as_node_weight_pairs().to_vec();
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        let total: f64 = pairs.iter().map(|p| p.1).sum();

        let step = 2.0 * PI / azimuths as f64;
        let mut nodes = Vec::with_capacity(levels * azimuths);
        let mut weights = Vec::with_capacity(levels * azimuths);
        let mut polar = Vec::with_capacity(levels);
        for &(z, w) in &pairs {
            polar.push(z.acos());
            let s = (1.0 - z * z).sqrt();
            for k in 0..azimuths {
                let phi = step * k as f64;
                nodes.push(DVector::from_vec(vec![s * phi.cos(), s * phi.sin(), z]));
                weights.push(w / total / azimuths as f64);
            }
        }
        Self {
            dim: 3,
            resolution: levels,
            nodes,
            weights,
            layout: Layout::Sphere { polar, azimuths },
        }
    }

    /// Ball dimension `d`; the grid discretizes `S^{d-1}`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[DVector<f64>] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &DVector<f64> {
        &self.nodes[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub(crate) fn layout(&self) -> &Layout {
        &self.layout
    }

    /// Short identifier used in error messages.
    pub fn label(&self) -> String {
        format!("S^{}[{}]", self.dim - 1, self.resolution)
    }

    /// Two grids agree when they were built from the same `(dim, resolution)`.
    pub fn same_as(&self, other: &QuadratureGrid) -> bool {
        self.dim == other.dim && self.resolution == other.resolution
    }

    pub(crate) fn check_same(&self, other: &QuadratureGrid) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(self.label(), other.label()))
        }
    }

    /// `sum_i w_i * samples_i`, the quadrature of the samples against the
    /// reference measure.
    pub fn integrate(&self, samples: &[f64]) -> Result<f64> {
        if samples.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: samples.len(),
            });
        }
        Ok(self.sum(|i| samples[i]))
    }

    /// Weighted sum of a per-node term. The caller guarantees the index range.
    pub(crate) fn sum<F>(&self, term: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync,
    {
        let w = &self.weights;
        tree_sum(self.len(), &|i| w[i] * term(i))
    }

    /// Samples a function of the node position.
    pub fn sample<F>(&self, f: F) -> Vec<f64>
    where
        F: Fn(&DVector<f64>) -> f64,
    {
        self.nodes.iter().map(f).collect()
    }

    /// Intrinsic coordinates of node `i`: the angle on the circle, or
    /// `(polar, azimuth)` on the 2-sphere.
    pub fn angles(&self, i: usize) -> (f64, f64) {
        match &self.layout {
            Layout::Circle { n } => (2.0 * PI * i as f64 / *n as f64, 0.0),
            Layout::Sphere { polar, azimuths } => {
                let level = i / azimuths;
                let k = i % azimuths;
                (polar[level], 2.0 * PI * k as f64 / *azimuths as f64)
            }
        }
    }
}

/// Free-function form of [`QuadratureGrid::integrate`].
pub fn integrate(grid: &QuadratureGrid, samples: &[f64]) -> Result<f64> {
    grid.integrate(samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_of_four() {
        let g = make_grid(2, 8).unwrap();
        assert_eq!(g.len(), 8);
        let g4 = QuadratureGrid::circle(4);
        let expect = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)];
        for (n, (x, y)) in g4.nodes().iter().zip(expect) {
            assert!((n[0] - x).abs() < 1e-15 && (n[1] - y).abs() < 1e-15);
        }
        assert!(g4.weights().iter().all(|&w| w == 0.25));
    }

    #[test]
    fn rejects_bad_arguments() {
        assert_eq!(make_grid(4, 16).unwrap_err(), Error::UnsupportedDimension(4));
        assert!(matches!(
            make_grid(2, 4).unwrap_err(),
            Error::ResolutionTooLow { got: 4, min: 8 }
        ));
        let g = make_grid(2, 16).unwrap();
        assert!(matches!(
            g.integrate(&[1.0; 3]),
            Err(Error::LengthMismatch { expected: 16, got: 3 })
        ));
    }

    #[test]
    fn weights_and_nodes_are_normalized() {
        for (dim, res) in [(2, 8), (2, 256), (3, 8), (3, 16), (3, 33)] {
            let g = make_grid(dim, res).unwrap();
            let total: f64 = g.weights().iter().sum();
            assert!((total - 1.0).abs() < 1e-12, "{dim} {res}: {total}");
            for n in g.nodes() {
                assert!((n.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sphere_second_moment_is_one_third() {
        let g = make_grid(3, 16).unwrap();
        let dirs = [
            [1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.6, 0.0, 0.8],
            [0.48, -0.6, 0.64],
        ];
        for e in dirs {
            let e = DVector::from_row_slice(&e);
            let m = g.integrate(&g.sample(|x| x.dot(&e).powi(2))).unwrap();
            assert!((m - 1.0 / 3.0).abs() < 1e-12, "{m}");
        }
    }

    #[test]
    fn circle_trig_integrals() {
        let g = make_grid(2, 256).unwrap();
        let ones = vec![1.0; g.len()];
        assert!((g.integrate(&ones).unwrap() - 1.0).abs() < 1e-14);
        let c = g.integrate(&g.sample(|x| x[0])).unwrap();
        assert!(c.abs() < 1e-14);
        let c2 = g.integrate(&g.sample(|x| x[0] * x[0])).unwrap();
        assert!((c2 - 0.5).abs() < 1e-14);
    }

    #[test]
    fn parallel_sum_is_bit_identical() {
        let g = make_grid(3, 64).unwrap();
        let samples = g.sample(|x| (3.0 * x[0]).sin() + x[2].exp());
        set_parallel_quadrature(false);
        let a = g.integrate(&samples).unwrap();
        set_parallel_quadrature(true);
        let b = g.integrate(&samples).unwrap();
        set_parallel_quadrature(false);
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
