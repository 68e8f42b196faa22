//! Real hyperbolic space in the Poincaré ball model, curvature −1.
//!
//! The metric is `g = 4|dx|² / (1 − |x|²)²`. Tangent vectors are stored in
//! Euclidean coordinates, so a vector `u` at `x` has g-norm `2|u|/(1 − |x|²)`.
//! The base point for Busemann normalization is the origin.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::measure::{intrinsic_jacobian, BoundaryMap};
use crate::tolerances;

/// A point of the open ball with `|x| < 1 − BALL_MARGIN`.
#[derive(Debug, Clone, PartialEq)]
pub struct BallPoint {
    coords: DVector<f64>,
}

impl BallPoint {
    pub fn new(coords: DVector<f64>) -> Result<Self> {
        let r = coords.norm();
        if !(r < 1.0 - tolerances::BALL_MARGIN) {
            return Err(Error::OutsideBall(r));
        }
        Ok(Self { coords })
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(coords))
    }

    pub fn origin(dim: usize) -> Self {
        Self {
            coords: DVector::zeros(dim),
        }
    }

    /// Pulls the point back inside the admissible ball if round-off pushed it out.
    pub(crate) fn clamped(mut coords: DVector<f64>) -> Self {
        let r = coords.norm();
        let max = 1.0 - tolerances::BALL_MARGIN;
        if r >= max {
            coords *= max / r * (1.0 - f64::EPSILON);
        }
        Self { coords }
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// `2 / (1 − |x|²)`, the conformal factor of the metric.
    pub fn conformal_factor(&self) -> f64 {
        2.0 / (1.0 - self.coords.norm_squared())
    }
}

/// A point of the ideal boundary, a unit vector.
#[derive(Debug, Clone, PartialEq)]
pub struct IdealPoint {
    direction: DVector<f64>,
}

impl IdealPoint {
    pub fn new(direction: DVector<f64>) -> Result<Self> {
        let r = direction.norm();
        if (r - 1.0).abs() > tolerances::IDEAL_UNIT {
            return Err(Error::NotUnitDirection(r));
        }
        Ok(Self { direction })
    }

    /// Normalizes an arbitrary nonzero vector.
    pub fn normalized(v: DVector<f64>) -> Result<Self> {
        let r = v.norm();
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::NotUnitDirection(r));
        }
        Ok(Self { direction: v / r })
    }

    pub fn direction(&self) -> &DVector<f64> {
        &self.direction
    }

    pub fn dim(&self) -> usize {
        self.direction.len()
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

/// Möbius translation `T_a` taking the origin to `a`. Also valid on the
/// unit sphere when `|a| < 1`.
pub fn moebius_translate(a: &DVector<f64>, x: &DVector<f64>) -> DVector<f64> {
    let ax = a.dot(x);
    let aa = a.norm_squared();
    let xx = x.norm_squared();
    let num = a * (1.0 + 2.0 * ax + xx) + x * (1.0 - aa);
    num / (1.0 + 2.0 * ax + aa * xx)
}

/// Riemannian inner product of Euclidean-coordinate tangent vectors at `x`.
pub fn g_inner(x: &BallPoint, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    let lambda = x.conformal_factor();
    lambda * lambda * u.dot(v)
}

pub fn g_norm(x: &BallPoint, u: &DVector<f64>) -> f64 {
    x.conformal_factor() * u.norm()
}

pub fn hyp_distance(x: &BallPoint, y: &BallPoint) -> f64 {
    let r = moebius_translate(&(-&x.coords), &y.coords).norm();
    2.0 * r.min(1.0).atanh()
}

/// Unit-speed geodesic from `x` with initial direction `u`, at arc length `t`.
/// The direction is normalized, so only its orientation matters.
pub fn hyp_geodesic(x: &BallPoint, u: &DVector<f64>, t: f64) -> BallPoint {
    let n = u.norm();
    if n == 0.0 || t == 0.0 {
        return x.clone();
    }
    // At the origin the geodesic is tanh(t/2)·e; transport it by T_x, whose
    // differential at 0 is (1 − |x|²)·I, so directions are preserved.
    let e = u / n;
    BallPoint::clamped(moebius_translate(&x.coords, &(e * (t / 2.0).tanh())))
}

/// Exponential map for an arbitrary Euclidean-coordinate tangent vector.
pub fn hyp_exp(x: &BallPoint, v: &DVector<f64>) -> BallPoint {
    hyp_geodesic(x, v, g_norm(x, v))
}

/// `B_θ(x) = log(|x − θ|² / (1 − |x|²))`.
pub fn busemann(theta: &IdealPoint, x: &BallPoint) -> Result<f64> {
    check_dim(theta.dim(), x.dim())?;
    // Dividing by |θ|² makes B_θ(0) = 0 hold bitwise.
    let xx = x.coords.norm_squared();
    let dist2 = (&x.coords - &theta.direction).norm_squared() / theta.direction.norm_squared();
    if dist2 < tolerances::BALL_MARGIN * tolerances::BALL_MARGIN {
        return Err(Error::BusemannOverflow);
    }
    Ok((dist2 / (1.0 - xx)).ln())
}

/// Euclidean gradient of [`busemann`] in the ambient coordinates.
fn busemann_euclidean_gradient(theta: &IdealPoint, x: &BallPoint) -> Result<DVector<f64>> {
    check_dim(theta.dim(), x.dim())?;
    let diff = &x.coords - &theta.direction;
    let dist2 = diff.norm_squared();
    if dist2 < tolerances::BALL_MARGIN * tolerances::BALL_MARGIN {
        return Err(Error::BusemannOverflow);
    }
    Ok(diff * (2.0 / dist2) + &x.coords * (2.0 / (1.0 - x.coords.norm_squared())))
}

/// Riemannian gradient of the Busemann function, in Euclidean coordinates.
pub fn busemann_gradient(theta: &IdealPoint, x: &BallPoint) -> Result<DVector<f64>> {
    let s = 1.0 - x.coords.norm_squared();
    Ok(busemann_euclidean_gradient(theta, x)? * (s * s / 4.0))
}

/// `∇dB_θ(u, v) = g(u, v) − g(u, ∇B_θ) g(v, ∇B_θ)`.
pub fn busemann_hessian(
    theta: &IdealPoint,
    x: &BallPoint,
    u: &DVector<f64>,
    v: &DVector<f64>,
) -> Result<f64> {
    let grad = busemann_gradient(theta, x)?;
    Ok(g_inner(x, u, v) - g_inner(x, u, &grad) * g_inner(x, v, &grad))
}

/// `x ↦ R · T_a(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MoebiusIsometry {
    rotation: DMatrix<f64>,
    translation: DVector<f64>,
}

impl MoebiusIsometry {
    pub fn new(rotation: DMatrix<f64>, translation: DVector<f64>) -> Result<Self> {
        let d = translation.len();
        if rotation.nrows() != d || rotation.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: rotation.nrows(),
            });
        }
        let defect = (rotation.transpose() * &rotation - DMatrix::identity(d, d)).amax();
        if !(defect <= tolerances::ORTHOGONAL) {
            return Err(Error::NotOrthogonal(defect));
        }
        let r = translation.norm();
        if !(r < 1.0) {
            return Err(Error::OutsideBall(r));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            rotation: DMatrix::identity(dim, dim),
            translation: DVector::zeros(dim),
        }
    }

    pub fn rotation_only(rotation: DMatrix<f64>) -> Result<Self> {
        let d = rotation.nrows();
        Self::new(rotation, DVector::zeros(d))
    }

    pub fn translation_only(a: DVector<f64>) -> Result<Self> {
        let d = a.len();
        Self::new(DMatrix::identity(d, d), a)
    }

    /// Planar rotation by `angle` in the `(e₀, e₁)` plane.
    pub fn planar_rotation(dim: usize, angle: f64) -> Self {
        let mut r = DMatrix::identity(dim, dim);
        let (s, c) = angle.sin_cos();
        r[(0, 0)] = c;
        r[(0, 1)] = -s;
        r[(1, 0)] = s;
        r[(1, 1)] = c;
        Self {
            rotation: r,
            translation: DVector::zeros(dim),
        }
    }

    pub fn rotation(&self) -> &DMatrix<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &DVector<f64> {
        &self.translation
    }

    pub fn dim(&self) -> usize {
        self.translation.len()
    }

    fn map(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.rotation * moebius_translate(&self.translation, x)
    }

    pub fn apply(&self, x: &BallPoint) -> Result<BallPoint> {
        check_dim(self.dim(), x.dim())?;
        Ok(BallPoint::clamped(self.map(&x.coords)))
    }

    /// `(R ∘ T_a)⁻¹ = Rᵀ ∘ T_{−Ra}`, using `R T_a = T_{Ra} R`.
    pub fn inverse(&self) -> Self {
        Self {
            rotation: self.rotation.transpose(),
            translation: -(&self.rotation * &self.translation),
        }
    }

    /// `self ∘ other`, recovered from images of a few points: `b = ψ(0)`,
    /// and `T_{−b} ∘ ψ` is the linear part.
    pub fn compose(&self, other: &MoebiusIsometry) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        let d = self.dim();
        let psi = |x: &DVector<f64>| self.map(&other.map(x));
        let b = psi(&DVector::zeros(d));
        let neg_b = -&b;
        let mut linear = DMatrix::zeros(d, d);
        for i in 0..d {
            let mut e = DVector::zeros(d);
            e[i] = 0.5;
            let col = moebius_translate(&neg_b, &psi(&e)) * 2.0;
            linear.set_column(i, &col);
        }
        let translation = linear.transpose() * &b;
        Self::new(linear, translation)
    }

    /// Continuous extension of the isometry to the ideal boundary.
    pub fn boundary_map(&self, theta: &IdealPoint) -> Result<IdealPoint> {
        check_dim(self.dim(), theta.dim())?;
        let y = self.map(&theta.direction);
        if (y.norm() - 1.0).abs() <= 4.0 * f64::EPSILON {
            return Ok(IdealPoint { direction: y });
        }
        IdealPoint::normalized(y)
    }

    /// Jacobian determinant of the boundary map with respect to the sphere
    /// measure, by central differences.
    pub fn boundary_jacobian(&self, theta: &IdealPoint) -> Result<f64> {
        check_dim(self.dim(), theta.dim())?;
        let j = intrinsic_jacobian(|p| self.forward(p), &theta.direction);
        if !(j > 0.0) {
            return Err(Error::NonPositiveJacobian { index: 0, value: j });
        }
        Ok(j)
    }
}

impl BoundaryMap for MoebiusIsometry {
    fn dim(&self) -> usize {
        self.translation.len()
    }

    fn forward(&self, theta: &DVector<f64>) -> DVector<f64> {
        let y = self.map(theta);
        let n = y.norm();
        y / n
    }

    fn backward(&self, theta: &DVector<f64>) -> DVector<f64> {
        self.inverse().forward(theta)
    }

    fn backward_jacobian(&self, theta: &DVector<f64>) -> f64 {
        if self.translation.iter().all(|&a| a == 0.0) {
            // Rotations preserve the sphere measure.
            1.0
        } else {
            intrinsic_jacobian(|p| self.backward(p), theta)
        }
    }
}

/// `|B_θ(φx) − B_{φ̂⁻¹θ}(x) − B_θ(φ0)|`.
pub fn cocycle_defect(phi: &MoebiusIsometry, theta: &IdealPoint, x: &BallPoint) -> Result<f64> {
    let phi_x = phi.apply(x)?;
    let phi_0 = phi.apply(&BallPoint::origin(phi.dim()))?;
    let pulled = phi.inverse().boundary_map(theta)?;
    Ok((busemann(theta, &phi_x)? - busemann(&pulled, x)? - busemann(theta, &phi_0)?).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    fn p(xs: &[f64]) -> BallPoint {
        BallPoint::from_slice(xs).unwrap()
    }

    fn th(xs: &[f64]) -> IdealPoint {
        IdealPoint::normalized(v(xs)).unwrap()
    }

    #[test]
    fn validation() {
        assert!(matches!(BallPoint::from_slice(&[1.0, 0.0]), Err(Error::OutsideBall(_))));
        assert!(IdealPoint::new(v(&[0.5, 0.0])).is_err());
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(matches!(MoebiusIsometry::rotation_only(bad), Err(Error::NotOrthogonal(_))));
        assert!(MoebiusIsometry::translation_only(v(&[1.0, 0.0])).is_err());
        assert!(matches!(
            busemann(&th(&[1.0, 0.0, 0.0]), &p(&[0.1, 0.2])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn distance_examples() {
        let o = BallPoint::origin(2);
        let x = p(&[0.5, 0.0]);
        assert!((hyp_distance(&o, &x) - 3f64.ln()).abs() < 1e-15);
        let y = p(&[-0.2, 0.6]);
        assert_eq!(hyp_distance(&y, &y), 0.0);
        assert!((hyp_distance(&x, &y) - hyp_distance(&y, &x)).abs() < 1e-14);
    }

    #[test]
    fn geodesic_examples() {
        let o = BallPoint::origin(2);
        let g = hyp_geodesic(&o, &v(&[1.0, 0.0]), 3f64.ln());
        assert!((g.coords() - v(&[0.5, 0.0])).norm() < 1e-15);
        let x = p(&[0.3, -0.4]);
        assert_eq!(hyp_geodesic(&x, &v(&[0.1, 0.2]), 0.0), x);
        for t in [0.1, 1.0, 4.0] {
            let y = hyp_geodesic(&x, &v(&[0.1, 0.2]), t);
            assert!((hyp_distance(&x, &y) - t).abs() < 1e-10);
        }
    }

    #[test]
    fn busemann_examples() {
        let theta = th(&[1.0, 0.0]);
        assert_eq!(busemann(&theta, &BallPoint::origin(2)).unwrap(), 0.0);
        let b = busemann(&theta, &p(&[0.5, 0.0])).unwrap();
        assert!((b + 3f64.ln()).abs() < 1e-15);
        let g = busemann_gradient(&theta, &BallPoint::origin(2)).unwrap();
        assert!((g - v(&[-0.5, 0.0])).norm() < 1e-15);
        let theta3 = th(&[0.0, 0.6, 0.8]);
        let ray = v(&[0.0, 0.6, 0.8]);
        for t in [0.5, 2.0, 8.0] {
            let x = hyp_geodesic(&BallPoint::origin(3), &ray, t);
            assert!((busemann(&theta3, &x).unwrap() + t).abs() < 1e-9);
        }
    }

    #[test]
    fn hessian_kernel_and_orthogonal_direction() {
        let theta = th(&[0.2, -1.0]);
        let x = p(&[0.3, 0.4]);
        let grad = busemann_gradient(&theta, &x).unwrap();
        assert!((g_norm(&x, &grad) - 1.0).abs() < 1e-12);
        assert!(busemann_hessian(&theta, &x, &v(&[0.7, -0.1]), &grad).unwrap().abs() < 1e-12);
        let perp = v(&[-grad[1], grad[0]]);
        assert!((busemann_hessian(&theta, &x, &perp, &perp).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn isometry_algebra() {
        let phi = MoebiusIsometry::new(
            MoebiusIsometry::planar_rotation(3, 0.7).rotation().clone(),
            v(&[0.3, -0.2, 0.4]),
        )
        .unwrap();
        let x = p(&[0.1, 0.5, -0.3]);
        let back = phi.inverse().apply(&phi.apply(&x).unwrap()).unwrap();
        assert!((back.coords() - x.coords()).norm() < 1e-14);
        assert!((phi.apply(&BallPoint::origin(3)).unwrap().coords() - phi.rotation() * phi.translation()).norm() < 1e-15);

        let psi = MoebiusIsometry::translation_only(v(&[-0.5, 0.1, 0.0])).unwrap();
        let both = phi.compose(&psi).unwrap();
        let direct = phi.apply(&psi.apply(&x).unwrap()).unwrap();
        assert!((both.apply(&x).unwrap().coords() - direct.coords()).norm() < 1e-13);
        let id = phi.compose(&phi.inverse()).unwrap();
        assert!((id.translation().norm()) < 1e-14);
    }

    #[test]
    fn boundary_examples() {
        let theta = th(&[0.6, 0.8]);
        let id = MoebiusIsometry::identity(2);
        assert!((id.boundary_map(&theta).unwrap().direction() - theta.direction()).norm() < 1e-15);
        assert!((id.boundary_jacobian(&theta).unwrap() - 1.0).abs() < 1e-9);
        let rot = MoebiusIsometry::planar_rotation(2, 1.1);
        assert!((rot.boundary_jacobian(&theta).unwrap() - 1.0).abs() < 1e-9);
        let rotated = rot.boundary_map(&theta).unwrap();
        assert!((rotated.direction() - rot.rotation() * theta.direction()).norm() < 1e-15);
    }

    #[test]
    fn cocycle_examples() {
        let theta = th(&[0.3, -0.9, 0.1]);
        let x = p(&[0.2, 0.1, -0.6]);
        assert_eq!(cocycle_defect(&MoebiusIsometry::identity(3), &theta, &x).unwrap(), 0.0);
        let phi = MoebiusIsometry::new(
            MoebiusIsometry::planar_rotation(3, -0.4).rotation().clone(),
            v(&[0.5, 0.3, -0.2]),
        )
        .unwrap();
        assert!(cocycle_defect(&phi, &theta, &x).unwrap() < 1e-12);
    }
}
