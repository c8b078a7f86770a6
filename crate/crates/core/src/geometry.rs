//! Planar geometry primitives shared by every other module: SE(2) poses,
//! points, and 2x2 covariance ellipses built from an axis direction and two
//! eigenvalues.
//!
//! Conventions, fixed once here so nothing else has to re-decide them:
//! * angles are radians normalized to `(-pi, pi]`,
//! * `Pose2` composition follows the usual homogeneous-transform order:
//!   `a.compose(b)` applies `b` in the frame of `a`,
//! * eigenvectors returned by [`sym_eigen_2x2`] are unit length with a
//!   deterministic sign (non-negative x, then non-negative y on ties).

use nalgebra::{Matrix2, Matrix3, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scalar used throughout the crate.
pub type Real = f64;
/// 2D point in meters.
pub type Point2 = nalgebra::Point2<Real>;
/// 2D vector in meters.
pub type Vec2 = Vector2<Real>;
/// 2x2 matrix (information, covariance, rotation blocks).
pub type Mat2 = Matrix2<Real>;
/// 3x3 matrix (odometry information).
pub type Mat3 = Matrix3<Real>;

/// Wraps an angle into `(-pi, pi]`.
pub fn normalize_angle(a: Real) -> Real {
    let tau = std::f64::consts::TAU;
    let mut r = a.rem_euclid(tau); // [0, tau)
    if r > std::f64::consts::PI {
        r -= tau;
    }
    r
}

/// A planar rigid-body pose: translation in meters, heading in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: Real,
    pub y: Real,
    pub theta: Real,
}

impl Pose2 {
    pub fn new(x: Real, y: Real, theta: Real) -> Self {
        Pose2 {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn identity() -> Self {
        Pose2 {
            x: 0.0,
            y: 0.0,
            theta: 0.0,
        }
    }

    pub fn translation(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    /// Rotation matrix of the heading.
    pub fn rotation(&self) -> Mat2 {
        let (s, c) = self.theta.sin_cos();
        Mat2::new(c, -s, s, c)
    }

    /// `self * other`: applies `other` expressed in the frame of `self`.
    pub fn compose(&self, other: &Pose2) -> Pose2 {
        let t = self.rotation() * other.translation() + self.translation();
        Pose2 {
            x: t.x,
            y: t.y,
            theta: normalize_angle(self.theta + other.theta),
        }
    }

    /// The pose that undoes this one: `p.compose(&p.inverse()) == identity`.
    pub fn inverse(&self) -> Pose2 {
        let r_inv = self.rotation().transpose();
        let t = -(r_inv * self.translation());
        Pose2 {
            x: t.x,
            y: t.y,
            theta: normalize_angle(-self.theta),
        }
    }

    /// Relative pose from `self` to `other`: `self.compose(&d) == other`.
    pub fn between(&self, other: &Pose2) -> Pose2 {
        self.inverse().compose(other)
    }

    /// Maps a point from this pose's frame into the world frame.
    pub fn transform_point(&self, p: &Point2) -> Point2 {
        let v = self.rotation() * p.coords + self.translation();
        Point2::new(v.x, v.y)
    }

    /// Maps a world point into this pose's frame.
    pub fn inverse_transform_point(&self, p: &Point2) -> Point2 {
        let v = self.rotation().transpose() * (p.coords - self.translation());
        Point2::new(v.x, v.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.is_finite()
    }
}

/// Eigen-decomposition of a symmetric 2x2 matrix, closed form.
///
/// Returns `((lambda_max, v_max), (lambda_min, v_min))` with unit, mutually
/// orthogonal eigenvectors. Sign convention: each vector has non-negative x;
/// if x is (numerically) zero, non-negative y.
pub fn sym_eigen_2x2(m: &Mat2) -> ((Real, Vec2), (Real, Vec2)) {
    let a = m[(0, 0)];
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    let c = m[(1, 1)];
    let half_tr = 0.5 * (a + c);
    let disc = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let l_max = half_tr + disc;
    let l_min = half_tr - disc;

    let v_max = if b.abs() > 1e-300 {
        // (b, l_max - a) and (l_max - c, b) are both eigenvectors; pick the
        // larger one for numerical stability.
        let u = Vec2::new(b, l_max - a);
        let w = Vec2::new(l_max - c, b);
        if u.norm_squared() >= w.norm_squared() {
            u.normalize()
        } else {
            w.normalize()
        }
    } else if a >= c {
        Vec2::new(1.0, 0.0)
    } else {
        Vec2::new(0.0, 1.0)
    };
    let v_max = fix_sign(v_max);
    // Orthogonal complement, same sign rule.
    let v_min = fix_sign(Vec2::new(-v_max.y, v_max.x));
    ((l_max, v_max), (l_min, v_min))
}

fn fix_sign(v: Vec2) -> Vec2 {
    if v.x < 0.0 || (v.x == 0.0 && v.y < 0.0) {
        -v
    } else if v.x == 0.0 {
        // normalize -0.0 away
        Vec2::new(0.0, v.y.abs())
    } else {
        v
    }
}

/// Symmetric positive-definite 2x2 covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cov2 {
    m: Mat2,
}

impl Cov2 {
    /// Validates symmetry (1e-12, relative to the largest entry) and positive
    /// definiteness.
    pub fn new(m: Mat2) -> Result<Cov2> {
        let scale = m.amax().max(1.0);
        if !m.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument("covariance has non-finite entries".into()));
        }
        if (m[(0, 1)] - m[(1, 0)]).abs() > 1e-12 * scale {
            return Err(Error::InvalidArgument(format!(
                "covariance is not symmetric: {:?}",
                m
            )));
        }
        let ((_, _), (l_min, _)) = sym_eigen_2x2(&m);
        if l_min <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "covariance is not positive definite (min eigenvalue {l_min})"
            )));
        }
        // Store an exactly symmetric matrix.
        let b = 0.5 * (m[(0, 1)] + m[(1, 0)]);
        Ok(Cov2 {
            m: Mat2::new(m[(0, 0)], b, b, m[(1, 1)]),
        })
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.m
    }

    /// `((lambda_max, v_max), (lambda_min, v_min))` of the stored matrix.
    pub fn eigen(&self) -> ((Real, Vec2), (Real, Vec2)) {
        sym_eigen_2x2(&self.m)
    }

    /// Exact inverse via the eigen factorization (stays symmetric PD).
    pub fn inverse_matrix(&self) -> Mat2 {
        let ((l1, v1), (l2, v2)) = self.eigen();
        v1 * v1.transpose() / l1 + v2 * v2.transpose() / l2
    }
}

/// Covariance with principal axis `direction` and eigenvalues `lambda1`
/// (along the axis) and `lambda2` (perpendicular): `V diag(l1,l2) V^T`.
///
/// `direction` must be unit length to 1e-9; both eigenvalues must be
/// positive and finite.
pub fn anisotropic_cov(direction: &Vec2, lambda1: Real, lambda2: Real) -> Result<Cov2> {
    if !(direction.x.is_finite() && direction.y.is_finite()) {
        return Err(Error::InvalidArgument("direction has non-finite components".into()));
    }
    if (direction.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "direction must be unit length, got |v| = {}",
            direction.norm()
        )));
    }
    if !(lambda1.is_finite() && lambda2.is_finite()) || lambda1 <= 0.0 || lambda2 <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "eigenvalues must be positive and finite, got ({lambda1}, {lambda2})"
        )));
    }
    let u = *direction;
    let v = Vec2::new(-u.y, u.x);
    let m = lambda1 * u * u.transpose() + lambda2 * v * v.transpose();
    // Symmetrize away the last-bit asymmetry of the outer-product sum.
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    Cov2::new(Mat2::new(m[(0, 0)], b, b, m[(1, 1)]))
}

/// True when `m` is symmetric (1e-9 relative) with strictly positive eigenvalues.
pub fn is_spd_2x2(m: &Mat2) -> bool {
    let scale = m.amax().max(1.0);
    if !m.iter().all(|v| v.is_finite()) {
        return false;
    }
    if (m[(0, 1)] - m[(1, 0)]).abs() > 1e-9 * scale {
        return false;
    }
    let ((_, _), (l_min, _)) = sym_eigen_2x2(m);
    l_min > 0.0
}

/// True when `m` is symmetric (1e-9 relative) with strictly positive eigenvalues.
pub fn is_spd_3x3(m: &Mat3) -> bool {
    if !m.iter().all(|v| v.is_finite()) {
        return false;
    }
    let scale = m.amax().max(1.0);
    for i in 0..3 {
        for j in (i + 1)..3 {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-9 * scale {
                return false;
            }
        }
    }
    // Sylvester's criterion on the symmetrized matrix.
    let s = 0.5 * (m + m.transpose());
    let d1 = s[(0, 0)];
    let d2 = s[(0, 0)] * s[(1, 1)] - s[(0, 1)] * s[(1, 0)];
    let d3 = s.determinant();
    d1 > 0.0 && d2 > 0.0 && d3 > 0.0
}
