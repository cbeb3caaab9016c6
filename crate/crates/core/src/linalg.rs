//! Fixed-size 2×2 linear algebra used by the tangent cocycle.
//!
//! Everything here is allocation-free and `Copy`. The decompositions are a
//! Gram-Schmidt QR step and the closed-form symmetric eigenproblem (through
//! the Jacobi rotation angle).

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Unit vector in the same direction. The zero vector is returned unchanged.
    #[inline]
    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        if n == 0.0 {
            self
        } else {
            Vec2::new(self.x / n, self.y / n)
        }
    }

    /// Counter-clockwise rotation by a right angle.
    #[inline]
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    #[inline]
    pub fn scale(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }

    /// Unsigned angle between the lines spanned by `self` and `other`, in `[0, π/2]`.
    pub fn line_angle(self, other: Vec2) -> f64 {
        let c = self.normalized().dot(other.normalized()).abs().min(1.0);
        let s = cross(self.normalized(), other.normalized()).abs();
        s.atan2(c)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

#[inline]
fn cross(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Row-major 2×2 real matrix `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2::new(1.0, 0.0, 0.0, 1.0);

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    pub fn from_columns(c0: Vec2, c1: Vec2) -> Self {
        Self::new(c0.x, c1.x, c0.y, c1.y)
    }

    pub fn col0(&self) -> Vec2 {
        Vec2::new(self.a, self.c)
    }

    pub fn col1(&self) -> Vec2 {
        Vec2::new(self.b, self.d)
    }

    #[inline]
    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn transpose(&self) -> Mat2 {
        Mat2::new(self.a, self.c, self.b, self.d)
    }

    /// Exact inverse via the adjugate; `None` when the determinant vanishes.
    pub fn inverse(&self) -> Option<Mat2> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        Some(Mat2::new(
            self.d / det,
            -self.b / det,
            -self.c / det,
            self.a / det,
        ))
    }

    #[inline]
    pub fn apply(&self, v: Vec2) -> Vec2 {
        Vec2::new(self.a * v.x + self.b * v.y, self.c * v.x + self.d * v.y)
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        singular_values(self).0
    }

    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        (self.a - other.a)
            .abs()
            .max((self.b - other.b).abs())
            .max((self.c - other.c).abs())
            .max((self.d - other.d).abs())
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, r: Mat2) -> Mat2 {
        Mat2::new(
            self.a * r.a + self.b * r.c,
            self.a * r.b + self.b * r.d,
            self.c * r.a + self.d * r.c,
            self.c * r.b + self.d * r.d,
        )
    }
}

impl Mul<Vec2> for Mat2 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        self.apply(v)
    }
}

/// Singular values `(s1, s2)` with `s1 >= s2 >= 0`.
pub fn singular_values(m: &Mat2) -> (f64, f64) {
    // s1 s2 = |det|, s1^2 + s2^2 = ||m||_F^2; evaluate without cancellation.
    let p = m.a * m.a + m.c * m.c;
    let q = m.a * m.b + m.c * m.d;
    let r = m.b * m.b + m.d * m.d;
    let (l1, _) = sym_eigenvalues(p, q, r);
    let s1 = l1.max(0.0).sqrt();
    let s2 = if s1 > 0.0 { m.det().abs() / s1 } else { 0.0 };
    (s1, s2)
}

/// Eigenvalues `(l1, l2)`, `l1 >= l2`, of the symmetric matrix `[[p, q], [q, r]]`.
pub fn sym_eigenvalues(p: f64, q: f64, r: f64) -> (f64, f64) {
    let mean = 0.5 * (p + r);
    let rad = (0.5 * (p - r)).hypot(q);
    (mean + rad, mean - rad)
}

/// Unit eigenvector for the larger eigenvalue of `[[p, q], [q, r]]`.
///
/// The minor eigenvector is its `perp()`.
pub fn sym_major_eigenvector(p: f64, q: f64, r: f64) -> Vec2 {
    let theta = 0.5 * (2.0 * q).atan2(p - r);
    Vec2::new(theta.cos(), theta.sin())
}

/// Result of one Gram-Schmidt QR step on a 2×2 matrix with positive diagonal `R`.
#[derive(Debug, Clone, Copy)]
pub struct QrStep {
    pub q: Mat2,
    /// `R = [[r11, r12], [0, r22]]`
    pub r11: f64,
    pub r12: f64,
    pub r22: f64,
}

/// QR factorisation `m = q * r` with `q` orthogonal (det +1 or -1) and `r11 > 0`.
///
/// `r22` carries the sign of `det(m)` so that `q` remains a proper frame
/// continuation; callers that need scale factors take `|r22|`.
pub fn qr(m: &Mat2) -> QrStep {
    let c0 = m.col0();
    let c1 = m.col1();
    let r11 = c0.norm();
    let q0 = c0.scale(1.0 / r11);
    let r12 = q0.dot(c1);
    let q1 = q0.perp();
    let r22 = q1.dot(c1);
    QrStep {
        q: Mat2::from_columns(q0, q1),
        r11,
        r12,
        r22,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cat_matrix_norm_is_golden_square() {
        let m = Mat2::new(2.0, 1.0, 1.0, 1.0);
        let (s1, s2) = singular_values(&m);
        let phi2 = (3.0 + 5f64.sqrt()) / 2.0;
        assert!((s1 - phi2).abs() < 1e-14);
        assert!((s2 - 1.0 / phi2).abs() < 1e-14);
    }

    #[test]
    fn qr_reconstructs() {
        let m = Mat2::new(0.3, -2.0, 1.7, 0.4);
        let s = qr(&m);
        let r = Mat2::new(s.r11, s.r12, 0.0, s.r22);
        assert!((s.q * r).max_abs_diff(&m) < 1e-14);
        let qtq = s.q.transpose() * s.q;
        assert!(qtq.max_abs_diff(&Mat2::IDENTITY) < 1e-15);
    }

    #[test]
    fn inverse_of_singular_is_none() {
        assert!(Mat2::new(1.0, 2.0, 2.0, 4.0).inverse().is_none());
    }

    #[test]
    fn major_eigenvector_of_diagonal() {
        let v = sym_major_eigenvector(1.0, 0.0, 3.0);
        assert!(v.x.abs() < 1e-15 && (v.y.abs() - 1.0).abs() < 1e-15);
    }
}
