//! Planar vector and 2×2 matrix algebra, rotations, and the distance to SO(2).
//!
//! Everything here is closed form: singular values come from `|F|²` and
//! `det F`, and the nearest rotation is read off the conformal part of `F`.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Rotation of the vector by +π/2.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        v * self
    }
}

/// Real 2×2 matrix, row-major entries `a11 a12 / a21 a22`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat2 {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

impl Mat2 {
    pub const ZERO: Mat2 = Mat2::new(0.0, 0.0, 0.0, 0.0);
    pub const IDENTITY: Mat2 = Mat2::new(1.0, 0.0, 0.0, 1.0);

    pub const fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Self { a11, a12, a21, a22 }
    }

    pub const fn diag(d1: f64, d2: f64) -> Self {
        Self::new(d1, 0.0, 0.0, d2)
    }

    pub fn from_cols(c1: Vec2, c2: Vec2) -> Self {
        Self::new(c1.x, c2.x, c1.y, c2.y)
    }

    /// `a ⊗ b`, i.e. the matrix `a bᵀ`.
    pub fn outer(a: Vec2, b: Vec2) -> Self {
        Self::new(a.x * b.x, a.x * b.y, a.y * b.x, a.y * b.y)
    }

    /// Unit matrix `e_i ⊗ e_j` (zero-based indices).
    pub fn unit(i: usize, j: usize) -> Self {
        let mut m = Mat2::ZERO;
        m.set(i, j, 1.0);
        m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match (i, j) {
            (0, 0) => self.a11,
            (0, 1) => self.a12,
            (1, 0) => self.a21,
            (1, 1) => self.a22,
            _ => panic!("Mat2 index ({i}, {j}) out of range"),
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        match (i, j) {
            (0, 0) => self.a11 = v,
            (0, 1) => self.a12 = v,
            (1, 0) => self.a21 = v,
            (1, 1) => self.a22 = v,
            _ => panic!("Mat2 index ({i}, {j}) out of range"),
        }
    }

    pub fn col(&self, j: usize) -> Vec2 {
        Vec2::new(self.get(0, j), self.get(1, j))
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.a11, self.a12, self.a21, self.a22]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn transpose(&self) -> Mat2 {
        Mat2::new(self.a11, self.a21, self.a12, self.a22)
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    /// Frobenius inner product `A : B`.
    pub fn ddot(&self, o: &Mat2) -> f64 {
        self.a11 * o.a11 + self.a12 * o.a12 + self.a21 * o.a21 + self.a22 * o.a22
    }

    pub fn norm_sq(&self) -> f64 {
        self.ddot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn sym(&self) -> Mat2 {
        let off = 0.5 * (self.a12 + self.a21);
        Mat2::new(self.a11, off, off, self.a22)
    }

    pub fn skew(&self) -> Mat2 {
        let off = 0.5 * (self.a12 - self.a21);
        Mat2::new(0.0, off, -off, 0.0)
    }

    pub fn inverse(&self) -> Option<Mat2> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        Some(Mat2::new(self.a22 / d, -self.a12 / d, -self.a21 / d, self.a11 / d))
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.to_array().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Singular values `(σ₁, σ₂)`, `σ₁ ≥ σ₂ ≥ 0`, from `|F|²` and `|det F|`.
    pub fn singular_values(&self) -> (f64, f64) {
        let n2 = self.norm_sq();
        let d = self.det().abs();
        let sum = (n2 + 2.0 * d).max(0.0).sqrt();
        let diff = (n2 - 2.0 * d).max(0.0).sqrt();
        (0.5 * (sum + diff), 0.5 * (sum - diff))
    }

    /// The conformal part `(F₁₁ + F₂₂, F₂₁ − F₁₂)`; `F : R(α) = c·(cos α, sin α)`.
    pub fn conformal_part(&self) -> Vec2 {
        Vec2::new(self.a11 + self.a22, self.a21 - self.a12)
    }
}

impl fmt::Display for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[[{:.6e}, {:.6e}], [{:.6e}, {:.6e}]]",
            self.a11, self.a12, self.a21, self.a22
        )
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        Mat2::new(self.a11 + o.a11, self.a12 + o.a12, self.a21 + o.a21, self.a22 + o.a22)
    }
}

impl AddAssign for Mat2 {
    fn add_assign(&mut self, o: Mat2) {
        *self = *self + o;
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        Mat2::new(self.a11 - o.a11, self.a12 - o.a12, self.a21 - o.a21, self.a22 - o.a22)
    }
}

impl SubAssign for Mat2 {
    fn sub_assign(&mut self, o: Mat2) {
        *self = *self - o;
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self * -1.0
    }
}

impl Mul<f64> for Mat2 {
    type Output = Mat2;
    fn mul(self, s: f64) -> Mat2 {
        Mat2::new(self.a11 * s, self.a12 * s, self.a21 * s, self.a22 * s)
    }
}

impl Mul<Mat2> for f64 {
    type Output = Mat2;
    fn mul(self, m: Mat2) -> Mat2 {
        m * self
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.a11 * o.a11 + self.a12 * o.a21,
            self.a11 * o.a12 + self.a12 * o.a22,
            self.a21 * o.a11 + self.a22 * o.a21,
            self.a21 * o.a12 + self.a22 * o.a22,
        )
    }
}

impl Mul<Vec2> for Mat2 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        Vec2::new(self.a11 * v.x + self.a12 * v.y, self.a21 * v.x + self.a22 * v.y)
    }
}

/// Proper planar rotation stored by its angle, canonical in (−π, π].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation2 {
    angle: f64,
}

impl Rotation2 {
    pub const IDENTITY: Rotation2 = Rotation2 { angle: 0.0 };

    pub fn new(angle: f64) -> Self {
        Self {
            angle: canonical_angle(angle),
        }
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn matrix(&self) -> Mat2 {
        rotation_matrix(self.angle)
    }

    pub fn inverse(&self) -> Rotation2 {
        Rotation2::new(-self.angle)
    }

    pub fn compose(&self, other: &Rotation2) -> Rotation2 {
        Rotation2::new(self.angle + other.angle)
    }
}

/// `R(α)` without canonicalizing the angle.
pub fn rotation_matrix(alpha: f64) -> Mat2 {
    let (s, c) = alpha.sin_cos();
    Mat2::new(c, -s, s, c)
}

/// Maps an angle to (−π, π].
pub fn canonical_angle(alpha: f64) -> f64 {
    let mut a = alpha.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// The rotation factor of the polar decomposition of `F`, i.e. the
/// minimizer of `|F − R|` over `SO(2)`. Requires `det F > 0`.
pub fn polar_rotation(f: &Mat2) -> Result<Rotation2> {
    let det = f.det();
    if !(det > 0.0) {
        return Err(Error::Domain {
            what: "polar rotation needs det F > 0",
            det,
        });
    }
    let c = f.conformal_part();
    Ok(Rotation2::new(c.y.atan2(c.x)))
}

/// `dist(F, SO(2))`.
///
/// Evaluated as `|F − R(φ)|` with `R(φ)` aligned with the conformal part of
/// `F`; this equals the singular-value expression but avoids the
/// cancellation in `σᵢ − 1` near SO(2).
pub fn dist_so2(f: &Mat2) -> f64 {
    let c = f.conformal_part();
    let m = c.norm();
    if m == 0.0 {
        return (f.norm_sq() + 2.0).sqrt();
    }
    let (cs, sn) = (c.x / m, c.y / m);
    let d = *f - Mat2::new(cs, -sn, sn, cs);
    d.norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force `min_α |F − R(α)|` over a uniform angle grid.
    fn brute_force_dist(f: &Mat2, samples: usize) -> (f64, f64) {
        let mut best = (f64::INFINITY, 0.0);
        for k in 0..samples {
            let a = -PI + 2.0 * PI * (k as f64) / (samples as f64);
            let d = (*f - rotation_matrix(a)).norm();
            if d < best.0 {
                best = (d, a);
            }
        }
        best
    }

    #[test]
    fn polar_rotation_known_cases() {
        assert_eq!(polar_rotation(&Mat2::IDENTITY).unwrap().angle(), 0.0);
        assert_eq!(polar_rotation(&Mat2::diag(2.0, 1.0)).unwrap().angle(), 0.0);

        let f = rotation_matrix(0.3) * Mat2::diag(1.5, 0.7);
        let (_, alpha) = brute_force_dist(&f, 1_000_000);
        let r = polar_rotation(&f).unwrap();
        assert!((alpha - 0.3).abs() < 1e-5);
        assert!((r.angle() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn polar_rotation_rejects_reflections() {
        let err = polar_rotation(&Mat2::diag(1.0, -1.0)).unwrap_err();
        assert!(matches!(err, Error::Domain { det, .. } if det == -1.0));
        assert!(polar_rotation(&Mat2::ZERO).is_err());
    }

    #[test]
    fn dist_known_cases() {
        assert!(dist_so2(&(-Mat2::IDENTITY)) < 1e-15);
        let e = 1e-3;
        assert!((dist_so2(&Mat2::diag(1.0 + e, 1.0)) - e).abs() < 1e-15);
        let f = Mat2::diag(1.0, -1.0);
        let (bf, _) = brute_force_dist(&f, 100_000);
        assert!((bf - 2.0).abs() < 1e-9);
        assert!((dist_so2(&f) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn singular_values_of_rotated_diagonal() {
        let f = rotation_matrix(-1.1) * Mat2::diag(0.25, 3.0) * rotation_matrix(0.4);
        let (s1, s2) = f.singular_values();
        assert!((s1 - 3.0).abs() < 1e-13);
        assert!((s2 - 0.25).abs() < 1e-13);
    }

    #[test]
    fn rotation_matrix_is_orthogonal() {
        for k in 0..50 {
            let r = Rotation2::new(-7.0 + 0.3 * k as f64);
            let m = r.matrix();
            assert!((m.transpose() * m - Mat2::IDENTITY).max_abs() < 1e-12);
            assert!((m.det() - 1.0).abs() < 1e-12);
            assert!(r.angle() > -PI && r.angle() <= PI);
        }
        assert_eq!(Rotation2::new(-PI).angle(), PI);
    }

    #[test]
    fn sym_skew_split() {
        let a = Mat2::new(1.0, 2.0, -3.0, 4.0);
        assert_eq!(a.sym() + a.skew(), a);
        assert_eq!(a.sym().transpose(), a.sym());
        assert_eq!(a.skew().transpose(), -a.skew());
    }
}
