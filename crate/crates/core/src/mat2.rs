use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::field::{re, Scalar, ONE, ZERO};

/// A length-2 vector over the scalar field.
pub type Vec2 = [Scalar; 2];

pub fn vec2(a: f64, b: f64) -> Vec2 {
    [re(a), re(b)]
}

pub(crate) fn vec2_norm_sqr(v: &Vec2) -> f64 {
    v[0].norm_sqr() + v[1].norm_sqr()
}

/// Basis vector e1 or e2 (0-based index).
pub fn basis(i: usize) -> Vec2 {
    let mut v = [ZERO; 2];
    v[i] = ONE;
    v
}

/// A 2×2 matrix, entries indexed `[(row, col)]` from 0.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Mat2 {
    m: [[Scalar; 2]; 2],
}

impl Mat2 {
    pub const fn new(a11: Scalar, a12: Scalar, a21: Scalar, a22: Scalar) -> Self {
        Mat2 {
            m: [[a11, a12], [a21, a22]],
        }
    }

    pub fn real(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Self::new(re(a11), re(a12), re(a21), re(a22))
    }

    pub fn from_cols(c1: Vec2, c2: Vec2) -> Self {
        Self::new(c1[0], c2[0], c1[1], c2[1])
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// E
    pub fn identity() -> Self {
        Self::real(1.0, 0.0, 0.0, 1.0)
    }

    /// S = [[0, 1], [0, 0]]
    pub fn nilpotent() -> Self {
        Self::real(0.0, 1.0, 0.0, 0.0)
    }

    /// R = [[0, 1], [-1, 0]]
    pub fn rotation() -> Self {
        Self::real(0.0, 1.0, -1.0, 0.0)
    }

    pub fn diag(a: Scalar, b: Scalar) -> Self {
        Self::new(a, ZERO, ZERO, b)
    }

    /// u vᵀ
    pub fn outer(u: &Vec2, v: &Vec2) -> Self {
        Self::new(u[0] * v[0], u[0] * v[1], u[1] * v[0], u[1] * v[1])
    }

    pub fn det(&self) -> Scalar {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn trace(&self) -> Scalar {
        self.m[0][0] + self.m[1][1]
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.m[0][0], self.m[1][0], self.m[0][1], self.m[1][1])
    }

    pub fn conj_transpose(&self) -> Self {
        let t = self.transpose();
        Self::new(
            t.m[0][0].conj(),
            t.m[0][1].conj(),
            t.m[1][0].conj(),
            t.m[1][1].conj(),
        )
    }

    pub fn col(&self, j: usize) -> Vec2 {
        [self.m[0][j], self.m[1][j]]
    }

    pub fn row(&self, i: usize) -> Vec2 {
        self.m[i]
    }

    pub fn scale(&self, s: Scalar) -> Self {
        Self::new(
            self.m[0][0] * s,
            self.m[0][1] * s,
            self.m[1][0] * s,
            self.m[1][1] * s,
        )
    }

    pub fn mul_vec(&self, v: &Vec2) -> Vec2 {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d == ZERO {
            return None;
        }
        let inv = ONE / d;
        Some(Self::new(
            self.m[1][1] * inv,
            -self.m[0][1] * inv,
            -self.m[1][0] * inv,
            self.m[0][0] * inv,
        ))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.entries().iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.entries().iter().all(|z| *z == ZERO)
    }

    pub fn is_real(&self) -> bool {
        self.entries().iter().all(|z| z.im == 0.0)
    }

    /// Row-major entries.
    pub fn entries(&self) -> [Scalar; 4] {
        [self.m[0][0], self.m[0][1], self.m[1][0], self.m[1][1]]
    }

    /// Singular values (σ1 ≥ σ2), from σ1σ2 = |det| and σ1² + σ2² = ‖A‖².
    pub fn singular_values(&self) -> (f64, f64) {
        let fro = self.norm_sqr();
        let d = self.det().norm();
        let half = 0.5 * fro;
        let disc = (half * half - d * d).max(0.0).sqrt();
        let s1_sq = half + disc;
        let s1 = s1_sq.sqrt();
        let s2 = if s1 > 0.0 { d / s1 } else { 0.0 };
        (s1, s2)
    }

    /// Nearest rank-one matrix in Frobenius norm, returned as (u, v) with the
    /// projection equal to u vᵀ. `None` for the zero matrix.
    pub fn rank_one_factors(&self) -> Option<(Vec2, Vec2)> {
        if self.is_zero() {
            return None;
        }
        // top eigenvector of the Hermitian Gram matrix AᴴA
        let (_, _, v1) = hermitian_top_eigen(&(self.conj_transpose() * *self));
        let u = self.mul_vec(&v1);
        Some((u, [v1[0].conj(), v1[1].conj()]))
    }

    pub fn map(&self, f: impl Fn(Scalar) -> Scalar) -> Self {
        Self::new(
            f(self.m[0][0]),
            f(self.m[0][1]),
            f(self.m[1][0]),
            f(self.m[1][1]),
        )
    }
}

/// Eigenvalues `(λmax, λmin)` of a 2×2 Hermitian matrix and a unit
/// eigenvector for `λmax`.
pub(crate) fn hermitian_top_eigen(g: &Mat2) -> (f64, f64, Vec2) {
    let a = g[(0, 0)].re;
    let c = g[(1, 1)].re;
    let b = g[(0, 1)];
    let half = 0.5 * (a - c);
    let rad = (half * half + b.norm_sqr()).sqrt();
    let hi = 0.5 * (a + c) + rad;
    let lo = if hi > 0.0 {
        (a * c - b.norm_sqr()) / hi
    } else {
        0.0
    };
    if b.norm() <= 1e-300 {
        let v = if a >= c { [ONE, ZERO] } else { [ZERO, ONE] };
        return (a.max(c), a.min(c), v);
    }
    // (G − λ)v = 0: take the better conditioned of the two rows
    let r1 = [b, re(hi - a)];
    let r2 = [re(hi - c), b.conj()];
    let v = if vec2_norm_sqr(&r1) >= vec2_norm_sqr(&r2) {
        r1
    } else {
        r2
    };
    let n = vec2_norm_sqr(&v).sqrt();
    (hi, lo, [v[0] / n, v[1] / n])
}

impl Index<(usize, usize)> for Mat2 {
    type Output = Scalar;

    fn index(&self, (i, j): (usize, usize)) -> &Scalar {
        &self.m[i][j]
    }
}

impl IndexMut<(usize, usize)> for Mat2 {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Scalar {
        &mut self.m[i][j]
    }
}

impl Add for Mat2 {
    type Output = Mat2;

    fn add(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.m[0][0] + o.m[0][0],
            self.m[0][1] + o.m[0][1],
            self.m[1][0] + o.m[1][0],
            self.m[1][1] + o.m[1][1],
        )
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
        self + (-o)
    }
}

impl Neg for Mat2 {
    type Output = Mat2;

    fn neg(self) -> Mat2 {
        self.map(|z| -z)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    fn mul(self, o: Mat2) -> Mat2 {
        let a = &self.m;
        let b = &o.m;
        Mat2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

impl Mul<Scalar> for Mat2 {
    type Output = Mat2;

    fn mul(self, s: Scalar) -> Mat2 {
        self.scale(s)
    }
}

impl Mul<f64> for Mat2 {
    type Output = Mat2;

    fn mul(self, s: f64) -> Mat2 {
        self.scale(Complex64::new(s, 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants() {
        assert_eq!(Mat2::identity().det(), ONE);
        assert_eq!(Mat2::nilpotent().det(), ZERO);
        assert_eq!(Mat2::rotation().det(), ONE);
    }

    #[test]
    fn inverse_roundtrip() {
        let a = Mat2::real(2.0, 1.0, -3.0, 4.0);
        let inv = a.inverse().unwrap();
        assert!((a * inv - Mat2::identity()).norm() < 1e-15);
        assert!(Mat2::nilpotent().inverse().is_none());
    }

    #[test]
    fn singular_values_of_diag() {
        let (s1, s2) = Mat2::real(3.0, 0.0, 0.0, -2.0).singular_values();
        assert!((s1 - 3.0).abs() < 1e-15 && (s2 - 2.0).abs() < 1e-15);
    }

    #[test]
    fn rank_one_projection_is_exact_for_rank_one() {
        let m = Mat2::outer(&vec2(1.0, -2.0), &vec2(3.0, 0.5));
        let (u, v) = m.rank_one_factors().unwrap();
        assert!((Mat2::outer(&u, &v) - m).norm() < 1e-14);
    }

    #[test]
    fn rank_one_projection_drops_smaller_singular_value() {
        let m = Mat2::real(1.0, 0.0, 0.0, 0.25);
        let (u, v) = m.rank_one_factors().unwrap();
        let p = Mat2::outer(&u, &v);
        assert!((p - Mat2::real(1.0, 0.0, 0.0, 0.0)).norm() < 1e-15);
        let g = Mat2::new(re(1.0), Complex64::new(0.0, 2.0), re(-1.0), re(0.5));
        let (u, v) = g.rank_one_factors().unwrap();
        let err = (Mat2::outer(&u, &v) - g).norm();
        assert!((err - g.singular_values().1).abs() < 1e-12);
    }
}
