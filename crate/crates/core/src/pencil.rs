//! The hyperdeterminant Δ of a 2×2×2 tensor `(A;B)`, the auxiliary form Θ,
//! the dot form `A·B` and polynomial pencils of Δ.

use serde::Serialize;

use crate::field::{Field, Scalar, Sign, ZERO};
use crate::mat2::Mat2;
use crate::tensor::{ModePerm, QuadTensor};

/// Scale of the sign threshold for Δ: `τ_Δ = 1e−9 · (‖A‖_F + ‖B‖_F)⁴`.
pub const DELTA_REL_TOL: f64 = 1e-9;
/// Scale of the zero threshold for Θ: `1e−9 · (‖A‖_F + ‖B‖_F)²`.
pub const THETA_REL_TOL: f64 = 1e-9;
/// Scale of the zero threshold for determinants: `1e−12 · ‖A‖_F²`.
pub const DET_REL_TOL: f64 = 1e-12;

pub fn delta_tol(a: &Mat2, b: &Mat2) -> f64 {
    DELTA_REL_TOL * (a.norm() + b.norm()).powi(4)
}

pub fn theta_tol(a: &Mat2, b: &Mat2) -> f64 {
    THETA_REL_TOL * (a.norm() + b.norm()).powi(2)
}

pub fn det_is_zero(a: &Mat2) -> bool {
    a.det().norm() <= DET_REL_TOL * a.norm_sqr()
}

/// `|x, y|`, the determinant of the matrix with columns `x`, `y`.
fn bracket(x: [Scalar; 2], y: [Scalar; 2]) -> Scalar {
    x[0] * y[1] - x[1] * y[0]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaValue {
    pub value: Scalar,
    /// Present only when both slices are real.
    pub sign: Option<Sign>,
    pub tol: f64,
}

impl DeltaValue {
    pub fn is_zero(&self) -> bool {
        self.value.norm() <= self.tol
    }

    pub fn is_positive(&self) -> bool {
        self.sign == Some(Sign::Positive)
    }

    pub fn is_negative(&self) -> bool {
        self.sign == Some(Sign::Negative)
    }
}

/// `A·B = det(A+B) − det A − det B`.
pub fn dot(a: &Mat2, b: &Mat2) -> Scalar {
    (*a + *b).det() - a.det() - b.det()
}

/// Raw value of Δ(A;B) = (A·B)² − 4 det A det B.
pub fn delta_raw(a: &Mat2, b: &Mat2) -> Scalar {
    let d = dot(a, b);
    d * d - a.det() * b.det() * 4.0
}

/// Δ through the column form `(|a1,b2| + |b1,a2|)² − 4|a1,a2||b1,b2|`.
pub fn delta_column_form(a: &Mat2, b: &Mat2) -> Scalar {
    let (a1, a2, b1, b2) = (a.col(0), a.col(1), b.col(0), b.col(1));
    let s = bracket(a1, b2) + bracket(b1, a2);
    s * s - bracket(a1, a2) * bracket(b1, b2) * 4.0
}

pub fn delta(a: &Mat2, b: &Mat2) -> DeltaValue {
    let value = delta_raw(a, b);
    let tol = delta_tol(a, b);
    let sign = (a.is_real() && b.is_real()).then(|| Sign::classify(value.re, tol));
    DeltaValue { value, sign, tol }
}

/// Θ((a1,a2);(b1,b2)) = |a1,b1| + |a2,b2|.
pub fn theta(a: &Mat2, b: &Mat2) -> Scalar {
    bracket(a.col(0), b.col(0)) + bracket(a.col(1), b.col(1))
}

/// Whether `(det A) x² − (A·B) x + det B = 0` has no root in `field`, with
/// `det A` nonzero. Over ℂ a root always exists.
pub fn is_nonsingular_pair(a: &Mat2, b: &Mat2, field: Field) -> bool {
    if det_is_zero(a) {
        return false;
    }
    match field {
        Field::Complex => false,
        Field::Real => {
            if !(a.is_real() && b.is_real()) {
                return false;
            }
            // the discriminant of the quadratic is exactly Δ(A;B)
            let (qa, qb, qc) = (a.det().re, -dot(a, b).re, b.det().re);
            let disc = qb * qb - 4.0 * qa * qc;
            disc < -delta_tol(a, b)
        }
    }
}

/// Δ of a pencil, as the coefficients `c0..c4` of a polynomial in `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PencilPoly {
    pub coeffs: [Scalar; 5],
}

impl PencilPoly {
    /// Interpolate a degree ≤ 4 polynomial from its values at −2, −1, 0, 1, 2.
    pub fn interpolate(values: [Scalar; 5]) -> Self {
        let [fm2, fm1, f0, f1, f2] = values;
        let c0 = f0;
        let c1 = (-f2 + f1 * 8.0 - fm1 * 8.0 + fm2) / 12.0;
        let c2 = (-f2 + f1 * 16.0 - f0 * 30.0 + fm1 * 16.0 - fm2) / 24.0;
        let c3 = (f2 - f1 * 2.0 + fm1 * 2.0 - fm2) / 12.0;
        let c4 = (f2 - f1 * 4.0 + f0 * 6.0 - fm1 * 4.0 + fm2) / 24.0;
        PencilPoly {
            coeffs: [c0, c1, c2, c3, c4],
        }
    }

    pub fn eval(&self, x: Scalar) -> Scalar {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * x + c)
    }

    /// Index of the highest coefficient above `tol` in modulus.
    pub fn degree(&self, tol: f64) -> Option<usize> {
        (0..5).rev().find(|&i| self.coeffs[i].norm() > tol)
    }
}

const NODES: [f64; 5] = [-2.0, -1.0, 0.0, 1.0, 2.0];

/// x ↦ Δ(A + xC; B + xD).
pub fn delta_pencil_poly(a: &Mat2, b: &Mat2, c: &Mat2, d: &Mat2) -> PencilPoly {
    PencilPoly::interpolate(NODES.map(|x| delta_raw(&(*a + *c * x), &(*b + *d * x))))
}

/// The Δ values of the slice pairs of one flattening of an order-4 tensor,
/// with blocks `(A, B; C, D) = (T11, T12; T21, T22)`.
#[derive(Debug, Clone, Serialize)]
pub struct DeltaProfile {
    pub label: Option<&'static str>,
    /// Whether the permutation is outside the essential list.
    pub redundant: bool,
    pub delta_ab: DeltaValue,
    pub delta_cd: DeltaValue,
    pub delta_ac: DeltaValue,
    pub delta_bd: DeltaValue,
    /// x ↦ Δ(A + xC; B + xD)
    pub poly_rows: PencilPoly,
    /// x ↦ Δ(A + xB; C + xD)
    pub poly_cols: PencilPoly,
    #[serde(skip)]
    blocks: [Mat2; 4],
}

impl DeltaProfile {
    pub fn all_negative(&self) -> bool {
        [self.delta_ab, self.delta_cd, self.delta_ac, self.delta_bd]
            .iter()
            .all(DeltaValue::is_negative)
    }

    /// Δ(A + xB + z(C + xD); yA + B + z(yC + D)).
    pub fn three_parameter(&self, x: Scalar, y: Scalar, z: Scalar) -> Scalar {
        let [a, b, c, d] = self.blocks;
        let first = a + b * x + (c + d * x) * z;
        let second = a * y + b + (c * y + d) * z;
        delta_raw(&first, &second)
    }
}

pub fn delta_profile(q: &QuadTensor, perm: &ModePerm) -> crate::error::Result<DeltaProfile> {
    let flat = QuadTensor::from_tensor(&q.to_tensor_inferred().reorder_modes(perm)?)?;
    let label = crate::tensor::essential_flattenings()
        .into_iter()
        .find(|f| &f.perm == perm)
        .map(|f| f.label);
    let (a, b, c, d) = (
        *flat.block(0, 0),
        *flat.block(0, 1),
        *flat.block(1, 0),
        *flat.block(1, 1),
    );
    Ok(DeltaProfile {
        label,
        redundant: label.is_none(),
        delta_ab: delta(&a, &b),
        delta_cd: delta(&c, &d),
        delta_ac: delta(&a, &c),
        delta_bd: delta(&b, &d),
        poly_rows: delta_pencil_poly(&a, &b, &c, &d),
        poly_cols: delta_pencil_poly(&a, &c, &b, &d),
        blocks: [a, b, c, d],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::re;
    use crate::special;

    fn e() -> Mat2 {
        Mat2::identity()
    }

    #[test]
    fn constants() {
        assert_eq!(delta(&e(), &Mat2::nilpotent()).value, ZERO);
        assert_eq!(delta(&e(), &Mat2::rotation()).value, re(-4.0));
        assert_eq!(delta(&e(), &Mat2::diag(re(1.0), re(2.0))).value, re(1.0));
        let a = Mat2::real(1.0, 2.0, -3.0, 5.0);
        assert_eq!(delta(&a, &a).value, ZERO);
    }

    #[test]
    fn column_form_agrees() {
        let a = Mat2::real(1.0, 2.0, -3.0, 5.0);
        let b = Mat2::real(0.5, -1.0, 2.0, 7.0);
        assert!((delta_raw(&a, &b) - delta_column_form(&a, &b)).norm() < 1e-12);
        assert_eq!(delta_raw(&a, &b), delta_raw(&b, &a));
    }

    #[test]
    fn theta_and_dot_values() {
        assert_eq!(theta(&e(), &Mat2::nilpotent()), re(-1.0));
        assert_eq!(theta(&e(), &Mat2::rotation()), re(-2.0));
        let a = Mat2::real(1.0, 2.0, -3.0, 5.0);
        assert_eq!(theta(&a, &a), ZERO);
        assert_eq!(dot(&e(), &e()), re(2.0));
        assert_eq!(dot(&e(), &Mat2::rotation()), ZERO);
        assert_eq!(dot(&a, &Mat2::zero()), ZERO);
    }

    #[test]
    fn nonsingular_pairs() {
        assert!(is_nonsingular_pair(&e(), &Mat2::rotation(), Field::Real));
        assert!(!is_nonsingular_pair(&e(), &Mat2::nilpotent(), Field::Real));
        assert!(!is_nonsingular_pair(
            &e(),
            &Mat2::rotation(),
            Field::Complex
        ));
        assert!(!is_nonsingular_pair(&Mat2::nilpotent(), &e(), Field::Real));
    }

    #[test]
    fn pencil_leading_coefficient() {
        let z = Mat2::zero();
        let p = delta_pencil_poly(&z, &z, &e(), &Mat2::diag(re(1.0), re(3.0)));
        assert_eq!(p.coeffs, [ZERO, ZERO, ZERO, ZERO, re(4.0)]);
        let a = Mat2::real(1.0, 2.0, -3.0, 5.0);
        let b = Mat2::real(0.5, -1.0, 2.0, 7.0);
        let c = delta_pencil_poly(&a, &b, &z, &z);
        assert_eq!(c.coeffs[0], delta_raw(&a, &b));
        assert!(c.coeffs[1..].iter().all(|x| *x == ZERO));
    }

    #[test]
    fn onepart_coefficient_is_b222_squared() {
        let b1 = Mat2::real(1.0, -2.0, 3.0, 0.5);
        let b2 = Mat2::real(2.0, 1.0, -1.0, 3.0);
        let s1 = Mat2::diag(re(1.0), ZERO);
        let p = delta_pencil_poly(&b1, &b2, &s1, &Mat2::zero());
        assert!((p.coeffs[2] - re(9.0)).norm() < 1e-12);
        assert!(p.coeffs[3].norm() < 1e-12 && p.coeffs[4].norm() < 1e-12);
    }

    #[test]
    fn interpolation_reproduces_direct_evaluation() {
        let a = Mat2::real(1.0, 2.0, -3.0, 5.0);
        let b = Mat2::real(0.5, -1.0, 2.0, 7.0);
        let c = Mat2::real(-2.0, 0.25, 1.0, 1.0);
        let d = Mat2::real(0.0, 3.0, -1.0, 2.0);
        let p = delta_pencil_poly(&a, &b, &c, &d);
        for x in [0.3, -1.7, 3.1, 10.0] {
            let direct = delta_raw(&(a + c * x), &(b + d * x));
            assert!((p.eval(re(x)) - direct).norm() <= 1e-9 * direct.norm().max(1.0));
        }
    }

    #[test]
    fn profile_of_x() {
        let x = special::x_tensor();
        let prof = delta_profile(&x, &ModePerm::identity(4)).unwrap();
        assert_eq!(prof.label, Some("ijkl"));
        assert_eq!(prof.delta_ab.value, re(-4.0));
        assert!(prof.all_negative());
        let at0 = prof.three_parameter(ZERO, ZERO, ZERO);
        assert_eq!(at0, prof.delta_ab.value);
    }

    #[test]
    fn profile_of_zero() {
        let prof = delta_profile(&QuadTensor::default(), &ModePerm::identity(4)).unwrap();
        for d in [prof.delta_ab, prof.delta_cd, prof.delta_ac, prof.delta_bd] {
            assert_eq!(d.value, ZERO);
        }
        let odd = ModePerm::new(vec![1, 0, 2, 3]).unwrap();
        assert!(
            delta_profile(&QuadTensor::default(), &odd)
                .unwrap()
                .redundant
        );
    }
}
