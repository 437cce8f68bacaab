use crate::error::{HtrError, Result};
use crate::field::{Field, Scalar, ZERO};
use crate::mat2::Mat2;
use crate::tensor::Tensor;

/// Relative invertibility threshold: `|det g| > 1e-12 · ‖g‖_F²`.
pub const INVERTIBILITY_TOL: f64 = 1e-12;

/// An element `(g_1, …, g_n)` of GL(2)^n acting mode by mode.
#[derive(Debug, Clone, PartialEq)]
pub struct GLAction {
    mats: Vec<Mat2>,
}

impl GLAction {
    pub fn new(mats: Vec<Mat2>) -> Result<Self> {
        for (mode, m) in mats.iter().enumerate() {
            let det = m.det().norm();
            if !(det > INVERTIBILITY_TOL * m.norm_sqr()) {
                return Err(HtrError::SingularAction { mode, det });
            }
        }
        Ok(GLAction { mats })
    }

    pub fn identity(n: usize) -> Self {
        GLAction {
            mats: vec![Mat2::identity(); n],
        }
    }

    /// Identity except for mode `mode`.
    pub fn on_mode(n: usize, mode: usize, m: Mat2) -> Result<Self> {
        let mut mats = vec![Mat2::identity(); n];
        mats[mode] = m;
        Self::new(mats)
    }

    pub fn order(&self) -> usize {
        self.mats.len()
    }

    pub fn matrices(&self) -> &[Mat2] {
        &self.mats
    }

    pub fn is_real(&self) -> bool {
        self.mats.iter().all(Mat2::is_real)
    }

    pub fn inverse(&self) -> GLAction {
        GLAction {
            mats: self
                .mats
                .iter()
                .map(|m| m.inverse().expect("checked invertible at construction"))
                .collect(),
        }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &GLAction) -> GLAction {
        GLAction {
            mats: self
                .mats
                .iter()
                .zip(&other.mats)
                .map(|(a, b)| *a * *b)
                .collect(),
        }
    }

    pub fn apply(&self, t: &Tensor) -> Result<Tensor> {
        if self.order() != t.order() {
            return Err(HtrError::OrderMismatch {
                expected: t.order(),
                got: self.order(),
            });
        }
        let n = t.order();
        let mut data: Vec<Scalar> = t.data().to_vec();
        for (mode, g) in self.mats.iter().enumerate() {
            let stride = 1 << (n - 1 - mode);
            let mut next = vec![ZERO; data.len()];
            for off in 0..data.len() {
                if off & stride != 0 {
                    continue;
                }
                let x0 = data[off];
                let x1 = data[off | stride];
                next[off] = g[(0, 0)] * x0 + g[(0, 1)] * x1;
                next[off | stride] = g[(1, 0)] * x0 + g[(1, 1)] * x1;
            }
            data = next;
        }
        let field = if self.is_real() {
            t.field()
        } else {
            Field::Complex
        };
        Tensor::from_data(n, field, data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::SlicePair;

    #[test]
    fn identity_is_noop() {
        let t = Tensor::from_real(3, &[1., -2., 3., 0.5, 5., 6., -7., 8.]).unwrap();
        assert_eq!(GLAction::identity(3).apply(&t).unwrap(), t);
    }

    #[test]
    fn swapping_slices() {
        let a = Mat2::real(1.0, 2.0, 3.0, 4.0);
        let b = Mat2::real(-1.0, 0.0, 5.0, 2.0);
        let t = SlicePair::new(a, b).to_tensor(Field::Real).unwrap();
        let g = GLAction::on_mode(3, 2, Mat2::real(0.0, 1.0, 1.0, 0.0)).unwrap();
        let out = SlicePair::from_tensor(&g.apply(&t).unwrap()).unwrap();
        assert_eq!(out, SlicePair::new(b, a));
    }

    #[test]
    fn matches_slice_formula() {
        // (P,Q,R)·(A;B) = (r11 PAQᵀ + r12 PBQᵀ; r21 PAQᵀ + r22 PBQᵀ)
        let a = Mat2::real(1.0, 2.0, 3.0, 4.0);
        let b = Mat2::real(-1.0, 0.5, 2.0, 2.0);
        let p = Mat2::real(2.0, 1.0, 0.0, 1.0);
        let q = Mat2::real(1.0, -1.0, 1.0, 1.0);
        let r = Mat2::real(3.0, 1.0, 1.0, 2.0);
        let g = GLAction::new(vec![p, q, r]).unwrap();
        let out = SlicePair::from_tensor(
            &g.apply(&SlicePair::new(a, b).to_tensor(Field::Real).unwrap())
                .unwrap(),
        )
        .unwrap();
        let pa = p * a * q.transpose();
        let pb = p * b * q.transpose();
        let want_a = pa * r[(0, 0)] + pb * r[(0, 1)];
        let want_b = pa * r[(1, 0)] + pb * r[(1, 1)];
        assert!((out.a - want_a).norm() < 1e-14);
        assert!((out.b - want_b).norm() < 1e-14);
    }

    #[test]
    fn rejects_singular_and_mismatched() {
        assert!(matches!(
            GLAction::new(vec![Mat2::identity(), Mat2::nilpotent()]),
            Err(HtrError::SingularAction { mode: 1, .. })
        ));
        let t = Tensor::zeros(3, Field::Real).unwrap();
        assert!(GLAction::identity(4).apply(&t).is_err());
    }
}
