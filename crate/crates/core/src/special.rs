//! Named tensors used as fixtures and in examples.

use crate::mat2::Mat2;
use crate::tensor::{QuadTensor, SlicePair};

/// `(E;S)`, the rank-3 tensor with a nilpotent second slice.
pub fn e_s() -> SlicePair {
    SlicePair::new(Mat2::identity(), Mat2::nilpotent())
}

/// `(E;R)`, the real rank-3 tensor with Δ = −4.
pub fn e_r() -> SlicePair {
    SlicePair::new(Mat2::identity(), Mat2::rotation())
}

/// The 2×2×2×2 tensor X whose 4×4 unfolding is
///
/// ```text
/// 1  0  0  1
/// 0  1 -1  0
/// 0 -1  2  0
/// 1  0  0  2
/// ```
///
/// (columns `vec T11 … vec T22`). Every adjacent slice pair of every
/// flattening has negative Δ.
pub fn x_tensor() -> QuadTensor {
    QuadTensor::new(
        Mat2::identity(),
        Mat2::real(0.0, -1.0, 1.0, 0.0),
        Mat2::real(0.0, 2.0, -1.0, 0.0),
        Mat2::real(1.0, 0.0, 0.0, 2.0),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn x_unfolding_has_unit_determinant() {
        let d = x_tensor().unfolding_det();
        assert!((d.re - 1.0).abs() < 1e-14 && d.im == 0.0);
    }
}
