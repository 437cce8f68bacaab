//! Dense 2×⋯×2 tensors and the slice views used throughout the crate.
//!
//! Entry `t[i1, …, in]` (0-based indices) lives at offset `Σ i_t · 2^(n-1-t)`,
//! so mode 1 is the most significant index and mode-1 slices are contiguous.

use nalgebra::Matrix4;

use crate::error::{HtrError, Result};
use crate::field::{Field, Scalar, ZERO};
use crate::mat2::Mat2;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    order: usize,
    field: Field,
    data: Vec<Scalar>,
}

impl Tensor {
    pub fn zeros(order: usize, field: Field) -> Result<Self> {
        if order < 2 {
            return Err(HtrError::OrderTooSmall(order));
        }
        Ok(Tensor {
            order,
            field,
            data: vec![ZERO; 1 << order],
        })
    }

    pub fn from_data(order: usize, field: Field, data: Vec<Scalar>) -> Result<Self> {
        if order < 2 {
            return Err(HtrError::OrderTooSmall(order));
        }
        if data.len() != 1 << order {
            return Err(HtrError::WrongLength {
                expected: 1 << order,
                got: data.len(),
            });
        }
        if field == Field::Real && data.iter().any(|z| z.im != 0.0) {
            return Err(HtrError::FieldMismatch {
                expected: Field::Real,
                got: Field::Complex,
            });
        }
        Ok(Tensor { order, field, data })
    }

    pub fn from_real(order: usize, data: &[f64]) -> Result<Self> {
        Self::from_data(
            order,
            Field::Real,
            data.iter().map(|&x| Scalar::new(x, 0.0)).collect(),
        )
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn data(&self) -> &[Scalar] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn offset(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.order);
        index.iter().fold(0, |acc, &i| (acc << 1) | (i & 1))
    }

    pub fn get(&self, index: &[usize]) -> Scalar {
        self.data[self.offset(index)]
    }

    pub fn set(&mut self, index: &[usize], value: Scalar) {
        let off = self.offset(index);
        self.data[off] = value;
        if value.im != 0.0 {
            self.field = Field::Complex;
        }
    }

    pub(crate) fn data_mut(&mut self) -> &mut [Scalar] {
        &mut self.data
    }

    /// Re-tag the tensor. Embedding into ℂ always succeeds; narrowing to ℝ
    /// requires zero imaginary parts.
    pub fn with_field(mut self, field: Field) -> Result<Self> {
        if field == Field::Real && !self.is_real() {
            return Err(HtrError::FieldMismatch {
                expected: Field::Real,
                got: Field::Complex,
            });
        }
        self.field = field;
        Ok(self)
    }

    pub fn is_real(&self) -> bool {
        self.data.iter().all(|z| z.im == 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| *z == ZERO)
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: Scalar) -> Tensor {
        let field = if s.im == 0.0 {
            self.field
        } else {
            Field::Complex
        };
        Tensor {
            order: self.order,
            field,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        self.zip(other, |a, b| a - b)
    }

    fn zip(&self, other: &Tensor, f: impl Fn(Scalar, Scalar) -> Scalar) -> Result<Tensor> {
        if self.order != other.order {
            return Err(HtrError::OrderMismatch {
                expected: self.order,
                got: other.order,
            });
        }
        Ok(Tensor {
            order: self.order,
            field: self.field.join(other.field),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Multi-index of a flat offset.
    pub fn index_of(&self, offset: usize) -> Vec<usize> {
        (0..self.order)
            .map(|t| (offset >> (self.order - 1 - t)) & 1)
            .collect()
    }

    /// Permute modes: the output entry at `(i_p(1), …, i_p(n))` equals the
    /// input entry at `(i_1, …, i_n)`.
    pub fn reorder_modes(&self, perm: &ModePerm) -> Result<Tensor> {
        if perm.len() != self.order {
            return Err(HtrError::OrderMismatch {
                expected: self.order,
                got: perm.len(),
            });
        }
        let n = self.order;
        let mut out = vec![ZERO; self.data.len()];
        for (off, &v) in self.data.iter().enumerate() {
            let idx = self.index_of(off);
            let target = perm.0.iter().fold(0, |acc, &p| (acc << 1) | idx[p]);
            out[target] = v;
        }
        Ok(Tensor {
            order: n,
            field: self.field,
            data: out,
        })
    }

    /// The order-(n-1) tensor obtained by fixing mode `mode` to `index`.
    pub fn fix_mode(&self, mode: usize, index: usize) -> Result<Tensor> {
        if self.order < 3 {
            return Err(HtrError::OrderTooSmall(self.order - 1));
        }
        let n = self.order;
        let data = (0..self.data.len())
            .filter(|off| (off >> (n - 1 - mode)) & 1 == index)
            .map(|off| self.data[off])
            .collect();
        Ok(Tensor {
            order: n - 1,
            field: self.field,
            data,
        })
    }

    /// Block of the first `lead` modes with the trailing `n - lead` indices
    /// fixed to the multi-index encoded by `trailing` (most significant first).
    pub fn leading_block(&self, lead: usize, trailing: usize) -> Result<Tensor> {
        if lead < 2 || lead >= self.order {
            return Err(HtrError::Precondition(format!(
                "leading block size {lead} must lie in 2..{}",
                self.order
            )));
        }
        Ok(Tensor {
            order: lead,
            field: self.field,
            data: self.leading_block_data(lead, trailing),
        })
    }

    /// Raw entries of a leading block (also valid for `lead == 1`).
    pub fn leading_block_data(&self, lead: usize, trailing: usize) -> Vec<Scalar> {
        let tail = self.order - lead;
        (0..1usize << lead)
            .map(|l| self.data[(l << tail) | trailing])
            .collect()
    }

    /// Matrix rank of the unfolding that puts `row_modes` on the rows.
    pub fn unfolding_rank(&self, row_modes: &[usize], rel_tol: f64) -> usize {
        let n = self.order;
        let col_modes: Vec<usize> = (0..n).filter(|m| !row_modes.contains(m)).collect();
        let rows = 1 << row_modes.len();
        let cols = 1 << col_modes.len();
        let mut m = nalgebra::DMatrix::<Scalar>::zeros(rows, cols);
        for (off, &v) in self.data.iter().enumerate() {
            let idx = self.index_of(off);
            let r = row_modes.iter().fold(0, |acc, &p| (acc << 1) | idx[p]);
            let c = col_modes.iter().fold(0, |acc, &p| (acc << 1) | idx[p]);
            m[(r, c)] = v;
        }
        let sv = m.singular_values();
        let top = sv.iter().cloned().fold(0.0, f64::max);
        if top == 0.0 {
            return 0;
        }
        sv.iter().filter(|&&s| s > rel_tol * top).count()
    }
}

/// A permutation of tensor modes, stored 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ModePerm(Vec<usize>);

impl ModePerm {
    pub fn new(p: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; p.len()];
        for &i in &p {
            if i >= p.len() || seen[i] {
                return Err(HtrError::InvalidPermutation(p));
            }
            seen[i] = true;
        }
        Ok(ModePerm(p))
    }

    /// From the 1-based notation `(p(1), …, p(n))`.
    pub fn from_one_based(p: &[usize]) -> Result<Self> {
        if p.contains(&0) {
            return Err(HtrError::InvalidPermutation(p.to_vec()));
        }
        Self::new(p.iter().map(|&i| i - 1).collect())
    }

    pub fn identity(n: usize) -> Self {
        ModePerm((0..n).collect())
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.0.len()];
        for (t, &p) in self.0.iter().enumerate() {
            inv[p] = t;
        }
        ModePerm(inv)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &p)| i == p)
    }

    /// Permutation realising a flattening label over `ijkl`: the permuted
    /// tensor satisfies `t'[i,j,k,l] = t[label]`, e.g. `"kjil"`.
    pub fn from_pattern(label: &str) -> Result<Self> {
        let letters = ['i', 'j', 'k', 'l'];
        let q: Vec<usize> = label
            .chars()
            .map(|c| letters.iter().position(|&l| l == c).unwrap_or(usize::MAX))
            .collect();
        if q.len() != 4 {
            return Err(HtrError::InvalidPermutation(q));
        }
        // t'[j] = t[j∘q] is reorder_modes with the inverse of q
        Ok(ModePerm::new(q)?.inverse())
    }
}

/// A named flattening of an order-4 tensor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Flattening {
    pub label: &'static str,
    pub perm: ModePerm,
}

/// The six order-4 flattenings that stay distinct once block-wise and
/// block-arrangement transposes are identified.
pub fn essential_flattenings() -> Vec<Flattening> {
    ["ijkl", "kjil", "ikjl", "ilkj", "klij", "jlki"]
        .into_iter()
        .map(|label| Flattening {
            label,
            perm: ModePerm::from_pattern(label).expect("static labels are valid"),
        })
        .collect()
}

/// Class of a flattening under the transpose equivalences: the unordered
/// pair of modes feeding the matrix blocks, then the pair indexing blocks.
pub fn flattening_class(perm: &ModePerm) -> ([usize; 2], [usize; 2]) {
    // mode t of the flattened tensor reads original mode q(t), q = perm⁻¹
    let q = perm.inverse();
    let s = q.as_slice();
    let mut a = [s[0], s[1]];
    let mut b = [s[2], s[3]];
    a.sort_unstable();
    b.sort_unstable();
    (a, b)
}

/// An order-3 tensor as its two mode-3 slices `(A; B)`: `A[(i,j)] = t[i,j,0]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SlicePair {
    pub a: Mat2,
    pub b: Mat2,
}

impl SlicePair {
    pub fn new(a: Mat2, b: Mat2) -> Self {
        SlicePair { a, b }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_tensor(t: &Tensor) -> Result<Self> {
        if t.order() != 3 {
            return Err(HtrError::OrderMismatch {
                expected: 3,
                got: t.order(),
            });
        }
        let d = t.data();
        let slice = |k: usize| Mat2::new(d[k], d[2 + k], d[4 + k], d[6 + k]);
        Ok(SlicePair {
            a: slice(0),
            b: slice(1),
        })
    }

    pub fn to_tensor(&self, field: Field) -> Result<Tensor> {
        let mut data = vec![ZERO; 8];
        for i in 0..2 {
            for j in 0..2 {
                data[4 * i + 2 * j] = self.a[(i, j)];
                data[4 * i + 2 * j + 1] = self.b[(i, j)];
            }
        }
        Tensor::from_data(3, field, data)
    }

    /// Tagged as real when every entry is real.
    pub fn to_tensor_inferred(&self) -> Tensor {
        let field = if self.is_real() {
            Field::Real
        } else {
            Field::Complex
        };
        self.to_tensor(field).expect("field inferred from data")
    }

    pub fn is_real(&self) -> bool {
        self.a.is_real() && self.b.is_real()
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn norm(&self) -> f64 {
        (self.a.norm_sqr() + self.b.norm_sqr()).sqrt()
    }

    pub fn scale(&self, s: Scalar) -> Self {
        SlicePair::new(self.a.scale(s), self.b.scale(s))
    }

    /// Entry `t[i,j,k]`.
    pub fn get(&self, i: usize, j: usize, k: usize) -> Scalar {
        if k == 0 {
            self.a[(i, j)]
        } else {
            self.b[(i, j)]
        }
    }
}

impl std::ops::Add for SlicePair {
    type Output = SlicePair;

    fn add(self, o: SlicePair) -> SlicePair {
        SlicePair::new(self.a + o.a, self.b + o.b)
    }
}

impl std::ops::Sub for SlicePair {
    type Output = SlicePair;

    fn sub(self, o: SlicePair) -> SlicePair {
        SlicePair::new(self.a - o.a, self.b - o.b)
    }
}

/// An order-4 tensor as the block array `T_kl`, with `T_kl[(i,j)] = t[i,j,k,l]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QuadTensor {
    blocks: [[Mat2; 2]; 2],
}

impl QuadTensor {
    pub fn new(t11: Mat2, t12: Mat2, t21: Mat2, t22: Mat2) -> Self {
        QuadTensor {
            blocks: [[t11, t12], [t21, t22]],
        }
    }

    /// Halves along mode 3: `first = (T11; T12)`, `second = (T21; T22)`.
    pub fn from_halves(first: SlicePair, second: SlicePair) -> Self {
        Self::new(first.a, first.b, second.a, second.b)
    }

    pub fn from_tensor(t: &Tensor) -> Result<Self> {
        if t.order() != 4 {
            return Err(HtrError::OrderMismatch {
                expected: 4,
                got: t.order(),
            });
        }
        let d = t.data();
        let block = |k: usize, l: usize| {
            Mat2::new(
                d[2 * k + l],
                d[4 + 2 * k + l],
                d[8 + 2 * k + l],
                d[12 + 2 * k + l],
            )
        };
        Ok(Self::new(
            block(0, 0),
            block(0, 1),
            block(1, 0),
            block(1, 1),
        ))
    }

    pub fn to_tensor(&self, field: Field) -> Result<Tensor> {
        let mut data = vec![ZERO; 16];
        for k in 0..2 {
            for l in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        data[8 * i + 4 * j + 2 * k + l] = self.blocks[k][l][(i, j)];
                    }
                }
            }
        }
        Tensor::from_data(4, field, data)
    }

    pub fn to_tensor_inferred(&self) -> Tensor {
        let field = if self.is_real() {
            Field::Real
        } else {
            Field::Complex
        };
        self.to_tensor(field).expect("field inferred from data")
    }

    /// `T_kl`, 0-based.
    pub fn block(&self, k: usize, l: usize) -> &Mat2 {
        &self.blocks[k][l]
    }

    /// `T_{k·} = (T_k1; T_k2)`.
    pub fn half(&self, k: usize) -> SlicePair {
        SlicePair::new(self.blocks[k][0], self.blocks[k][1])
    }

    /// `T_{·l} = (T_1l; T_2l)`.
    pub fn column_half(&self, l: usize) -> SlicePair {
        SlicePair::new(self.blocks[0][l], self.blocks[1][l])
    }

    pub fn is_real(&self) -> bool {
        self.blocks.iter().flatten().all(Mat2::is_real)
    }

    pub fn norm(&self) -> f64 {
        self.blocks
            .iter()
            .flatten()
            .map(Mat2::norm_sqr)
            .sum::<f64>()
            .sqrt()
    }

    /// `(vec T11 | vec T12 | vec T21 | vec T22)`.
    pub fn unfolding(&self) -> Matrix4<Scalar> {
        let mut m = Matrix4::zeros();
        for (c, blk) in self.blocks.iter().flatten().enumerate() {
            for (r, v) in vec2x2(blk).into_iter().enumerate() {
                m[(r, c)] = v;
            }
        }
        m
    }

    pub fn unfolding_det(&self) -> Scalar {
        self.unfolding().determinant()
    }

    /// Real part of the unfolding; `None` if any entry is complex.
    pub fn real_unfolding(&self) -> Option<Matrix4<f64>> {
        if !self.is_real() {
            return None;
        }
        Some(self.unfolding().map(|z| z.re))
    }
}

/// Column stacking `(x11, x21, x12, x22)`.
pub fn vec2x2(x: &Mat2) -> [Scalar; 4] {
    [x[(0, 0)], x[(1, 0)], x[(0, 1)], x[(1, 1)]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ONE;

    #[test]
    fn offsets_put_mode_one_first() {
        let mut t = Tensor::zeros(3, Field::Real).unwrap();
        t.set(&[1, 0, 0], ONE);
        assert_eq!(t.data()[4], ONE);
        assert_eq!(t.index_of(5), vec![1, 0, 1]);
    }

    #[test]
    fn from_data_rejects_bad_input() {
        assert!(matches!(
            Tensor::from_real(3, &[0.0; 7]),
            Err(HtrError::WrongLength {
                expected: 8,
                got: 7
            })
        ));
        assert!(Tensor::from_real(1, &[0.0; 2]).is_err());
        let complex = vec![Scalar::new(0.0, 1.0); 4];
        assert!(Tensor::from_data(2, Field::Real, complex).is_err());
    }

    #[test]
    fn reorder_chases_indices() {
        // (k, j, i, l) moves a single 1 at (1,2,2,1) to (2,2,1,1)
        let mut t = Tensor::zeros(4, Field::Real).unwrap();
        t.set(&[0, 1, 1, 0], ONE);
        let p = ModePerm::from_one_based(&[3, 2, 1, 4]).unwrap();
        let out = t.reorder_modes(&p).unwrap();
        assert_eq!(out.get(&[1, 1, 0, 0]), ONE);
        assert_eq!(out.norm(), 1.0);
    }

    #[test]
    fn reorder_identity_and_transposition() {
        let t = Tensor::from_real(3, &[1., 2., 3., 4., 5., 6., 7., 8.]).unwrap();
        assert_eq!(t.reorder_modes(&ModePerm::identity(3)).unwrap(), t);
        let swap = ModePerm::new(vec![1, 0, 2]).unwrap();
        let twice = t
            .reorder_modes(&swap)
            .unwrap()
            .reorder_modes(&swap)
            .unwrap();
        assert_eq!(twice, t);
    }

    #[test]
    fn invalid_permutations() {
        assert!(ModePerm::new(vec![0, 0, 1]).is_err());
        assert!(ModePerm::new(vec![0, 3, 1]).is_err());
        assert!(ModePerm::from_one_based(&[0, 1]).is_err());
        let t = Tensor::zeros(3, Field::Real).unwrap();
        assert!(t.reorder_modes(&ModePerm::identity(4)).is_err());
    }

    #[test]
    fn flattening_list() {
        let fl = essential_flattenings();
        assert_eq!(fl.len(), 6);
        assert!(fl[0].perm.is_identity());
        let classes: std::collections::HashSet<_> =
            fl.iter().map(|f| flattening_class(&f.perm)).collect();
        assert_eq!(classes.len(), 6);
    }

    #[test]
    fn transpose_equivalent_patterns_share_a_class() {
        let base = flattening_class(&ModePerm::from_pattern("ijkl").unwrap());
        for label in ["jikl", "ijlk", "jilk"] {
            assert_eq!(
                flattening_class(&ModePerm::from_pattern(label).unwrap()),
                base
            );
        }
    }

    #[test]
    fn pattern_matches_displayed_block() {
        // (jlki): the top-left block reads [[t1111, t2111], [t1112, t2112]]
        let data: Vec<f64> = (0..16).map(f64::from).collect();
        let t = Tensor::from_real(4, &data).unwrap();
        let p = ModePerm::from_pattern("jlki").unwrap();
        let q = QuadTensor::from_tensor(&t.reorder_modes(&p).unwrap()).unwrap();
        let b = q.block(0, 0);
        assert_eq!(b[(0, 0)], t.get(&[0, 0, 0, 0]));
        assert_eq!(b[(0, 1)], t.get(&[1, 0, 0, 0]));
        assert_eq!(b[(1, 0)], t.get(&[0, 0, 0, 1]));
        assert_eq!(b[(1, 1)], t.get(&[1, 0, 0, 1]));
    }

    #[test]
    fn vec_is_column_stacking() {
        let one = |x: f64| Scalar::new(x, 0.0);
        assert_eq!(
            vec2x2(&Mat2::identity()),
            [one(1.), one(0.), one(0.), one(1.)]
        );
        assert_eq!(
            vec2x2(&Mat2::nilpotent()),
            [one(0.), one(0.), one(1.), one(0.)]
        );
        assert_eq!(vec2x2(&Mat2::zero()), [ZERO; 4]);
    }

    #[test]
    fn repeated_slices_give_singular_unfolding() {
        let a = Mat2::real(1.0, 2.0, 3.0, 4.0);
        assert_eq!(QuadTensor::new(a, a, a, a).unfolding_det(), ZERO);
    }

    #[test]
    fn quad_roundtrip_and_entry_layout() {
        let data: Vec<f64> = (0..16).map(|x| f64::from(x) - 7.5).collect();
        let t = Tensor::from_real(4, &data).unwrap();
        let q = QuadTensor::from_tensor(&t).unwrap();
        assert_eq!(q.block(1, 0)[(0, 1)], t.get(&[0, 1, 1, 0]));
        assert_eq!(q.to_tensor(Field::Real).unwrap(), t);
        let s = SlicePair::from_tensor(&t.fix_mode(3, 1).unwrap()).unwrap();
        assert_eq!(s.get(1, 0, 1), t.get(&[1, 0, 1, 1]));
    }

    #[test]
    fn leading_blocks() {
        let data: Vec<f64> = (0..32).map(f64::from).collect();
        let t = Tensor::from_real(5, &data).unwrap();
        let b = t.leading_block(3, 0b10).unwrap();
        assert_eq!(b.get(&[1, 0, 1]), t.get(&[1, 0, 1, 1, 0]));
    }
}
