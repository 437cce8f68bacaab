use serde::{Deserialize, Serialize};

use crate::action::GLAction;
use crate::error::{HtrError, Result};
use crate::field::{Field, Scalar, ZERO};
use crate::mat2::{vec2_norm_sqr, Vec2};
use crate::tensor::{ModePerm, Tensor};

/// An outer product `v_1 ⊗ ⋯ ⊗ v_n` of nonzero length-2 vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOneTerm {
    vectors: Vec<Vec2>,
}

impl RankOneTerm {
    pub fn new(vectors: Vec<Vec2>) -> Result<Self> {
        if vectors.len() < 2 {
            return Err(HtrError::TooFewVectors(vectors.len()));
        }
        if let Some(index) = vectors.iter().position(|v| v[0] == ZERO && v[1] == ZERO) {
            return Err(HtrError::ZeroVector { index });
        }
        Ok(RankOneTerm { vectors })
    }

    pub fn order(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[Vec2] {
        &self.vectors
    }

    pub fn is_real(&self) -> bool {
        self.vectors.iter().flatten().all(|z| z.im == 0.0)
    }

    pub(crate) fn add_into(&self, data: &mut [Scalar]) {
        let n = self.vectors.len();
        for (off, slot) in data.iter_mut().enumerate() {
            let mut p = self.vectors[0][(off >> (n - 1)) & 1];
            for t in 1..n {
                p *= self.vectors[t][(off >> (n - 1 - t)) & 1];
            }
            *slot += p;
        }
    }

    pub fn to_tensor(&self) -> Tensor {
        let field = if self.is_real() {
            Field::Real
        } else {
            Field::Complex
        };
        let mut t = Tensor::zeros(self.order(), field).expect("order >= 2");
        self.add_into(t.data_mut());
        t
    }

    /// Insert `v` so that it becomes mode `pos` (0-based) of the result.
    pub fn insert_mode(&self, pos: usize, v: Vec2) -> Result<RankOneTerm> {
        let mut vectors = self.vectors.clone();
        vectors.insert(pos, v);
        RankOneTerm::new(vectors)
    }

    /// Append trailing vectors.
    pub fn extend(&self, tail: &[Vec2]) -> Result<RankOneTerm> {
        let mut vectors = self.vectors.clone();
        vectors.extend_from_slice(tail);
        RankOneTerm::new(vectors)
    }

    /// The term of `reorder_modes(self, perm)`.
    pub fn permute(&self, perm: &ModePerm) -> RankOneTerm {
        // output mode t carries input mode p(t)
        let vectors = perm.as_slice().iter().map(|&p| self.vectors[p]).collect();
        RankOneTerm { vectors }
    }

    /// The term of `g · self`.
    pub fn act(&self, g: &GLAction) -> RankOneTerm {
        let vectors = self
            .vectors
            .iter()
            .zip(g.matrices())
            .map(|(v, m)| m.mul_vec(v))
            .collect();
        RankOneTerm { vectors }
    }

    pub fn scale_mode(&self, mode: usize, s: Scalar) -> RankOneTerm {
        let mut vectors = self.vectors.clone();
        vectors[mode] = [vectors[mode][0] * s, vectors[mode][1] * s];
        RankOneTerm { vectors }
    }
}

/// `v_1 ⊗ ⋯ ⊗ v_n` as a dense tensor.
pub fn rank_one(vectors: &[Vec2]) -> Result<Tensor> {
    if vectors.is_empty() {
        return Err(HtrError::TooFewVectors(0));
    }
    Ok(RankOneTerm::new(vectors.to_vec())?.to_tensor())
}

/// A list of rank-one terms of a common order; witnesses `rank(T) ≤ len()`
/// once its residual against `T` is small.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    order: usize,
    terms: Vec<RankOneTerm>,
}

impl Decomposition {
    pub fn empty(order: usize) -> Self {
        Decomposition {
            order,
            terms: Vec::new(),
        }
    }

    pub fn from_terms(order: usize, terms: Vec<RankOneTerm>) -> Result<Self> {
        let mut d = Self::empty(order);
        for t in terms {
            d.push(t)?;
        }
        Ok(d)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn terms(&self) -> &[RankOneTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn push(&mut self, term: RankOneTerm) -> Result<()> {
        if term.order() != self.order {
            return Err(HtrError::OrderMismatch {
                expected: self.order,
                got: term.order(),
            });
        }
        self.terms.push(term);
        Ok(())
    }

    /// Push `v_1 ⊗ ⋯ ⊗ v_n`, silently skipping it when some vector is zero
    /// (the term vanishes).
    pub fn push_vectors(&mut self, vectors: Vec<Vec2>) -> Result<()> {
        if vectors.iter().any(|v| vec2_norm_sqr(v) == 0.0) {
            return Ok(());
        }
        self.push(RankOneTerm::new(vectors)?)
    }

    pub fn append(&mut self, other: Decomposition) -> Result<()> {
        for t in other.terms {
            self.push(t)?;
        }
        Ok(())
    }

    pub fn is_real(&self) -> bool {
        self.terms.iter().all(RankOneTerm::is_real)
    }

    pub fn reconstruct(&self) -> Tensor {
        let field = if self.is_real() {
            Field::Real
        } else {
            Field::Complex
        };
        let mut t = Tensor::zeros(self.order, field).expect("decomposition order >= 2");
        for term in &self.terms {
            term.add_into(t.data_mut());
        }
        t
    }

    /// ‖reconstruct − T‖_F.
    pub fn residual(&self, target: &Tensor) -> Result<f64> {
        if target.order() != self.order {
            return Err(HtrError::OrderMismatch {
                expected: target.order(),
                got: self.order,
            });
        }
        Ok(self.reconstruct().sub(target)?.norm())
    }

    /// Residual divided by ‖T‖_F (0 when both vanish).
    pub fn relative_residual(&self, target: &Tensor) -> Result<f64> {
        let r = self.residual(target)?;
        let n = target.norm();
        Ok(if n == 0.0 { r } else { r / n })
    }

    /// Map every term through a mode permutation.
    pub fn permute(&self, perm: &ModePerm) -> Decomposition {
        Decomposition {
            order: self.order,
            terms: self.terms.iter().map(|t| t.permute(perm)).collect(),
        }
    }

    /// Map every term through a group element.
    pub fn act(&self, g: &GLAction) -> Decomposition {
        Decomposition {
            order: self.order,
            terms: self.terms.iter().map(|t| t.act(g)).collect(),
        }
    }

    /// Insert a fixed vector at mode `pos` of every term.
    pub fn insert_mode(&self, pos: usize, v: Vec2) -> Result<Decomposition> {
        let mut out = Decomposition::empty(self.order + 1);
        for t in &self.terms {
            out.push(t.insert_mode(pos, v)?)?;
        }
        Ok(out)
    }

    /// Append the same trailing vectors to every term.
    pub fn extend_modes(&self, tail: &[Vec2]) -> Result<Decomposition> {
        let mut out = Decomposition::empty(self.order + tail.len());
        for t in &self.terms {
            out.push(t.extend(tail)?)?;
        }
        Ok(out)
    }

    pub fn scale(&self, s: Scalar) -> Decomposition {
        Decomposition {
            order: self.order,
            terms: self.terms.iter().map(|t| t.scale_mode(0, s)).collect(),
        }
    }
}

/// Serialized layout of a decomposition: every scalar as `[re, im]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecompositionFile {
    pub order: usize,
    pub terms: Vec<Vec<[[f64; 2]; 2]>>,
}

impl From<&Decomposition> for DecompositionFile {
    fn from(d: &Decomposition) -> Self {
        DecompositionFile {
            order: d.order,
            terms: d
                .terms
                .iter()
                .map(|t| {
                    t.vectors
                        .iter()
                        .map(|v| [[v[0].re, v[0].im], [v[1].re, v[1].im]])
                        .collect()
                })
                .collect(),
        }
    }
}

impl TryFrom<DecompositionFile> for Decomposition {
    type Error = HtrError;

    fn try_from(f: DecompositionFile) -> Result<Self> {
        let mut d = Decomposition::empty(f.order);
        for t in f.terms {
            let vectors = t
                .into_iter()
                .map(|v| [Scalar::new(v[0][0], v[0][1]), Scalar::new(v[1][0], v[1][1])])
                .collect();
            d.push(RankOneTerm::new(vectors)?)?;
        }
        Ok(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat2::{basis, vec2, Mat2};
    use crate::tensor::SlicePair;

    #[test]
    fn basis_element() {
        let t = rank_one(&[basis(0), basis(0), basis(0)]).unwrap();
        assert_eq!(t.get(&[0, 0, 0]), Scalar::new(1.0, 0.0));
        assert_eq!(t.norm(), 1.0);
    }

    #[test]
    fn all_ones_matrix() {
        let t = rank_one(&[vec2(1.0, 1.0), vec2(1.0, 1.0)]).unwrap();
        assert!(t.data().iter().all(|z| *z == Scalar::new(1.0, 0.0)));
    }

    #[test]
    fn rejects_bad_terms() {
        assert!(matches!(rank_one(&[]), Err(HtrError::TooFewVectors(0))));
        assert!(matches!(
            rank_one(&[basis(0), [ZERO, ZERO]]),
            Err(HtrError::ZeroVector { index: 1 })
        ));
    }

    #[test]
    fn nilpotent_pair_from_three_terms() {
        let (e1, e2) = (basis(0), basis(1));
        let terms = vec![
            RankOneTerm::new(vec![e1, e1, e1]).unwrap(),
            RankOneTerm::new(vec![e2, e2, e1]).unwrap(),
            RankOneTerm::new(vec![e1, e2, e2]).unwrap(),
        ];
        let d = Decomposition::from_terms(3, terms).unwrap();
        let target = SlicePair::new(Mat2::identity(), Mat2::nilpotent())
            .to_tensor(Field::Real)
            .unwrap();
        assert_eq!(d.reconstruct(), target);
        assert_eq!(d.residual(&target).unwrap(), 0.0);
    }

    #[test]
    fn empty_reconstructs_zero() {
        let d = Decomposition::empty(4);
        assert!(d.reconstruct().is_zero());
        let t3 = Tensor::zeros(3, Field::Real).unwrap();
        assert!(matches!(
            d.residual(&t3),
            Err(HtrError::OrderMismatch { .. })
        ));
    }

    #[test]
    fn permute_matches_tensor_reorder() {
        let term = RankOneTerm::new(vec![vec2(1.0, 2.0), vec2(-1.0, 3.0), vec2(0.5, 4.0)]).unwrap();
        let p = ModePerm::new(vec![2, 0, 1]).unwrap();
        let lhs = term.permute(&p).to_tensor();
        let rhs = term.to_tensor().reorder_modes(&p).unwrap();
        assert_eq!(lhs, rhs);
    }
}
