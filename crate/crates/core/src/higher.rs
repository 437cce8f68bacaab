//! Upper bounds for 2×⋯×2 tensors of order k ≥ 4.
//!
//! Two constructions. Mode grouping decomposes every leading block of a
//! fixed size and tensors the pieces with standard basis vectors. The
//! stabilized construction adds one rank-one matrix `C` to the second slice
//! of every order-3 leading block, which pushes each block to rank ≤ 2, and
//! pays for it with a single correction term: at most `2^(k−2) + 1` real terms.

use rand::{Rng as _, SeedableRng};
use serde::Serialize;

use crate::bound2222::{bound_complex_seeded, bound_real_seeded};
use crate::decomposition::Decomposition;
use crate::error::{HtrError, Result};
use crate::field::{Field, Scalar};
use crate::mat2::{basis, vec2, Mat2, Vec2};
use crate::pencil::delta_raw;
use crate::rank222::{decompose222, matrix_terms};
use crate::tensor::{QuadTensor, SlicePair, Tensor};

/// Decompositions are accepted up to this relative residual.
pub const ACCEPT_REL_RESIDUAL: f64 = 1e-8;
/// Integer draws of `(s, t, u, v)` tried before continuous ones.
pub const INTEGER_DRAWS: usize = 64;
/// Continuous draws after the integer ones.
pub const CONTINUOUS_DRAWS: usize = 4096;
/// Corrected blocks must reach `Δ ≥ STABLE_MARGIN · ‖A‖² ‖B + γC₀‖²`.
pub const STABLE_MARGIN: f64 = 1e-8;
/// Largest exponent tried when doubling γ.
pub const MAX_DOUBLINGS: u32 = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Construction {
    ModeGroup,
    Stabilized,
    /// Orders 2 and 3, handled by matrix factorization and the order-3 path.
    Direct,
}

#[derive(Debug, Clone)]
pub struct HigherBound {
    pub decomposition: Decomposition,
    pub bound: usize,
    pub construction: Construction,
    /// Relative reconstruction residual.
    pub residual: f64,
}

fn check(
    t: &Tensor,
    decomposition: Decomposition,
    bound: usize,
    construction: Construction,
) -> Result<HigherBound> {
    if decomposition.len() > bound {
        return Err(HtrError::ConstructionFailed(format!(
            "{} terms exceed the bound {bound}",
            decomposition.len()
        )));
    }
    let residual = decomposition.relative_residual(t)?;
    if !(residual <= ACCEPT_REL_RESIDUAL) {
        return Err(HtrError::ConstructionFailed(format!(
            "relative residual {residual:e}"
        )));
    }
    Ok(HigherBound {
        decomposition,
        bound,
        construction,
        residual,
    })
}

/// `e_{i_1} ⊗ ⋯` for the bits of `index`, most significant first.
fn basis_tail(index: usize, len: usize) -> Vec<Vec2> {
    (0..len)
        .map(|t| basis((index >> (len - 1 - t)) & 1))
        .collect()
}

/// A decomposer for the order-s leading blocks: a decomposition and the
/// bound it guarantees.
pub type InnerDecomposer<'a> = dyn Fn(&Tensor) -> Result<(Decomposition, usize)> + 'a;

/// Decomposes each of the `2^(n−s)` leading blocks of order `s` with `inner`
/// (for `s = 1` every block is a vector, bound 1).
pub fn mode_group_bound(t: &Tensor, s: usize, inner: &InnerDecomposer<'_>) -> Result<HigherBound> {
    let n = t.order();
    if s == 0 || s >= n {
        return Err(HtrError::Precondition(format!(
            "block order {s} must lie in 1..{n}"
        )));
    }
    let tail = n - s;
    let mut dec = Decomposition::empty(n);
    let mut inner_bound = 1;
    for trailing in 0..1usize << tail {
        let tail_vecs = basis_tail(trailing, tail);
        if s == 1 {
            let data = t.leading_block_data(1, trailing);
            let mut vs: Vec<Vec2> = vec![[data[0], data[1]]];
            vs.extend(tail_vecs);
            dec.push_vectors(vs)?;
            continue;
        }
        let (part, b) = inner(&t.leading_block(s, trailing)?)?;
        if part.len() > b {
            return Err(HtrError::ConstructionFailed(format!(
                "inner decomposer returned {} terms for bound {b}",
                part.len()
            )));
        }
        inner_bound = inner_bound.max(b);
        dec.append(part.extend_modes(&tail_vecs)?)?;
    }
    check(t, dec, inner_bound << tail, Construction::ModeGroup)
}

/// Order-3 inner decomposer (bound 3 over either field).
pub fn rank222_inner(field: Field) -> impl Fn(&Tensor) -> Result<(Decomposition, usize)> {
    move |b: &Tensor| {
        Ok((
            decompose222(&SlicePair::from_tensor(b)?, field.join(b.field())),
            3,
        ))
    }
}

/// Order-4 inner decomposer: bound 5 over ℝ, 4 over ℂ.
pub fn order4_inner(field: Field, seed: u64) -> impl Fn(&Tensor) -> Result<(Decomposition, usize)> {
    move |b: &Tensor| {
        let q = QuadTensor::from_tensor(b)?;
        Ok(match field.join(b.field()) {
            Field::Real => (bound_real_seeded(&q, seed)?.decomposition, 5),
            Field::Complex => (bound_complex_seeded(&q, seed)?.decomposition, 4),
        })
    }
}

/// `(s(u d − v c) − t(u b − v a))²`, which equals `Δ(A; (s,t)ᵀ(u,v))` for
/// `A = [[a, b], [c, d]]`.
pub fn stabilizer_form(a: &Mat2, s: f64, t: f64, u: f64, v: f64) -> f64 {
    let (a11, a12, a21, a22) = (a[(0, 0)].re, a[(0, 1)].re, a[(1, 0)].re, a[(1, 1)].re);
    let x = s * (u * a22 - v * a21) - t * (u * a12 - v * a11);
    x * x
}

fn relative_delta(a: &Mat2, b: &Mat2) -> f64 {
    let scale = a.norm_sqr() * b.norm_sqr();
    if scale == 0.0 {
        return 0.0;
    }
    delta_raw(a, b).re / scale
}

/// A rank-one real `C` with `rank(A_j; B_j + C) ≤ 2` for every pair; pairs
/// with `A_j = O` are exempt. Deterministic (seed 0).
pub fn stabilizing_rank_one(pairs: &[SlicePair]) -> Result<Mat2> {
    stabilizing_rank_one_with(pairs, &mut crate::Rng::seed_from_u64(0))
}

pub fn stabilizing_rank_one_with(pairs: &[SlicePair], rng: &mut crate::Rng) -> Result<Mat2> {
    if pairs.iter().any(|p| !p.is_real()) {
        return Err(HtrError::FieldMismatch {
            expected: Field::Real,
            got: Field::Complex,
        });
    }
    // One global power-of-two scale keeps every Δ sign, conditions the
    // doubling, and leaves all products exact so that det C = 0 exactly.
    let largest = pairs.iter().map(SlicePair::norm).fold(0.0, f64::max);
    if largest == 0.0 {
        return Ok(Mat2::outer(&basis(0), &basis(0)));
    }
    let sigma = 2f64.powi(largest.log2().ceil() as i32);
    let inv = Scalar::new(1.0 / sigma, 0.0);
    let active: Vec<SlicePair> = pairs
        .iter()
        .filter(|p| !p.a.is_zero())
        .map(|p| p.scale(inv))
        .collect();

    let score = |[s, t, u, v]: [f64; 4]| {
        let c = (s * s + t * t) * (u * u + v * v);
        if c == 0.0 {
            return f64::NEG_INFINITY;
        }
        active
            .iter()
            .map(|p| stabilizer_form(&p.a, s, t, u, v) / (p.a.norm_sqr() * c))
            .fold(f64::INFINITY, f64::min)
    };
    let mut best = ([1.0, 0.0, 1.0, 0.0], score([1.0, 0.0, 1.0, 0.0]));
    for draw in 0..INTEGER_DRAWS + CONTINUOUS_DRAWS {
        if draw >= INTEGER_DRAWS && best.1 > STABLE_MARGIN {
            break;
        }
        let x: [f64; 4] = if draw < INTEGER_DRAWS {
            std::array::from_fn(|_| rng.random_range(-3i32..=3) as f64)
        } else {
            // dyadic grid: products of entries stay exact
            std::array::from_fn(|_| (rng.random_range(-1.0f64..1.0) * 1024.0).round() / 1024.0)
        };
        let sc = score(x);
        if sc > best.1 {
            best = (x, sc);
        }
    }
    let [s, t, u, v] = best.0;
    if !(best.1 > 0.0) {
        return Err(HtrError::ConstructionFailed(
            "no rank-one C0 with Δ(A_j; C0) > 0 for every nonzero A_j".into(),
        ));
    }
    let c0 = Mat2::outer(&vec2(s, t), &vec2(u, v));
    for doubling in 0..=MAX_DOUBLINGS {
        let gamma = (1u64 << doubling) as f64;
        let c = c0 * Scalar::new(gamma, 0.0);
        let worst = active
            .iter()
            .map(|p| relative_delta(&p.a, &(p.b + c)))
            .fold(f64::INFINITY, f64::min);
        if worst > STABLE_MARGIN {
            return Ok(c * Scalar::new(sigma, 0.0));
        }
    }
    Err(HtrError::ConstructionFailed(format!(
        "γ reached 2^{MAX_DOUBLINGS} without Δ(A_j; B_j + γC0) > 0 for every block"
    )))
}

/// Real decomposition into at most `2^(k−2) + 1` terms.
pub fn decompose_higher(t: &Tensor, field: Field) -> Result<HigherBound> {
    let k = t.order();
    if field.join(t.field()) == Field::Complex {
        return Err(HtrError::FieldMismatch {
            expected: Field::Real,
            got: Field::Complex,
        });
    }
    match k {
        2 => {
            let d = t.data();
            let m = Mat2::new(d[0], d[1], d[2], d[3]);
            let mut dec = Decomposition::empty(2);
            for (x, y) in matrix_terms(&m) {
                dec.push_vectors(vec![x, y])?;
            }
            check(t, dec, 2, Construction::Direct)
        }
        3 => check(
            t,
            decompose222(&SlicePair::from_tensor(t)?, Field::Real),
            3,
            Construction::Direct,
        ),
        _ => stabilized(t),
    }
}

fn stabilized(t: &Tensor) -> Result<HigherBound> {
    let k = t.order();
    let tail = k - 3;
    let blocks = (0..1usize << tail)
        .map(|j| SlicePair::from_tensor(&t.leading_block(3, j)?))
        .collect::<Result<Vec<_>>>()?;
    let c = stabilizing_rank_one(&blocks)?;
    let mut dec = Decomposition::empty(k);
    for (j, blk) in blocks.iter().enumerate() {
        let corrected = SlicePair::new(blk.a, blk.b + c);
        let part = decompose222(&corrected, Field::Real);
        if part.len() > 2 {
            return Err(HtrError::ConstructionFailed(format!(
                "corrected block {j} kept rank {}",
                part.len()
            )));
        }
        dec.append(part.extend_modes(&basis_tail(j, tail))?)?;
    }
    // Σ_j C ⊗ e2 ⊗ e_j = C ⊗ e2 ⊗ u ⊗ ⋯ ⊗ u with u = (1, 1)
    let (x, y) = c.rank_one_factors().expect("C is nonzero");
    let mut vs = vec![[-x[0], -x[1]], y, basis(1)];
    vs.extend(std::iter::repeat_n(vec2(1.0, 1.0), tail));
    dec.push_vectors(vs)?;
    check(t, dec, (1 << (k - 2)) + 1, Construction::Stabilized)
}

#[cfg(test)]
mod tests {
    use rand_distr::StandardNormal;

    use super::*;
    use crate::rank222::classify;

    fn gaussian(order: usize, field: Field, rng: &mut crate::Rng) -> Tensor {
        let len = 1 << order;
        let data = (0..len)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = if field == Field::Complex {
                    rng.sample(StandardNormal)
                } else {
                    0.0
                };
                Scalar::new(re, im)
            })
            .collect();
        Tensor::from_data(order, field, data).unwrap()
    }

    fn random_pair(rng: &mut crate::Rng) -> SlicePair {
        let t = gaussian(3, Field::Real, rng);
        SlicePair::from_tensor(&t).unwrap()
    }

    #[test]
    fn form_matches_delta() {
        let mut rng = crate::Rng::seed_from_u64(1);
        for _ in 0..100 {
            let a = random_pair(&mut rng).a;
            let [s, t, u, v]: [f64; 4] = std::array::from_fn(|_| rng.random_range(-2.0..2.0));
            let c0 = Mat2::outer(&vec2(s, t), &vec2(u, v));
            let d = delta_raw(&a, &c0).re;
            assert!((d - stabilizer_form(&a, s, t, u, v)).abs() < 1e-9 * (1.0 + d.abs()));
        }
        assert_eq!(stabilizer_form(&Mat2::identity(), 1.0, 0.0, 1.0, 0.0), 1.0);
    }

    #[test]
    fn identity_pair_is_stabilized() {
        let b = Mat2::rotation();
        let c = stabilizing_rank_one(&[SlicePair::new(Mat2::identity(), b)]).unwrap();
        assert_eq!(c.det().norm(), 0.0);
        assert!(classify(&SlicePair::new(Mat2::identity(), b + c), Field::Real).rank <= 2);
    }

    #[test]
    fn zero_first_slice_is_exempt() {
        let pair = SlicePair::new(Mat2::zero(), Mat2::rotation());
        let c = stabilizing_rank_one(&[pair]).unwrap();
        assert!(classify(&SlicePair::new(pair.a, pair.b + c), Field::Real).rank <= 2);
    }

    #[test]
    fn random_pairs_are_stabilized() {
        let mut rng = crate::Rng::seed_from_u64(2);
        for _ in 0..50 {
            let pairs: Vec<SlicePair> = (0..8).map(|_| random_pair(&mut rng)).collect();
            let c = stabilizing_rank_one(&pairs).unwrap();
            assert_eq!(c.det().norm(), 0.0);
            for p in &pairs {
                assert!(classify(&SlicePair::new(p.a, p.b + c), Field::Real).rank <= 2);
            }
        }
    }

    #[test]
    fn complex_pairs_are_rejected() {
        let p = SlicePair::new(Mat2::identity().scale(Scalar::new(0.0, 1.0)), Mat2::zero());
        assert!(stabilizing_rank_one(&[p]).is_err());
    }

    #[test]
    fn stabilized_bounds() {
        let mut rng = crate::Rng::seed_from_u64(3);
        for (k, cap) in [(4, 5), (5, 9), (6, 17)] {
            for _ in 0..20 {
                let t = gaussian(k, Field::Real, &mut rng);
                let h = decompose_higher(&t, Field::Real).unwrap();
                assert_eq!(h.bound, cap);
                assert!(h.decomposition.len() <= cap);
                assert!(h.residual <= 1e-8);
                assert_eq!(h.construction, Construction::Stabilized);
            }
        }
    }

    #[test]
    fn low_orders_delegate() {
        let mut rng = crate::Rng::seed_from_u64(4);
        let t2 = gaussian(2, Field::Real, &mut rng);
        let h2 = decompose_higher(&t2, Field::Real).unwrap();
        assert!(h2.decomposition.len() <= 2 && h2.construction == Construction::Direct);
        let t3 = gaussian(3, Field::Real, &mut rng);
        assert!(
            decompose_higher(&t3, Field::Real)
                .unwrap()
                .decomposition
                .len()
                <= 3
        );
        let c = gaussian(5, Field::Complex, &mut rng);
        assert!(decompose_higher(&c, Field::Real).is_err());
    }

    #[test]
    fn mode_grouping() {
        let mut rng = crate::Rng::seed_from_u64(5);
        let t = gaussian(5, Field::Real, &mut rng);
        let h = mode_group_bound(&t, 1, &rank222_inner(Field::Real)).unwrap();
        assert_eq!(h.bound, 16);
        assert!(h.residual <= 1e-12);
        let t4 = gaussian(4, Field::Real, &mut rng);
        let h = mode_group_bound(&t4, 3, &rank222_inner(Field::Real)).unwrap();
        assert_eq!(h.bound, 6);
        assert!(h.decomposition.len() <= 6 && h.residual < 1e-8);
        let c = gaussian(5, Field::Complex, &mut rng);
        let h = mode_group_bound(&c, 4, &order4_inner(Field::Complex, 0)).unwrap();
        assert_eq!(h.bound, 8);
        assert!(h.decomposition.len() <= 8 && h.residual < 1e-8);
        assert!(mode_group_bound(&t4, 4, &rank222_inner(Field::Real)).is_err());
        assert!(mode_group_bound(&t4, 0, &rank222_inner(Field::Real)).is_err());
    }
}
