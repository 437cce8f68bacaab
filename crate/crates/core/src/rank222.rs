//! Exact rank of 2×2×2 tensors and decompositions of that length.
//!
//! A tensor `(A;B)` has rank ≤ 2 iff one of the following holds:
//! (1) A and B are linearly dependent; (2) the column pairs `(a1;b1)` and
//! `(a2;b2)` are dependent; (3) Δ = Θ = 0; (4) Δ > 0 over ℝ, Δ ≠ 0 over ℂ.
//! Otherwise the rank is 3.

use nalgebra::SMatrix;
use serde::Serialize;

use crate::action::GLAction;
use crate::decomposition::{Decomposition, RankOneTerm};
use crate::error::{HtrError, Result};
use crate::field::{re, Field, Scalar, ONE, ZERO};
use crate::mat2::{basis, vec2, vec2_norm_sqr, Mat2, Vec2};
use crate::pencil::{self, DeltaValue};
use crate::tensor::{SlicePair, Tensor};

/// An unfolding has matrix rank ≤ 1 when `σ2 ≤ 1e−9 · σ1`.
pub const RANK_ONE_REL_TOL: f64 = 1e-9;

/// A 2-term split reconstructing within this relative residual overrides a
/// Δ that is zero only within tolerance.
pub const EXACT_SPLIT_REL_TOL: f64 = 1e-10;

/// Pencil directions tried when a nonsingular element `xA + yB` is needed.
/// `det(xA + yB)` is a binary quadratic form, so vanishing on all five
/// forces it to vanish identically.
pub const PENCIL_SCAN: [(f64, f64); 5] =
    [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, -1.0), (1.0, 2.0)];

#[derive(Debug, Clone, Serialize)]
pub struct Rank222Report {
    pub rank: u8,
    pub field: Field,
    /// Conditions (1)–(4) above, in order.
    pub conditions: [bool; 4],
    pub delta: DeltaValue,
    pub theta: Scalar,
    pub theta_tol: f64,
    /// dim⟨vec A, vec B⟩
    pub span_slices: usize,
    /// dim⟨(a1;b1), (a2;b2)⟩
    pub span_columns: usize,
    /// Matrix ranks of the mode-1, mode-2 and mode-3 unfoldings.
    pub unfolding_ranks: [usize; 3],
}

/// The 2×4 unfolding with mode `mode` on the rows.
fn unfolding(t: &SlicePair, mode: usize) -> SMatrix<Scalar, 2, 4> {
    let mut m = SMatrix::<Scalar, 2, 4>::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                let idx = [i, j, k];
                let row = idx[mode];
                let rest: Vec<usize> = (0..3).filter(|&t| t != mode).map(|t| idx[t]).collect();
                m[(row, 2 * rest[0] + rest[1])] = t.get(i, j, k);
            }
        }
    }
    m
}

fn singular_ratio(m: &SMatrix<Scalar, 2, 4>) -> (usize, f64) {
    let sv = m.singular_values();
    let (s1, s2) = (sv[0].max(sv[1]), sv[0].min(sv[1]));
    if s1 == 0.0 {
        return (0, 0.0);
    }
    let ratio = s2 / s1;
    (if ratio <= RANK_ONE_REL_TOL { 1 } else { 2 }, ratio)
}

fn effective_field(t: &SlicePair, field: Field) -> Field {
    if t.is_real() {
        field
    } else {
        Field::Complex
    }
}

pub fn classify(t: &SlicePair, field: Field) -> Rank222Report {
    let field = effective_field(t, field);
    let unfolding_ranks = [0, 1, 2].map(|m| singular_ratio(&unfolding(t, m)).0);
    let delta = pencil::delta(&t.a, &t.b);
    let theta = pencil::theta(&t.a, &t.b);
    let theta_tol = pencil::theta_tol(&t.a, &t.b);
    let span_slices = unfolding_ranks[2];
    let span_columns = unfolding_ranks[1];
    let theta_zero = theta.norm() <= theta_tol;
    let conditions = [
        span_slices < 2,
        span_columns < 2,
        delta.is_zero() && theta_zero,
        match field {
            Field::Real => delta.is_positive(),
            Field::Complex => !delta.is_zero(),
        },
    ];
    let nilpotent_type = span_slices == 2
        && span_columns == 2
        && delta.is_zero()
        && !theta_zero
        && !exact_split(t, field == Field::Real);
    let rank = if t.is_zero() {
        0
    } else if unfolding_ranks.iter().all(|&r| r <= 1) {
        1
    } else if nilpotent_type || (field == Field::Real && delta.is_negative()) {
        3
    } else {
        2
    };
    Rank222Report {
        rank,
        field,
        conditions,
        delta,
        theta,
        theta_tol,
        span_slices,
        span_columns,
        unfolding_ranks,
    }
}

pub fn classify_tensor(t: &Tensor, field: Field) -> Result<Rank222Report> {
    Ok(classify(&SlicePair::from_tensor(t)?, field.join(t.field())))
}

/// Decomposition into exactly `classify(t, field).rank` terms.
pub fn decompose222(t: &SlicePair, field: Field) -> Decomposition {
    let report = classify(t, field);
    decompose_with_report(t, &report)
}

pub(crate) fn decompose_with_report(t: &SlicePair, report: &Rank222Report) -> Decomposition {
    match report.rank {
        0 => Decomposition::empty(3),
        1 => rank_one_decomposition(t),
        2 => decompose_rank2(t, report),
        _ => {
            let d = decompose_rank3(t).ok();
            match d {
                Some(d) if residual(&d, t) <= EXACT_SPLIT_REL_TOL * t.norm() => d,
                d => d
                    .into_iter()
                    .chain(peel_rank3(t, report.field))
                    .chain([decompose_rank2(t, report)])
                    .min_by(|a, b| residual(a, t).total_cmp(&residual(b, t)))
                    .expect("nonempty"),
            }
        }
    }
}

/// Rank-3 fallback for tensors that are rank 3 only within tolerance, where
/// the normal form does not reconstruct: remove a fixed rank-one term so the
/// remainder has a well separated pencil, then split the remainder in two.
fn peel_rank3(t: &SlicePair, field: Field) -> Option<Decomposition> {
    const DIRS: [(f64, f64); 4] = [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, -1.0)];
    let scale = t.norm().cbrt();
    let tensor = t.to_tensor_inferred();
    let mut best: Option<(f64, Decomposition)> = None;
    for a in DIRS {
        for b in DIRS {
            for c in DIRS {
                let vs = [a, b, c].map(|(x, y)| vec2(x * scale, y * scale));
                let Ok(term) = RankOneTerm::new(vs.to_vec()) else {
                    continue;
                };
                let Ok(rest) = tensor
                    .sub(&term.to_tensor())
                    .and_then(|r| SlicePair::from_tensor(&r))
                else {
                    continue;
                };
                let Some(mut d) = eigen_split(&rest, field == Field::Real) else {
                    continue;
                };
                if d.push(term).is_err() {
                    continue;
                }
                let r = residual(&d, t);
                if best.as_ref().is_none_or(|(b, _)| r < *b) {
                    best = Some((r, d));
                }
            }
        }
    }
    best.map(|(_, d)| d)
}

fn residual(d: &Decomposition, t: &SlicePair) -> f64 {
    d.residual(&t.to_tensor_inferred()).unwrap_or(f64::INFINITY)
}

fn single(vectors: Vec<Vec2>, order: usize) -> Decomposition {
    let mut d = Decomposition::empty(order);
    d.push_vectors(vectors).expect("orders agree");
    d
}

fn rank_one_decomposition(t: &SlicePair) -> Decomposition {
    let mut best = (0, 0, 0);
    let mut top = -1.0;
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                let v = t.get(i, j, k).norm();
                if v > top {
                    top = v;
                    best = (i, j, k);
                }
            }
        }
    }
    let (i, j, k) = best;
    let p = t.get(i, j, k);
    let u = [t.get(0, j, k), t.get(1, j, k)];
    let v = [t.get(i, 0, k) / p, t.get(i, 1, k) / p];
    let w = [t.get(i, j, 0) / p, t.get(i, j, 1) / p];
    single(vec![u, v, w], 3)
}

/// Dominant unit vector `w` of the mode-`mode` unfolding and the contraction
/// `M = ⟨w, T⟩` over that mode, so that `T ≈ w ⊗_mode M`.
pub(crate) fn mode_factor(t: &SlicePair, mode: usize) -> (Vec2, Mat2) {
    let svd = unfolding(t, mode).svd(true, false);
    let u = svd.u.expect("requested");
    let top = if svd.singular_values[0] >= svd.singular_values[1] {
        0
    } else {
        1
    };
    let w: Vec2 = [u[(0, top)], u[(1, top)]];
    let mut m = Mat2::zero();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                let idx = [i, j, k];
                let rest: Vec<usize> = (0..3).filter(|&s| s != mode).map(|s| idx[s]).collect();
                m[(rest[0], rest[1])] += w[idx[mode]].conj() * t.get(i, j, k);
            }
        }
    }
    (w, m)
}

/// `T ≈ w ⊗_mode M`, with M split into its two rank-one parts.
fn unfolding_split(t: &SlicePair, mode: usize) -> Decomposition {
    let (w, m) = mode_factor(t, mode);
    let mut d = Decomposition::empty(3);
    for (x, y) in matrix_terms(&m) {
        let mut vs = vec![x, y];
        vs.insert(mode, w);
        d.push_vectors(vs).expect("order 3");
    }
    d
}

/// Rank-one summands of a 2×2 matrix: none, one, or two.
pub(crate) fn matrix_terms(m: &Mat2) -> Vec<(Vec2, Vec2)> {
    let mut out = Vec::new();
    let Some((u, v)) = m.rank_one_factors() else {
        return out;
    };
    let (s1, s2) = m.singular_values();
    out.push((u, v));
    if s2 > RANK_ONE_REL_TOL * s1 {
        let rest = *m - Mat2::outer(&u, &v);
        if let Some((x, y)) = rest.rank_one_factors() {
            out.push((x, y));
        }
    }
    out
}

/// Best nonsingular pencil element: `(x, y, xA + yB)`.
pub(crate) fn nonsingular_element(t: &SlicePair) -> Option<(f64, f64, Mat2)> {
    let mut best: Option<(f64, f64, Mat2)> = None;
    let mut best_ratio = 0.0;
    for (x, y) in PENCIL_SCAN {
        let p = t.a * x + t.b * y;
        let n = p.norm_sqr();
        if n == 0.0 {
            continue;
        }
        let ratio = p.det().norm() / n;
        if ratio > best_ratio {
            best_ratio = ratio;
            best = Some((x, y, p));
        }
    }
    best.filter(|_| best_ratio > pencil::DET_REL_TOL)
}

/// Through the eigenstructure of `P⁻¹Q` for a nonsingular pencil element P.
fn eigen_split(t: &SlicePair, real: bool) -> Option<Decomposition> {
    let (x, y, p) = nonsingular_element(t)?;
    let q = t.a * (-y) + t.b * x;
    let g = Mat2::real(x, y, -y, x);
    let ginv = g.inverse()?;
    let k = p.inverse()? * q;
    let half_tr = k.trace() * 0.5;
    let disc = half_tr * half_tr - k.det();
    let sq = if real {
        re(disc.re.max(0.0).sqrt())
    } else {
        disc.sqrt()
    };
    let lambdas = [half_tr + sq, half_tr - sq];
    let vs = lambdas.map(|l| eigenvector(&k, l));
    let v = Mat2::from_cols(vs[0], vs[1]);
    let vinv = v.inverse()?;
    let mut d = Decomposition::empty(3);
    for r in 0..2 {
        let w = ginv.mul_vec(&[ONE, lambdas[r]]);
        d.push(RankOneTerm::new(vec![p.mul_vec(&vs[r]), vinv.row(r), w]).ok()?)
            .ok()?;
    }
    Some(d)
}

/// An eigenvector of `k` for eigenvalue `l`, from the better-conditioned row
/// of `k − l·E`.
pub(crate) fn eigenvector(k: &Mat2, l: Scalar) -> Vec2 {
    let c1 = [k[(0, 1)], l - k[(0, 0)]];
    let c2 = [l - k[(1, 1)], k[(1, 0)]];
    let v = if vec2_norm_sqr(&c1) >= vec2_norm_sqr(&c2) {
        c1
    } else {
        c2
    };
    let n = vec2_norm_sqr(&v).sqrt();
    if n == 0.0 {
        return basis(0);
    }
    [v[0] / n, v[1] / n]
}

/// Near the nilpotent orbit a small Δ of the right sign may still come from
/// an honest 2-term tensor; an explicit split settles it.
fn exact_split(t: &SlicePair, real: bool) -> bool {
    eigen_split(t, real).is_some_and(|d| residual(&d, t) <= EXACT_SPLIT_REL_TOL * t.norm())
}

fn decompose_rank2(t: &SlicePair, report: &Rank222Report) -> Decomposition {
    let norm = t.norm();
    let mut candidates = Vec::new();
    let mut modes: Vec<usize> = (0..3).collect();
    let ratios = [0, 1, 2].map(|m| singular_ratio(&unfolding(t, m)).1);
    modes.sort_by(|&a, &b| ratios[a].total_cmp(&ratios[b]));
    for &m in &modes {
        if report.unfolding_ranks[m] <= 1 {
            candidates.push(unfolding_split(t, m));
        }
    }
    if let Some(d) = candidates.first() {
        if residual(d, t) <= 1e-12 * norm {
            return d.clone();
        }
    }
    if !report.delta.is_zero() || !report.conditions[2] {
        if let Some(d) = eigen_split(t, report.field == Field::Real) {
            if residual(&d, t) <= 1e-12 * norm {
                return d;
            }
            candidates.push(d);
        }
    }
    if candidates.is_empty() {
        candidates.push(unfolding_split(t, modes[0]));
        if let Some(d) = eigen_split(t, report.field == Field::Real) {
            candidates.push(d);
        }
    }
    candidates
        .into_iter()
        .min_by(|a, b| residual(a, t).total_cmp(&residual(b, t)))
        .expect("at least one candidate")
}

/// Which normal form a rank-3 tensor was brought to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CanonicalForm {
    /// `(E;S)`, S = [[0,1],[0,0]]
    Nilpotent,
    /// `(E;R)`, R = [[0,1],[−1,0]]: real tensors with Δ < 0 only
    Rotation,
}

impl CanonicalForm {
    pub fn slices(self) -> SlicePair {
        match self {
            CanonicalForm::Nilpotent => SlicePair::new(Mat2::identity(), Mat2::nilpotent()),
            CanonicalForm::Rotation => SlicePair::new(Mat2::identity(), Mat2::rotation()),
        }
    }

    /// A fixed 3-term decomposition of the normal form.
    pub fn decomposition(self) -> Decomposition {
        let (e1, e2) = (basis(0), basis(1));
        let terms = match self {
            CanonicalForm::Nilpotent => vec![vec![e1, e1, e1], vec![e2, e2, e1], vec![e1, e2, e2]],
            CanonicalForm::Rotation => vec![
                vec![e1, e1, vec2(2.0, 0.0)],
                vec![vec2(-1.0, -1.0), vec2(1.0, -1.0), vec2(0.5, 0.5)],
                vec![vec2(-1.0, 1.0), vec2(1.0, 1.0), vec2(0.5, -0.5)],
            ],
        };
        let terms = terms
            .into_iter()
            .map(|v| RankOneTerm::new(v).expect("nonzero"))
            .collect();
        Decomposition::from_terms(3, terms).expect("order 3")
    }
}

#[derive(Debug, Clone)]
pub struct Canonical3 {
    pub g: GLAction,
    pub form: CanonicalForm,
    pub canonical: SlicePair,
    /// ‖g·T − canonical‖_F
    pub residual: f64,
}

/// Bring a rank-3 tensor to `(E;S)`, or to `(E;R)` when it is real with Δ < 0
/// (no real action can change the sign of Δ).
pub fn canonicalize_rank3(t: &SlicePair) -> Result<Canonical3> {
    let field = if t.is_real() {
        Field::Real
    } else {
        Field::Complex
    };
    let report = classify(t, field);
    if report.rank != 3 {
        return Err(HtrError::NotRank3(report.rank));
    }
    let (x, y, p) = nonsingular_element(t).ok_or_else(|| {
        HtrError::ConstructionFailed("rank-3 pencil with no invertible element".into())
    })?;
    let q = t.a * (-y) + t.b * x;
    let g3 = Mat2::real(x, y, -y, x);
    let pinv = p.inverse().expect("nonsingular element");
    let k = pinv * q;
    let half_tr = k.trace() * 0.5;
    let (form, v, r3) = if report.delta.is_negative() {
        // K has eigenvalues a ± ib; V = [Re z, Im z] for the eigenvector z of a + ib
        let disc = half_tr * half_tr - k.det();
        let b = (-disc.re).max(0.0).sqrt();
        let a = half_tr.re;
        let z = eigenvector(&k, Scalar::new(a, b));
        let v = Mat2::real(z[0].re, z[0].im, z[1].re, z[1].im);
        (
            CanonicalForm::Rotation,
            v,
            Mat2::real(1.0, 0.0, -a / b, 1.0 / b),
        )
    } else {
        let n = k - Mat2::identity() * half_tr;
        let v2 = if vec2_norm_sqr(&n.col(0)) >= vec2_norm_sqr(&n.col(1)) {
            basis(0)
        } else {
            basis(1)
        };
        let v1 = n.mul_vec(&v2);
        let v = Mat2::from_cols(v1, v2);
        let r3 = Mat2::new(ONE, ZERO, -half_tr, ONE);
        (CanonicalForm::Nilpotent, v, r3)
    };
    let vinv = v
        .inverse()
        .ok_or_else(|| HtrError::ConstructionFailed("degenerate similarity".into()))?;
    let g = GLAction::new(vec![vinv * pinv, v.transpose(), r3 * g3])?;
    let canonical = form.slices();
    let moved = SlicePair::from_tensor(&g.apply(&t.to_tensor_inferred())?)?;
    let residual = (moved - canonical).norm();
    Ok(Canonical3 {
        g,
        form,
        canonical,
        residual,
    })
}

fn decompose_rank3(t: &SlicePair) -> Result<Decomposition> {
    let c = canonicalize_rank3(t)?;
    Ok(c.form.decomposition().act(&c.g.inverse()))
}
