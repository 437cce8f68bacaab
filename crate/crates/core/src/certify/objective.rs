use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::error::{HtrError, Result};
use crate::field::Field;
use crate::mat2::Mat2;
use crate::tensor::QuadTensor;

/// `τ_M = 1e−10 · ‖M‖_F⁴`: below it `det M` counts as zero.
pub const MOMENT_REL_TOL: f64 = 1e-10;
/// The unfolding counts as singular when `σ_min ≤ 1e−12 · σ_max`.
pub const UNFOLDING_REL_TOL: f64 = 1e-12;

/// The 16 reals `c_ik`, `d_jk` (i, j ∈ {1,2}, k ∈ {1..4}), stored as
/// `[c_1k; c_2k; d_1k; d_2k]` with k running fastest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateParams {
    pub values: [f64; 16],
}

impl CertificateParams {
    pub fn new(values: [f64; 16]) -> Self {
        CertificateParams { values }
    }

    /// From the per-term vectors `c_k = (c_1k, c_2k)` and `d_k = (d_1k, d_2k)`.
    pub fn from_vectors(c: [[f64; 2]; 4], d: [[f64; 2]; 4]) -> Self {
        let mut values = [0.0; 16];
        for k in 0..4 {
            values[k] = c[k][0];
            values[4 + k] = c[k][1];
            values[8 + k] = d[k][0];
            values[12 + k] = d[k][1];
        }
        CertificateParams { values }
    }

    /// The parameters whose moment matrix is the identity.
    pub fn identity() -> Self {
        Self::from_vectors(
            [[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]],
            [[1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [0.0, 1.0]],
        )
    }

    /// `c_ik`, 0-based.
    pub fn c(&self, i: usize, k: usize) -> f64 {
        self.values[4 * i + k]
    }

    /// `d_jk`, 0-based.
    pub fn d(&self, j: usize, k: usize) -> f64 {
        self.values[8 + 4 * j + k]
    }

    pub fn c_vector(&self, k: usize) -> [f64; 2] {
        [self.c(0, k), self.c(1, k)]
    }

    pub fn d_vector(&self, k: usize) -> [f64; 2] {
        [self.d(0, k), self.d(1, k)]
    }
}

/// Row k is `(c_1k d_1k, c_1k d_2k, c_2k d_1k, c_2k d_2k)`.
pub fn moment_matrix(p: &CertificateParams) -> Matrix4<f64> {
    moment_from_slice(&p.values)
}

fn moment_from_slice(v: &[f64; 16]) -> Matrix4<f64> {
    let mut m = Matrix4::zeros();
    for k in 0..4 {
        let (c1, c2, d1, d2) = (v[k], v[4 + k], v[8 + k], v[12 + k]);
        m[(k, 0)] = c1 * d1;
        m[(k, 1)] = c1 * d2;
        m[(k, 2)] = c2 * d1;
        m[(k, 3)] = c2 * d2;
    }
    m
}

pub fn moment_tol(m: &Matrix4<f64>) -> f64 {
    MOMENT_REL_TOL * m.norm_squared().powi(2)
}

/// `N = B M⁻¹` together with the rank-one defects `det A_k` of its columns.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorMatrix {
    pub n: Matrix4<f64>,
    pub defects: [f64; 4],
}

impl FactorMatrix {
    /// `A_k`, the matrix whose column-stacked vector is column k of N.
    pub fn factor(&self, k: usize) -> Mat2 {
        let c = self.n.column(k);
        Mat2::real(c[0], c[2], c[1], c[3])
    }
}

fn defects(n: &Matrix4<f64>) -> [f64; 4] {
    [0, 1, 2, 3].map(|k| n[(0, k)] * n[(3, k)] - n[(1, k)] * n[(2, k)])
}

fn real_unfolding(t: &QuadTensor) -> Result<Matrix4<f64>> {
    t.real_unfolding().ok_or(HtrError::FieldMismatch {
        expected: Field::Real,
        got: Field::Complex,
    })
}

/// `|det M| / ‖M‖_F⁴`, the scale-free distance from the singular set.
pub fn moment_conditioning(p: &CertificateParams) -> f64 {
    let m = moment_matrix(p);
    let s = m.norm_squared();
    if s == 0.0 {
        0.0
    } else {
        m.determinant().abs() / (s * s)
    }
}

fn checked_inverse(m: &Matrix4<f64>) -> Result<Matrix4<f64>> {
    inverse_above(m, MOMENT_REL_TOL)
}

fn inverse_above(m: &Matrix4<f64>, rel: f64) -> Result<Matrix4<f64>> {
    let det = m.determinant();
    let tol = rel * m.norm_squared().powi(2);
    if !(det.abs() > tol) {
        return Err(HtrError::SingularMoment {
            det: det.abs(),
            tol,
        });
    }
    m.try_inverse().ok_or(HtrError::SingularMoment {
        det: det.abs(),
        tol,
    })
}

pub fn recovered_factors(t: &QuadTensor, p: &CertificateParams) -> Result<FactorMatrix> {
    let b = real_unfolding(t)?;
    let n = b * checked_inverse(&moment_matrix(p))?;
    Ok(FactorMatrix {
        defects: defects(&n),
        n,
    })
}

/// `Σ_k det(A_k)² / (Σ n_ij²)²`.
pub fn objective_f(t: &QuadTensor, p: &CertificateParams) -> Result<f64> {
    let f = recovered_factors(t, p)?;
    Ok(ratio(&f.n, &f.defects))
}

fn ratio(n: &Matrix4<f64>, defects: &[f64; 4]) -> f64 {
    let s = n.norm_squared();
    if s == 0.0 {
        return 0.0;
    }
    defects.iter().map(|d| d * d).sum::<f64>() / (s * s)
}

/// Both evaluations of condition (E) at one parameter point.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionE {
    pub det_m: f64,
    /// `det(M)² · det(A_k)`; absent when M is singular.
    pub defect_form: Option<[f64; 4]>,
    /// `|M_k←b11| |M_k←b22| − |M_k←b21| |M_k←b12|`, where `M_k←b` replaces
    /// row k of M by `b_ab = (t_ab11, t_ab12, t_ab21, t_ab22)`.
    pub raw: [f64; 4],
    pub holds: bool,
}

pub fn condition_e_residuals(t: &QuadTensor, p: &CertificateParams) -> Result<ConditionE> {
    let b = real_unfolding(t)?;
    let m = moment_matrix(p);
    let det_m = m.determinant();
    let replaced = |k: usize, row: usize| {
        let mut r = m;
        for c in 0..4 {
            r[(k, c)] = b[(row, c)];
        }
        r.determinant()
    };
    // rows of B in vec order: (1,1), (2,1), (1,2), (2,2)
    let raw =
        [0, 1, 2, 3].map(|k| replaced(k, 0) * replaced(k, 3) - replaced(k, 1) * replaced(k, 2));
    let defect_form = checked_inverse(&m).ok().map(|inv| {
        let d = defects(&(b * inv));
        d.map(|x| det_m * det_m * x)
    });
    let scale = (m.norm().powi(3) * b.norm()).powi(2);
    let holds = det_m.abs() > moment_tol(&m) && raw.iter().all(|r| r.abs() <= 1e-9 * scale);
    Ok(ConditionE {
        det_m,
        defect_form,
        raw,
        holds,
    })
}

/// The objective as a function of the 16 parameters for one fixed tensor.
#[derive(Debug, Clone)]
pub struct Objective {
    b: Matrix4<f64>,
}

impl Objective {
    /// Requires a real tensor with a nonsingular 4×4 unfolding.
    pub fn new(t: &QuadTensor) -> Result<Self> {
        let b = real_unfolding(t)?;
        let sv = b.singular_values();
        let (hi, lo) = (sv.max(), sv.min());
        if !(lo > UNFOLDING_REL_TOL * hi) {
            return Err(HtrError::SingularUnfolding(b.determinant().abs()));
        }
        Ok(Objective { b })
    }

    /// No nonsingularity check; for exploring degenerate inputs.
    pub fn from_unfolding(b: Matrix4<f64>) -> Self {
        Objective { b }
    }

    pub fn unfolding(&self) -> &Matrix4<f64> {
        &self.b
    }

    /// f at `v`, or +∞ when `|det M| ≤ τ_M`.
    pub fn eval(&self, v: &[f64; 16]) -> f64 {
        self.eval_above(v, MOMENT_REL_TOL)
    }

    /// f at `v`, or +∞ when `|det M| ≤ rel · ‖M‖_F⁴`.
    pub fn eval_above(&self, v: &[f64; 16], rel: f64) -> f64 {
        let m = moment_from_slice(v);
        let Ok(inv) = inverse_above(&m, rel) else {
            return f64::INFINITY;
        };
        let n = self.b * inv;
        ratio(&n, &defects(&n))
    }

    /// `Σ det(A_k)² / ‖B‖_F⁴` after scaling every `c_k`, `d_k` to unit
    /// length; +∞ when `|det M| ≤ τ_M`.
    pub fn defect_energy(&self, v: &[f64; 16]) -> f64 {
        let u = unit_params(v);
        let m = moment_from_slice(&u);
        let Ok(inv) = checked_inverse(&m) else {
            return f64::INFINITY;
        };
        let d = defects(&(self.b * inv));
        d.iter().map(|x| x * x).sum::<f64>() / self.b.norm_squared().powi(2)
    }

    /// f and its gradient; `None` when `|det M| ≤ τ_M`.
    pub fn eval_grad(&self, v: &[f64; 16]) -> Option<(f64, [f64; 16])> {
        self.eval_grad_above(v, MOMENT_REL_TOL)
    }

    pub fn eval_grad_above(&self, v: &[f64; 16], rel: f64) -> Option<(f64, [f64; 16])> {
        let m = moment_from_slice(v);
        let inv = inverse_above(&m, rel).ok()?;
        let n = self.b * inv;
        let d = defects(&n);
        let s = n.norm_squared();
        if s == 0.0 {
            return Some((0.0, [0.0; 16]));
        }
        let p: f64 = d.iter().map(|x| x * x).sum();
        let f = p / (s * s);
        // ∂f/∂N
        let mut g = Matrix4::zeros();
        for k in 0..4 {
            let dd = [n[(3, k)], -n[(2, k)], -n[(1, k)], n[(0, k)]];
            for i in 0..4 {
                g[(i, k)] = 2.0 * d[k] * dd[i] / (s * s) - 4.0 * p * n[(i, k)] / (s * s * s);
            }
        }
        Some((f, pull_back(v, &n, &g, &inv)))
    }

    /// [`Self::defect_energy`] and its gradient in the unnormalized
    /// parameters.
    pub fn defect_energy_grad(&self, v: &[f64; 16]) -> Option<(f64, [f64; 16])> {
        let u = unit_params(v);
        let inv = checked_inverse(&moment_from_slice(&u)).ok()?;
        let n = self.b * inv;
        let d = defects(&n);
        let scale = self.b.norm_squared().powi(2);
        let e = d.iter().map(|x| x * x).sum::<f64>() / scale;
        let mut g = Matrix4::zeros();
        for k in 0..4 {
            let dd = [n[(3, k)], -n[(2, k)], -n[(1, k)], n[(0, k)]];
            for i in 0..4 {
                g[(i, k)] = 2.0 * d[k] * dd[i] / scale;
            }
        }
        let gu = pull_back(&u, &n, &g, &inv);
        // u = v / r per vector ⇒ ∂u/∂v = (I − u uᵀ) / r
        let mut grad = [0.0; 16];
        for base in [0, 8] {
            for k in 0..4 {
                let (i, j) = (base + k, base + 4 + k);
                let r = v[i].hypot(v[j]);
                if r > 0.0 {
                    let radial = gu[i] * u[i] + gu[j] * u[j];
                    grad[i] = (gu[i] - radial * u[i]) / r;
                    grad[j] = (gu[j] - radial * u[j]) / r;
                }
            }
        }
        Some((e, grad))
    }
}

/// Gradient in the parameters from `G = ∂/∂N`, using
/// `N = B M⁻¹ ⇒ ∂/∂M = −Nᵀ G M⁻ᵀ`.
fn pull_back(v: &[f64; 16], n: &Matrix4<f64>, g: &Matrix4<f64>, inv: &Matrix4<f64>) -> [f64; 16] {
    let h = -(n.transpose() * g * inv.transpose());
    let mut grad = [0.0; 16];
    for k in 0..4 {
        let (c1, c2, d1, d2) = (v[k], v[4 + k], v[8 + k], v[12 + k]);
        grad[k] = h[(k, 0)] * d1 + h[(k, 1)] * d2;
        grad[4 + k] = h[(k, 2)] * d1 + h[(k, 3)] * d2;
        grad[8 + k] = h[(k, 0)] * c1 + h[(k, 2)] * c2;
        grad[12 + k] = h[(k, 1)] * c1 + h[(k, 3)] * c2;
    }
    grad
}

/// Every `c_k` and `d_k` rescaled to unit length (zero vectors kept).
pub fn unit_params(v: &[f64; 16]) -> [f64; 16] {
    let mut u = *v;
    for base in [0, 8] {
        for k in 0..4 {
            let (i, j) = (base + k, base + 4 + k);
            let r = v[i].hypot(v[j]);
            if r > 0.0 {
                u[i] /= r;
                u[j] /= r;
            }
        }
    }
    u
}

/// The tensor with unfolding `b` (columns `vec T11 … vec T22`).
pub fn quad_from_unfolding(b: &Matrix4<f64>) -> QuadTensor {
    let blk = |c: usize| Mat2::real(b[(0, c)], b[(2, c)], b[(1, c)], b[(3, c)]);
    QuadTensor::new(blk(0), blk(1), blk(2), blk(3))
}

/// A real rank-4 tensor with known certificate: Gaussian rank-one `A_k`
/// and uniform(−1, 1) parameters with `|det M| > min_det`, redrawn until
/// the unfolding is nonsingular.
pub fn synthetic_rank4(rng: &mut crate::Rng, min_det: f64) -> (QuadTensor, CertificateParams) {
    use rand::Rng as _;
    use rand_distr::StandardNormal;
    loop {
        let p = CertificateParams::new(std::array::from_fn(|_| rng.random_range(-1.0..1.0)));
        let m = moment_matrix(&p);
        if m.determinant().abs() <= min_det {
            continue;
        }
        let mut n = Matrix4::zeros();
        for k in 0..4 {
            let g: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
            // vec(u vᵀ) = (u1v1, u2v1, u1v2, u2v2)
            let col = [g[0] * g[2], g[1] * g[2], g[0] * g[3], g[1] * g[3]];
            for (i, x) in col.into_iter().enumerate() {
                n[(i, k)] = x;
            }
        }
        let q = quad_from_unfolding(&(n * m));
        if Objective::new(&q).is_ok() {
            return (q, p);
        }
    }
}
