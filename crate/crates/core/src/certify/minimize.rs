//! Multistart local minimization of the certificate objective.

use std::str::FromStr;

use rand::{Rng as _, SeedableRng};
use rayon::prelude::*;
use serde::Serialize;

use super::objective::{
    moment_conditioning, moment_matrix, moment_tol, unit_params, CertificateParams, Objective,
    MOMENT_REL_TOL,
};
use crate::error::{HtrError, Result};
use crate::tensor::QuadTensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Derivative-free simplex descent.
    NelderMead,
    /// Quasi-Newton descent with the analytic gradient.
    Bfgs,
}

impl FromStr for Method {
    type Err = HtrError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nelder-mead" | "nm" => Ok(Method::NelderMead),
            "bfgs" => Ok(Method::Bfgs),
            other => Err(HtrError::UnknownMethod(other.to_string())),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::NelderMead => "nelder-mead",
            Method::Bfgs => "bfgs",
        })
    }
}

/// f tends to 0 along every path to the singular set of M, so descent on f
/// alone tends to stall at the `τ_M` barrier. Each local search therefore
/// first descends on [`Objective::defect_energy`], which shares the interior
/// zeros of f but grows near singular M, then polishes f from there.
///
/// Local minima with `|det M| / ‖M‖_F⁴` below this sit on the barrier and
/// only win the best-point selection when no restart ends inside.
pub const INTERIOR_REL_TOL: f64 = 1e-6;

/// Per-restart budget and stopping rules.
#[derive(Debug, Clone, Copy)]
pub struct LocalOptions {
    /// Evaluation budget for both phases together.
    pub max_evals: usize,
    /// Stop once f falls below this.
    pub target: f64,
    /// Descend on the defect energy before polishing f.
    pub warm_start: bool,
}

impl Default for LocalOptions {
    fn default() -> Self {
        LocalOptions {
            max_evals: 20_000,
            target: 1e-28,
            warm_start: true,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalMinimum {
    pub restart: usize,
    pub value: f64,
    pub params: CertificateParams,
    /// `|det M| / ‖M‖_F⁴` at the minimizer.
    pub conditioning: f64,
}

impl LocalMinimum {
    pub fn interior(&self) -> bool {
        self.conditioning >= INTERIOR_REL_TOL
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MinimizeResult {
    pub best_params: CertificateParams,
    pub best_value: f64,
    pub best_restart: usize,
    /// One entry per restart, in restart order.
    pub minima: Vec<LocalMinimum>,
}

/// A start uniform on (−1, 1)^16, redrawn while `|det M| ≤ τ_M`.
pub fn draw_start(rng: &mut crate::Rng) -> [f64; 16] {
    loop {
        let v: [f64; 16] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let m = moment_matrix(&CertificateParams::new(v));
        if m.determinant().abs() > moment_tol(&m) {
            return v;
        }
    }
}

/// The generator of one restart: depends only on `(seed, restart)`.
pub fn restart_rng(seed: u64, restart: usize) -> crate::Rng {
    let mut rng = crate::Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    rng
}

pub fn minimize(
    t: &QuadTensor,
    restarts: usize,
    seed: u64,
    method: Method,
) -> Result<MinimizeResult> {
    minimize_with(
        &Objective::new(t)?,
        restarts,
        seed,
        method,
        LocalOptions::default(),
    )
}

pub fn minimize_with(
    obj: &Objective,
    restarts: usize,
    seed: u64,
    method: Method,
    opts: LocalOptions,
) -> Result<MinimizeResult> {
    if restarts == 0 {
        return Err(HtrError::Precondition(
            "at least one restart is required".into(),
        ));
    }
    let minima: Vec<LocalMinimum> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let start = draw_start(&mut restart_rng(seed, r));
            let (params, value) = local_search(obj, start, method, opts);
            let params = CertificateParams::new(params);
            LocalMinimum {
                restart: r,
                value,
                conditioning: moment_conditioning(&params),
                params,
            }
        })
        .collect();
    let best = minima
        .iter()
        .min_by(|a, b| {
            b.interior()
                .cmp(&a.interior())
                .then(a.value.total_cmp(&b.value))
                .then(a.restart.cmp(&b.restart))
        })
        .expect("restarts > 0");
    Ok(MinimizeResult {
        best_params: best.params,
        best_value: best.value,
        best_restart: best.restart,
        minima,
    })
}

pub fn local_search(
    obj: &Objective,
    start: [f64; 16],
    method: Method,
    opts: LocalOptions,
) -> ([f64; 16], f64) {
    let mut x = start;
    let mut used = 0;
    if opts.warm_start {
        let (y, _, evals) = match method {
            Method::NelderMead => simplex_descent(
                &|v| obj.defect_energy(v),
                start,
                opts.max_evals / 2,
                opts.target,
            ),
            Method::Bfgs => quasi_newton(
                &|v| obj.defect_energy_grad(v),
                start,
                opts.max_evals / 2,
                opts.target,
            ),
        };
        x = unit_params(&y);
        used = evals;
    }
    let (y, fy, _) = descend(
        obj,
        x,
        method,
        MOMENT_REL_TOL,
        opts.max_evals.saturating_sub(used).max(1),
        opts.target,
    );
    (y, fy)
}

/// One descent on `{|det M| > rel · ‖M‖_F⁴}`; returns the point, its value
/// and the evaluations spent.
pub fn descend(
    obj: &Objective,
    start: [f64; 16],
    method: Method,
    rel: f64,
    max_evals: usize,
    target: f64,
) -> ([f64; 16], f64, usize) {
    match method {
        Method::NelderMead => nelder_mead(obj, start, rel, max_evals, target),
        Method::Bfgs => bfgs(obj, start, rel, max_evals, target),
    }
}

const N: usize = 16;

/// Simplex descent with dimension-adapted coefficients, restarted from the
/// best vertex while the restarts keep improving.
fn nelder_mead(
    obj: &Objective,
    start: [f64; 16],
    rel: f64,
    max_evals: usize,
    target: f64,
) -> ([f64; 16], f64, usize) {
    simplex_descent(&|x| obj.eval_above(x, rel), start, max_evals, target)
}

pub fn simplex_descent(
    fun: &dyn Fn(&[f64; 16]) -> f64,
    start: [f64; 16],
    max_evals: usize,
    target: f64,
) -> ([f64; 16], f64, usize) {
    let n = N as f64;
    let (alpha, gamma, rho, sigma) = (1.0, 1.0 + 2.0 / n, 0.75 - 1.0 / (2.0 * n), 1.0 - 1.0 / n);
    let mut evals = 0usize;
    let f = |x: &[f64; 16], evals: &mut usize| {
        *evals += 1;
        fun(x)
    };
    let mut best = (start, f(&start, &mut evals));
    let mut step = 0.1;
    while evals < max_evals && best.1 > target {
        let mut simplex: Vec<([f64; 16], f64)> = Vec::with_capacity(N + 1);
        simplex.push(best);
        for i in 0..N {
            let mut v = best.0;
            v[i] += step;
            let fv = f(&v, &mut evals);
            simplex.push((v, fv));
        }
        let before = best.1;
        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let (lo, hi) = (simplex[0].1, simplex[N].1);
            let size = simplex[1..]
                .iter()
                .map(|(v, _)| {
                    v.iter()
                        .zip(&simplex[0].0)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max)
                })
                .fold(0.0, f64::max);
            if evals >= max_evals
                || lo <= target
                || size < 1e-12
                || (hi - lo).abs() <= 1e-16 * lo.abs()
            {
                break;
            }
            let mut centroid = [0.0; 16];
            for (v, _) in &simplex[..N] {
                for i in 0..N {
                    centroid[i] += v[i] / n;
                }
            }
            let worst = simplex[N].0;
            let along = |t: f64| -> [f64; 16] {
                std::array::from_fn(|i| centroid[i] + t * (worst[i] - centroid[i]))
            };
            let xr = along(-alpha);
            let fr = f(&xr, &mut evals);
            if fr < simplex[0].1 {
                let xe = along(-alpha * gamma);
                let fe = f(&xe, &mut evals);
                simplex[N] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[N - 1].1 {
                simplex[N] = (xr, fr);
            } else {
                let (xc, fc) = if fr < simplex[N].1 {
                    let xc = along(-alpha * rho);
                    let fc = f(&xc, &mut evals);
                    (xc, fc)
                } else {
                    let xc = along(rho);
                    let fc = f(&xc, &mut evals);
                    (xc, fc)
                };
                if fc < simplex[N].1.min(fr) {
                    simplex[N] = (xc, fc);
                } else {
                    let x0 = simplex[0].0;
                    for vertex in simplex.iter_mut().skip(1) {
                        let v: [f64; 16] =
                            std::array::from_fn(|i| x0[i] + sigma * (vertex.0[i] - x0[i]));
                        *vertex = (v, f(&v, &mut evals));
                    }
                }
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        best = simplex[0];
        if !(best.1 < before * (1.0 - 1e-9)) {
            break;
        }
        step = 0.01f64.max(step * 0.5);
    }
    (best.0, best.1, evals)
}

/// BFGS with an Armijo backtracking line search; steps that leave the
/// domain (`|det M| ≤ τ_M`) are shortened.
fn bfgs(
    obj: &Objective,
    start: [f64; 16],
    rel: f64,
    max_evals: usize,
    target: f64,
) -> ([f64; 16], f64, usize) {
    quasi_newton(&|x| obj.eval_grad_above(x, rel), start, max_evals, target)
}

pub fn quasi_newton(
    fun: &dyn Fn(&[f64; 16]) -> Option<(f64, [f64; 16])>,
    start: [f64; 16],
    max_evals: usize,
    target: f64,
) -> ([f64; 16], f64, usize) {
    let Some((mut fx, mut g)) = fun(&start) else {
        return (start, f64::INFINITY, 1);
    };
    let mut x = start;
    let mut h = nalgebra::SMatrix::<f64, 16, 16>::identity();
    let mut evals = 1usize;
    while evals < max_evals && fx > target {
        let gv = nalgebra::SVector::<f64, 16>::from_column_slice(&g);
        if gv.norm() < 1e-300 {
            break;
        }
        let mut dir = -(h * gv);
        if dir.dot(&gv) >= 0.0 {
            h = nalgebra::SMatrix::identity();
            dir = -gv;
        }
        let slope = dir.dot(&gv);
        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-20 {
            let xn: [f64; 16] = std::array::from_fn(|i| x[i] + t * dir[i]);
            evals += 1;
            if let Some((fnew, gnew)) = fun(&xn) {
                if fnew <= fx + 1e-4 * t * slope {
                    accepted = Some((xn, fnew, gnew));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((xn, fnew, gnew)) = accepted else {
            break;
        };
        let s = nalgebra::SVector::<f64, 16>::from_fn(|i, _| xn[i] - x[i]);
        let yv = nalgebra::SVector::<f64, 16>::from_fn(|i, _| gnew[i] - g[i]);
        let sy = s.dot(&yv);
        if sy > 1e-300 {
            let rho = 1.0 / sy;
            let i = nalgebra::SMatrix::<f64, 16, 16>::identity();
            h = (i - s * yv.transpose() * rho) * h * (i - yv * s.transpose() * rho)
                + s * s.transpose() * rho;
        }
        let progress = fx - fnew;
        x = xn;
        fx = fnew;
        g = gnew;
        if progress <= 1e-16 * fx.abs() && progress >= 0.0 && fx > 0.0 && t < 1e-12 {
            break;
        }
    }
    (x, fx, evals)
}
