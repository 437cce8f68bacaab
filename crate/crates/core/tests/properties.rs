use htr::bound2222::{bound_complex, bound_real};
use htr::certify::{
    condition_e_residuals, minimize, minimize_with, moment_matrix, objective_f, recovered_factors,
    synthetic_rank4, CertificateParams, LocalOptions, Method, Objective,
};
use htr::higher::{decompose_higher, stabilizing_rank_one};
use htr::io::{parse_tensor, tensor_to_json};
use htr::pencil::delta;
use htr::rank222::{classify, decompose222};
use htr::{Field, GLAction, Mat2, ModePerm, QuadTensor, Scalar, SlicePair, Tensor};
use proptest::prelude::*;
use rand::SeedableRng;

fn entries(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, n)
}

fn real_tensor(order: usize) -> impl Strategy<Value = Tensor> {
    entries(1 << order).prop_map(move |d| Tensor::from_real(order, &d).unwrap())
}

fn complex_tensor(order: usize) -> impl Strategy<Value = Tensor> {
    (entries(1 << order), entries(1 << order)).prop_map(move |(a, b)| {
        let data = a.iter().zip(&b).map(|(&x, &y)| Scalar::new(x, y)).collect();
        Tensor::from_data(order, Field::Complex, data).unwrap()
    })
}

fn real_mat() -> impl Strategy<Value = Mat2> {
    entries(4).prop_map(|v| Mat2::real(v[0], v[1], v[2], v[3]))
}

fn action(n: usize) -> impl Strategy<Value = GLAction> {
    prop::collection::vec(real_mat(), n)
        .prop_filter("well conditioned", |ms| ms.iter().all(|m| m.det().norm() > 0.05 * m.norm_sqr()))
        .prop_map(|ms| GLAction::new(ms).unwrap())
}

fn params() -> impl Strategy<Value = CertificateParams> {
    entries(16).prop_map(|v| CertificateParams::new(v.try_into().unwrap()))
}

/// Largest matrix rank over all bipartitions of the modes.
fn max_unfolding_rank(t: &Tensor) -> usize {
    let k = t.order();
    (1..(1usize << k) - 1)
        .map(|mask| {
            let rows: Vec<usize> = (0..k).filter(|m| mask >> m & 1 == 1).collect();
            t.unfolding_rank(&rows, 1e-9)
        })
        .max()
        .unwrap_or(1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn reorder_modes_inverts(t in real_tensor(5), perm in Just((0..5).collect::<Vec<usize>>()).prop_shuffle()) {
        let p = ModePerm::new(perm).unwrap();
        let back = t.reorder_modes(&p).unwrap().reorder_modes(&p.inverse()).unwrap();
        prop_assert_eq!(back.data(), t.data());
    }

    #[test]
    fn json_round_trip(t in complex_tensor(4)) {
        let back = parse_tensor(&tensor_to_json(&t).to_string()).unwrap();
        prop_assert_eq!(back.data(), t.data());
        prop_assert_eq!(back.field(), Field::Complex);
    }

    #[test]
    fn delta_transforms_by_squared_determinants(t in real_tensor(3), g in action(3)) {
        let p = SlicePair::from_tensor(&t).unwrap();
        let q = SlicePair::from_tensor(&g.apply(&t).unwrap()).unwrap();
        let dets: Scalar = g.matrices().iter().map(Mat2::det).product();
        let lhs = delta(&q.a, &q.b).value;
        let rhs = delta(&p.a, &p.b).value * dets * dets;
        prop_assert!((lhs - rhs).norm() <= 1e-9 * (q.norm().powi(4) + 1.0));
    }

    #[test]
    fn order3_decompositions_are_minimal_and_exact(t in real_tensor(3), c in complex_tensor(3)) {
        for (x, field) in [(&t, Field::Real), (&t, Field::Complex), (&c, Field::Complex)] {
            let p = SlicePair::from_tensor(x).unwrap();
            let d = decompose222(&p, field);
            prop_assert_eq!(d.len(), classify(&p, field).rank as usize);
            prop_assert!(d.relative_residual(x).unwrap() <= 1e-8);
        }
    }

    #[test]
    fn order3_rank_is_orbit_invariant(t in real_tensor(3), g in action(3)) {
        let p = SlicePair::from_tensor(&t).unwrap();
        let d = delta(&p.a, &p.b);
        prop_assume!(d.value.norm() > 1e3 * d.tol);
        let q = SlicePair::from_tensor(&g.apply(&t).unwrap()).unwrap();
        prop_assert_eq!(classify(&p, Field::Real).rank, classify(&q, Field::Real).rank);
    }

    #[test]
    fn order4_bounds_reconstruct(t in real_tensor(4), c in complex_tensor(4)) {
        let r = bound_real(&QuadTensor::from_tensor(&t).unwrap()).unwrap();
        prop_assert!(r.decomposition.len() <= 5);
        prop_assert!(r.decomposition.is_real());
        prop_assert!(r.decomposition.relative_residual(&t).unwrap() <= 1e-8);
        let z = bound_complex(&QuadTensor::from_tensor(&c).unwrap()).unwrap();
        prop_assert!(z.decomposition.len() <= 4);
        prop_assert!(z.decomposition.relative_residual(&c).unwrap() <= 1e-8);
    }

    #[test]
    fn objective_is_nonnegative(t in real_tensor(4), p in params()) {
        let q = QuadTensor::from_tensor(&t).unwrap();
        if let Ok(f) = objective_f(&q, &p) {
            prop_assert!(f >= 0.0);
        }
    }

    #[test]
    fn factors_satisfy_nm_equals_b(t in real_tensor(4), p in params()) {
        let q = QuadTensor::from_tensor(&t).unwrap();
        prop_assume!(Objective::new(&q).is_ok());
        let Ok(fm) = recovered_factors(&q, &p) else { return Ok(()) };
        let m = moment_matrix(&p);
        let b = q.real_unfolding().unwrap();
        prop_assert!((fm.n * m - b).norm() <= 1e-8 * b.norm() * (1.0 + fm.n.norm() * m.norm()));
        for k in 0..4 {
            prop_assert!((fm.factor(k).det().re - fm.defects[k]).abs() <= 1e-12 * (1.0 + fm.n.norm_squared()));
        }
    }

    #[test]
    fn condition_e_forms_agree(t in real_tensor(4), p in params()) {
        let q = QuadTensor::from_tensor(&t).unwrap();
        let e = condition_e_residuals(&q, &p).unwrap();
        if let Some(defect) = e.defect_form {
            let scale = (moment_matrix(&p).norm().powi(3) * q.real_unfolding().unwrap().norm()).powi(2);
            for k in 0..4 {
                prop_assert!((e.raw[k] - defect[k]).abs() <= 1e-9 * scale);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn objective_vanishes_exactly_on_four_term_points(seed in any::<u64>()) {
        let mut rng = htr::Rng::seed_from_u64(seed);
        let (q, truth) = synthetic_rank4(&mut rng, 0.1);
        prop_assert!(objective_f(&q, &truth).unwrap() <= 1e-20);
        let fm = recovered_factors(&q, &truth).unwrap();
        prop_assert!(fm.defects.iter().all(|d| d.abs() <= 1e-9));
        // moving c_1 off the truth breaks one of the rank-one conditions
        let mut v = truth.values;
        v[0] += 0.3;
        let moved = CertificateParams::new(v);
        let f = objective_f(&q, &moved).unwrap();
        let defects = recovered_factors(&q, &moved).unwrap().defects;
        prop_assert_eq!(f <= 1e-20, defects.iter().all(|d| d.abs() <= 1e-10));
    }

    #[test]
    fn higher_order_bounds_respect_lower_bounds(t in real_tensor(5)) {
        let h = decompose_higher(&t, Field::Real).unwrap();
        prop_assert!(h.decomposition.len() <= 9);
        prop_assert!(h.decomposition.len() >= max_unfolding_rank(&t));
        prop_assert!(h.residual <= 1e-8);
    }

    #[test]
    fn stabilizer_is_exactly_singular(pairs in prop::collection::vec((real_mat(), real_mat()), 1..6)) {
        let pairs: Vec<SlicePair> = pairs.into_iter().map(|(a, b)| SlicePair::new(a, b)).collect();
        let c = stabilizing_rank_one(&pairs).unwrap();
        prop_assert_eq!(c.det(), Scalar::new(0.0, 0.0));
    }
}

#[test]
fn restarts_are_independent_of_count_and_threads() {
    let mut rng = htr::Rng::seed_from_u64(77);
    let (q, _) = synthetic_rank4(&mut rng, 0.1);
    let many = minimize(&q, 8, 5, Method::Bfgs).unwrap();
    let few = minimize(&q, 3, 5, Method::Bfgs).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let serial = pool
        .install(|| minimize_with(&Objective::new(&q).unwrap(), 8, 5, Method::Bfgs, LocalOptions::default()))
        .unwrap();
    for (a, b) in few.minima.iter().zip(&many.minima) {
        assert_eq!(a.params, b.params);
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }
    for (a, b) in serial.minima.iter().zip(&many.minima) {
        assert_eq!(a.params, b.params);
    }
    assert_eq!(serial.best_restart, many.best_restart);
}
