use proptest::prelude::*;

use immrb::gt_basis::GtBasis;
use immrb::immanant::immanant;
use immrb::io::fmt_g17;
use immrb::irrep_matrices::{gamma_unitary, generators, lift_unitary};
use immrb::rep_theory::{casimir_eigenvalue, dim, Partition};
use immrb::simulator::{haar_su_matrix, stream_rng};
use immrb::{CMatrix, C64};

fn matrix(d: usize) -> impl Strategy<Value = CMatrix> {
    prop::collection::vec(-2.0f64..2.0, 2 * d * d)
        .prop_map(move |v| CMatrix::from_fn(d, d, |i, j| C64::new(v[2 * (i * d + j)], v[2 * (i * d + j) + 1])))
}

fn perm3() -> impl Strategy<Value = Vec<usize>> {
    Just(vec![0usize, 1, 2]).prop_shuffle()
}

fn perm_matrix(p: &[usize]) -> CMatrix {
    let d = p.len();
    CMatrix::from_fn(d, d, |i, j| {
        if p[i] == j {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

fn labels3() -> impl Strategy<Value = Partition> {
    prop::sample::select(vec![
        Partition::new(vec![3, 0, 0]).unwrap(),
        Partition::new(vec![2, 1, 0]).unwrap(),
        Partition::new(vec![1, 1, 1]).unwrap(),
    ])
}

fn close(a: C64, b: C64, scale: f64) -> bool {
    (a - b).norm() <= 1e-10 * scale.max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn immanant_invariant_under_simultaneous_permutation(a in matrix(3), p in perm3(), kappa in labels3()) {
        let pm = perm_matrix(&p);
        let b = pm.transpose() * &a * &pm;
        let lhs = immanant(&kappa, &b).unwrap();
        let rhs = immanant(&kappa, &a).unwrap();
        prop_assert!(close(lhs, rhs, a.norm().powi(3)));
    }

    #[test]
    fn immanant_of_transpose(a in matrix(3), kappa in labels3()) {
        let lhs = immanant(&kappa, &a.transpose()).unwrap();
        let rhs = immanant(&kappa, &a).unwrap();
        prop_assert!(close(lhs, rhs, a.norm().powi(3)));
    }

    #[test]
    fn immanant_is_multilinear_in_rows(
        a in matrix(3), x in matrix(3), row in 0usize..3,
        s in -2.0f64..2.0, t in -2.0f64..2.0, kappa in labels3(),
    ) {
        let (s, t) = (C64::new(s, 0.3), C64::new(t, -0.7));
        let mut ax = a.clone();
        let mut ay = a.clone();
        let mut mix = a.clone();
        for j in 0..3 {
            ax[(row, j)] = x[(0, j)];
            ay[(row, j)] = x[(1, j)];
            mix[(row, j)] = s * x[(0, j)] + t * x[(1, j)];
        }
        let lhs = immanant(&kappa, &mix).unwrap();
        let rhs = s * immanant(&kappa, &ax).unwrap() + t * immanant(&kappa, &ay).unwrap();
        prop_assert!(close(lhs, rhs, 10.0 * (a.norm() + x.norm()).powi(3)));
    }

    #[test]
    fn irrep_lift_is_a_homomorphism(seed in 0u64..1000, which in 0usize..3) {
        let mu = [vec![2, 1, 0], vec![2, 0, 0], vec![3, 1, 0]][which].clone();
        let mu = Partition::new(mu).unwrap();
        let u = haar_su_matrix(3, &mut stream_rng(seed, 0));
        let v = haar_su_matrix(3, &mut stream_rng(seed, 1));
        let lhs = lift_unitary(&mu, &u).unwrap() * lift_unitary(&mu, &v).unwrap();
        let rhs = lift_unitary(&mu, &(&u * &v)).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-8);
    }

    #[test]
    fn gamma_is_a_homomorphism(seed in 0u64..1000, n in 1u32..3, m in 2usize..4) {
        let u = haar_su_matrix(m, &mut stream_rng(seed, 0));
        let v = haar_su_matrix(m, &mut stream_rng(seed, 1));
        let lhs = gamma_unitary(n, m, &u).unwrap() * gamma_unitary(n, m, &v).unwrap();
        let rhs = gamma_unitary(n, m, &(&u * &v)).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn g17_roundtrips(x in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO) {
        prop_assert_eq!(fmt_g17(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn partition_text_roundtrip(mut parts in prop::collection::vec(0u32..6, 1..5)) {
        parts.sort_unstable_by(|a, b| b.cmp(a));
        let mu = Partition::new(parts).unwrap();
        prop_assert_eq!(mu.to_string().parse::<Partition>().unwrap(), mu);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gt_basis_size_and_casimir(mut parts in prop::collection::vec(0u32..4, 2..4)) {
        parts.sort_unstable_by(|a, b| b.cmp(a));
        let mu = Partition::new(parts).unwrap();
        prop_assert_eq!(GtBasis::new(&mu).unwrap().len() as u64, dim(&mu));
        let c = generators(&mu).unwrap().casimir();
        let want = casimir_eigenvalue(&mu);
        let d = c.nrows();
        let diff = c - CMatrix::identity(d, d) * C64::new(want, 0.0);
        prop_assert!(diff.norm() < 1e-9);
    }
}
