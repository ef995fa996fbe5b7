mod common;

use mprat_core::eval::{mp_evaluate, nc_evaluate, tau_point, Evaluation, NcPoint};
use mprat_core::expr::parse;
use mprat_core::field::{Fp61, Rational};
use mprat_core::matrix::Matrix;
use mprat_core::realization::{
    amplify, base_point_in_domain, base_value, real_domain_contains, real_evaluate, real_reduce, realize,
    RealizationError,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn nc_point(rng: &mut ChaCha8Rng, n: usize, bound: i64) -> NcPoint<Rational> {
    let a = common::corpus_alphabet();
    let mats = (0..a.num_letters()).map(|_| common::random_matrix(rng, n, n, bound)).collect();
    NcPoint::from_letters(&a, n, mats).unwrap()
}

fn base_in_domain(rng: &mut ChaCha8Rng, e: &mprat_core::expr::RationalExpr, m: usize) -> NcPoint<Rational> {
    loop {
        let p = nc_point(rng, m, 5);
        if base_point_in_domain(e, &p).unwrap() {
            return p;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    #[test]
    fn realization_agrees_with_evaluation(idx in 0usize..20, m in 1usize..=2, s in 1usize..=2, seed in any::<u64>()) {
        let a = common::corpus_alphabet();
        let e = &common::corpus()[idx];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = base_in_domain(&mut rng, e, m);
        let r = realize(e, &a, &base).unwrap();
        prop_assert_eq!(base_value(&r), nc_evaluate(e, &base).unwrap().defined().unwrap());
        let p = nc_point(&mut rng, m * s, 4);
        let direct = nc_evaluate(e, &p).unwrap();
        if real_domain_contains(&r, &p).unwrap() {
            if let Evaluation::Defined(v) = direct {
                prop_assert_eq!(real_evaluate(&r, &p).unwrap(), v);
            }
        } else {
            prop_assert!(matches!(real_evaluate(&r, &p), Err(RealizationError::PencilSingular)));
        }
    }

    #[test]
    fn reduction_shrinks_and_agrees(idx in 0usize..20, seed in any::<u64>()) {
        let a = common::corpus_alphabet();
        let e = &common::corpus()[idx];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = base_in_domain(&mut rng, e, 1);
        let r = realize(e, &a, &base).unwrap();
        let reduced = real_reduce(&r);
        prop_assert!(reduced.dim() <= r.dim());
        prop_assert_eq!(real_reduce(&reduced).dim(), reduced.dim());
        let p = nc_point(&mut rng, 2, 4);
        if real_domain_contains(&r, &p).unwrap() && real_domain_contains(&reduced, &p).unwrap() {
            prop_assert_eq!(real_evaluate(&reduced, &p).unwrap(), real_evaluate(&r, &p).unwrap());
        }
    }

    #[test]
    fn scalar_realization_bridges_to_mp_evaluation(idx in 0usize..20, seed in any::<u64>()) {
        let a = common::corpus_alphabet();
        let e = &common::corpus()[idx];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = base_in_domain(&mut rng, e, 1);
        let r = real_reduce(&realize(e, &a, &base).unwrap());
        let mp = common::random_point(&mut rng, &a, &[2, 2], 4);
        let tau = tau_point(&mp).unwrap();
        if let Evaluation::Defined(v) = mp_evaluate(e, &mp).unwrap() {
            if real_domain_contains(&r, &tau).unwrap() {
                prop_assert_eq!(real_evaluate(&r, &tau).unwrap(), v);
            }
        }
    }
}

#[test]
fn base_point_outside_domain_is_rejected() {
    let a = common::corpus_alphabet();
    let e = parse("inv(X1_1 - X1_2)", &a).unwrap();
    let p = NcPoint::<Rational>::from_letters(&a, 1, vec![Matrix::scalar(1, common::q(2)); 3]).unwrap();
    assert!(!base_point_in_domain(&e, &p).unwrap());
    assert!(matches!(realize(&e, &a, &p), Err(RealizationError::BasePointOutsideDomain { .. })));
}

#[test]
fn amplification_is_block_kronecker() {
    let x = Matrix::<Rational>::from_i64_rows(&[&[1, 2, 3, 4], &[5, 6, 7, 8], &[9, 10, 11, 12], &[13, 14, 15, 16]]);
    let amp = amplify(&x, 2, 3);
    assert_eq!(amp.shape(), (12, 12));
    assert_eq!(amp.block(0, 0, 6, 6), Matrix::identity(3).kron(&x.block(0, 0, 2, 2)));
    assert_eq!(amp.block(6, 0, 6, 6), Matrix::identity(3).kron(&x.block(2, 0, 2, 2)));
}

#[test]
fn realization_over_the_prime_field() {
    let a = common::corpus_alphabet();
    let e = parse("inv(1 + X1_1 * X1_2) * X2_1", &a).unwrap();
    let scalar = |v: u64| Matrix::scalar(1, Fp61::new(v));
    let base = NcPoint::from_letters(&a, 1, vec![scalar(1), scalar(2), scalar(3)]).unwrap();
    let r = realize(&e, &a, &base).unwrap();
    let m = |rows: &[&[i64]]| Matrix::<Fp61>::from_i64_rows(rows);
    let p = NcPoint::from_letters(&a, 2, vec![m(&[&[1, 1], &[0, 2]]), m(&[&[3, 0], &[1, 1]]), m(&[&[2, 5], &[7, 1]])])
        .unwrap();
    assert_eq!(real_evaluate(&r, &p).unwrap(), nc_evaluate(&e, &p).unwrap().defined().unwrap());
}
