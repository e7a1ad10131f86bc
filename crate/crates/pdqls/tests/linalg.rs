use pdqls::encoding::{apply_postselected, dilate_unitary, extract_block};
use pdqls::ledger::QueryLedger;
use pdqls::linalg::{
    c64, eigendecompose, kron, max_abs_diff, unitarity_residual, vec_norm, CMat, CVec, HermitianOperator,
};
use pdqls::rng::{haar_unitary, porter_thomas, random_hermitian_bounded, seeded};
use pdqls::state::{trace_distance, StateVector};
use proptest::prelude::*;

fn random_state(seed: u64, n: usize) -> StateVector {
    StateVector::normalized(porter_thomas(&mut seeded(seed), n)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn trace_distance_bounded_by_euclidean(seed in any::<u64>(), n in 2usize..17) {
        let psi = random_state(seed, n);
        let phi = random_state(seed ^ 0x9e37_79b9, n);
        let d = trace_distance(&psi, &phi);
        let e = vec_norm(&(psi.amplitudes() - phi.amplitudes()));
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert!(d <= e + 1e-12);
        prop_assert!((d - trace_distance(&phi, &psi)).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn postselection_matches_block_times_b(seed in any::<u64>(), n in 2usize..9) {
        let mut rng = seeded(seed);
        let m = HermitianOperator::new(random_hermitian_bounded(&mut rng, n, 0.9)).unwrap();
        let e = dilate_unitary(&m).unwrap();
        prop_assert!(e.unitarity_residual() < 1e-10);
        let b = random_state(seed.wrapping_add(1), n);
        let mut ledger = QueryLedger::new();
        let (x, p) = apply_postselected(&e, &b, &mut ledger).unwrap();
        let v = extract_block(&e) * b.amplitudes();
        prop_assert!((p - v.norm_squared()).abs() <= 1e-12);
        prop_assert!(trace_distance(&x, &StateVector::normalized(v).unwrap()) <= 1e-7);
    }

    #[test]
    fn eigendecomposition_reconstructs(seed in any::<u64>(), n in 1usize..12) {
        let m = random_hermitian_bounded(&mut seeded(seed), n, 1.0);
        let s = eigendecompose(&m).unwrap();
        prop_assert!(max_abs_diff(&s.reconstruct(), &m) <= 1e-12);
        prop_assert!(s.orthonormality_residual() <= 1e-12);
        prop_assert!(s.values.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn haar_unitaries_are_unitary() {
    let mut rng = seeded(7);
    for n in [1, 2, 5, 16] {
        assert!(unitarity_residual(&haar_unitary(&mut rng, n)) < 1e-12);
    }
}

#[test]
fn kron_mixed_product() {
    let mut rng = seeded(3);
    let (a, b) = (haar_unitary(&mut rng, 2), haar_unitary(&mut rng, 3));
    let (c, d) = (haar_unitary(&mut rng, 2), haar_unitary(&mut rng, 3));
    let lhs = kron(&a, &b) * kron(&c, &d);
    let rhs = kron(&(&a * &c), &(&b * &d));
    assert!(max_abs_diff(&lhs, &rhs) < 1e-12);
}

#[test]
fn condition_number_of_diagonal() {
    let h = HermitianOperator::from_real_diagonal(&[0.25, 0.5, 1.0]);
    assert!((h.condition_number() - 4.0).abs() < 1e-12);
    assert!(h.is_positive_definite());
    let i = HermitianOperator::identity(4);
    assert_eq!(i.condition_number(), 1.0);
}

#[test]
fn non_hermitian_input_is_rejected() {
    let mut m = CMat::identity(2, 2);
    m[(0, 1)] = c64(0.5, 0.0);
    assert!(HermitianOperator::new(m).is_err());
}

#[test]
fn dilation_rejects_large_norm() {
    let h = HermitianOperator::from_real_diagonal(&[0.5, 1.5]);
    assert!(dilate_unitary(&h).is_err());
}

#[test]
fn unnormalized_input_is_rejected() {
    let e = dilate_unitary(&HermitianOperator::identity(2)).unwrap();
    let b = StateVector::new(CVec::from_element(2, c64(1.0, 0.0)));
    assert!(apply_postselected(&e, &b, &mut QueryLedger::new()).is_err());
}
