use pdqls::blockenc::{LocalTerm, SumHamiltonianSpec};
use pdqls::instances::{random_sparse_b, random_sum_spec};
use pdqls::linalg::{c64, max_abs_diff, singular_values, CMat, HermitianOperator};
use pdqls::rng::{haar_unitary, seeded};
use pdqls::state::{trace_distance, SparseVector, StateVector};
use pdqls::sumqls::{build_factorization, cholesky_blocks, gamma_overlap, pseudo_solve, sumqls_solve, GAMMA_SAFETY};
use proptest::prelude::*;

fn random_case(seed: u64, n: usize, j: usize, s: usize, d_b: usize) -> (SumHamiltonianSpec, SparseVector, CMat) {
    let mut rng = seeded(seed);
    let spec = random_sum_spec(n, j, s, &mut rng).unwrap();
    let b = random_sparse_b(spec.dim(), d_b, &mut rng).unwrap();
    let a = spec.assemble();
    (spec, b, a)
}

fn dense_solution(a: &CMat, b: &SparseVector) -> StateVector {
    StateVector::normalized(a.clone().lu().solve(&b.to_dense()).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn factorization_identities(seed in any::<u64>()) {
        let (spec, b, a) = random_case(seed, 4, 4, 2, 2);
        let art = build_factorization(&spec, &b).unwrap();
        let l = art.l_matrix();
        let g = art.lg_matrix();
        prop_assert!(max_abs_diff(&(&l * l.adjoint()), &a) <= 1e-9);
        prop_assert!(max_abs_diff(&(&l * &g), &CMat::identity(a.nrows(), a.nrows())) <= 1e-9);
        for f in &art.factors {
            prop_assert!(f.residual <= 1e-10);
            for r in 0..f.l.nrows() {
                for c in r + 1..f.l.ncols() {
                    prop_assert!(f.l[(r, c)].norm() == 0.0);
                }
                prop_assert!(f.l[(r, r)].re > 0.0 && f.l[(r, r)].im.abs() <= 1e-15);
            }
        }
        prop_assert!(art.d_b_prime() <= b.sparsity() * art.num_terms() * art.local_dim);

        // κ_eff(L) = √κ(A)
        let sv = singular_values(&l);
        let (hi, lo) = (sv.iter().cloned().fold(0.0, f64::max), sv.iter().cloned().fold(f64::INFINITY, f64::min));
        let kappa = HermitianOperator::new(a.clone()).unwrap().condition_number();
        prop_assert!(((hi / lo) / kappa.sqrt() - 1.0).abs() <= 1e-6);
        prop_assert!(art.kappa_a >= kappa * (1.0 - 1e-9));
    }

    #[test]
    fn gamma_formula_and_bounds(seed in any::<u64>()) {
        let (spec, b, a) = random_case(seed, 4, 3, 2, 3);
        let art = build_factorization(&spec, &b).unwrap();
        let (gamma, d) = gamma_overlap(&art, &a).unwrap();
        prop_assert!((d.formula_inv_norm - d.projector_inv_norm).abs() <= 1e-8 * d.projector_inv_norm);
        prop_assert!(gamma > 0.0 && gamma <= GAMMA_SAFETY + 1e-12);
        // ‖Π_L b′‖^{-1} ≤ (1/J)√(J/λ_*) / ‖A^{-1/2}b‖
        let jj = art.num_terms() as f64;
        let lambda_star = art.factors.iter().map(|f| f.lambda_min).fold(f64::INFINITY, f64::min);
        let bound = (jj / lambda_star).sqrt() / jj / d.denominator.sqrt();
        prop_assert!(d.formula_inv_norm <= bound * (1.0 + 1e-10));
    }

    #[test]
    fn pipeline_matches_dense_solve(seed in any::<u64>()) {
        let (spec, b, a) = random_case(seed, 5, 4, 2, 2);
        let (x, r) = sumqls_solve(&spec, &b, 0.01).unwrap();
        let td = trace_distance(&x, &dense_solution(&a, &b));
        prop_assert!(td <= 1e-8, "trace distance {td:e}, kappa_A {}", r.kappa_a);
        prop_assert!(r.trace_error <= 0.01);
        prop_assert!((r.cost.kappa_tilde - r.kappa_a.sqrt()).abs() <= 1e-12 * r.kappa_a.sqrt());
    }
}

#[test]
fn two_by_two_cholesky() {
    let h = CMat::from_row_slice(2, 2, &[c64(2.0, 0.0), c64(1.0, 0.0), c64(1.0, 0.0), c64(2.0, 0.0)]);
    let spec = SumHamiltonianSpec::new(
        1,
        vec![LocalTerm {
            qubits: vec![0],
            matrix: h.clone(),
        }],
    )
    .unwrap();
    let f = &cholesky_blocks(&spec).unwrap()[0];
    assert!((f.l[(0, 0)].re - 2f64.sqrt()).abs() < 1e-14);
    assert!((f.l[(1, 0)].re - 0.5f64.sqrt()).abs() < 1e-14);
    assert!((f.l[(1, 1)].re - 1.5f64.sqrt()).abs() < 1e-14);
    assert!(max_abs_diff(&(&f.l * f.l.adjoint()), &h) < 1e-14);
    assert!(max_abs_diff(&(&f.l * &f.l_inv), &CMat::identity(2, 2)) < 1e-14);
}

#[test]
fn identical_terms_saturate_gamma() {
    let mut rng = seeded(9);
    let v = haar_unitary(&mut rng, 4);
    let d = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
        c64(0.2, 0.0),
        c64(0.5, 0.0),
        c64(0.7, 0.0),
        c64(1.0, 0.0),
    ]));
    let h = &v * d * v.adjoint();
    let h = (&h + h.adjoint()).scale(0.5);
    let terms = (0..3)
        .map(|_| LocalTerm {
            qubits: vec![0, 1],
            matrix: h.clone(),
        })
        .collect();
    let spec = SumHamiltonianSpec::new(2, terms).unwrap();
    let b = random_sparse_b(4, 2, &mut rng).unwrap();
    let art = build_factorization(&spec, &b).unwrap();
    let (gamma, diag) = gamma_overlap(&art, &spec.assemble()).unwrap();
    assert!((diag.formula_inv_norm - 1.0).abs() < 1e-10);
    assert!((gamma - GAMMA_SAFETY).abs() < 1e-10);
}

#[test]
fn single_identity_term_returns_b() {
    let spec = SumHamiltonianSpec::new(
        2,
        vec![LocalTerm {
            qubits: vec![0, 1],
            matrix: CMat::identity(4, 4),
        }],
    )
    .unwrap();
    let b = SparseVector::from_dense(&StateVector::basis(4, 0).into_amplitudes());
    let (x, r) = sumqls_solve(&spec, &b, 0.01).unwrap();
    assert!((x.probability(0) - 1.0).abs() < 1e-12);
    assert!((r.gamma - GAMMA_SAFETY).abs() < 1e-12);
}

#[test]
fn singular_term_is_rejected() {
    let h = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c64(1.0, 0.0), c64(0.0, 0.0)]));
    let spec = SumHamiltonianSpec::new(
        1,
        vec![LocalTerm {
            qubits: vec![0],
            matrix: h,
        }],
    )
    .unwrap();
    let err = cholesky_blocks(&spec).unwrap_err().to_string();
    assert!(err.contains('0'), "{err}");
}

#[test]
fn non_positive_gamma_is_rejected() {
    let spec = SumHamiltonianSpec::new(
        1,
        vec![LocalTerm {
            qubits: vec![0],
            matrix: CMat::identity(2, 2),
        }],
    )
    .unwrap();
    let b = SparseVector::from_dense(&StateVector::basis(2, 1).into_amplitudes());
    let art = build_factorization(&spec, &b).unwrap();
    assert!(pseudo_solve(&art, 0.0, 0.01).is_err());
}
