use pdqls::instances::{random_pd_instance, RandomPdParams};
use pdqls::ledger::Oracle;
use pdqls::linalg::{HermitianOperator, C64};
use pdqls::rng::{porter_thomas, seeded};
use pdqls::solver::{aa_rounds, direct_solution, solve_postselect, Mode};
use pdqls::state::{trace_distance, StateVector};
use proptest::prelude::*;

fn instance(n: usize, kappa: f64, seed: u64) -> (HermitianOperator, StateVector) {
    let inst = random_pd_instance(
        &RandomPdParams {
            n,
            kappa,
            b_model: Default::default(),
        },
        seed,
    )
    .unwrap();
    (inst.operator().unwrap(), inst.b_state())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn amplified_solve_meets_eps_and_amplitude(seed in any::<u64>(), kappa in 2.0f64..40.0, eps in 0.005f64..0.2) {
        let (a, b) = instance(16, kappa, seed);
        let (x, r) = solve_postselect(&a, &b, 1.0, eps, Mode::Amplify).unwrap();
        prop_assert!(r.trace_error <= eps);
        prop_assert!(r.success_amplitude.powi(2) >= 0.4, "amplitude {}", r.success_amplitude);
        let exact = StateVector::normalized(direct_solution(&a, &b)).unwrap();
        prop_assert!((trace_distance(&x, &exact) - r.trace_error).abs() <= 1e-12);
        prop_assert!((r.p_succ - r.p_succ_predicted).abs() <= 2.0 * eps);
    }

    #[test]
    fn query_count_follows_rounds_and_degree(seed in any::<u64>(), kappa in 2.0f64..40.0) {
        let (a, b) = instance(8, kappa, seed);
        let (_, post) = solve_postselect(&a, &b, 1.0, 0.05, Mode::Postselect).unwrap();
        let (_, amp) = solve_postselect(&a, &b, 1.0, 0.05, Mode::Amplify).unwrap();
        let degree = (2 * post.ell - 1) as u64;
        prop_assert_eq!(post.queries.get(Oracle::UB), degree);
        prop_assert_eq!(post.queries.get(Oracle::Ub), 1);
        let reps = 2 * amp.aa_rounds + 1;
        prop_assert_eq!(amp.queries.get(Oracle::UB), reps * degree);
        prop_assert_eq!(amp.queries.get(Oracle::Ub), reps);
    }
}

#[test]
fn identity_system_is_solved_exactly() {
    let a = HermitianOperator::identity(8);
    let b = StateVector::normalized(porter_thomas(&mut seeded(1), 8)).unwrap();
    let (x, r) = solve_postselect(&a, &b, 1.0, 0.01, Mode::Amplify).unwrap();
    assert!(r.trace_error < 1e-12);
    assert!(trace_distance(&x, &b) < 1e-12);
}

#[test]
fn eta_below_one_still_solves() {
    let (a, b) = instance(16, 10.0, 4);
    let (_, r) = solve_postselect(&a, &b, 0.5, 0.02, Mode::Postselect).unwrap();
    assert!(r.trace_error <= 0.02);
    assert_eq!(r.eta, 0.5);
}

#[test]
fn aa_rounds_reach_near_unit_amplitude() {
    for p in [0.5f64, 0.1, 0.01, 1e-4] {
        let theta = p.sqrt().asin();
        let k = aa_rounds(theta);
        assert!(((2 * k + 1) as f64 * theta).sin().powi(2) >= 0.5, "p = {p}");
    }
    assert_eq!(aa_rounds(0.0), 0);
}

#[test]
fn invalid_inputs_are_rejected() {
    let (a, b) = instance(4, 4.0, 0);
    assert!(solve_postselect(&a, &b, 1.0, 0.0, Mode::Postselect).is_err());
    assert!(solve_postselect(&a, &b, 1.5, 0.1, Mode::Postselect).is_err());
    let unnormalized = StateVector::new(b.amplitudes().map(|z: C64| z * 2.0));
    assert!(solve_postselect(&a, &unnormalized, 1.0, 0.1, Mode::Postselect).is_err());
}
