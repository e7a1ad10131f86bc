use pdqls::instances::{
    check_observables, feynman_kitaev, fk_kappa_bound, generate, grover_diagonal, promise_majority_instance,
    random_pd_spectral, BModel, Circuit, GroverParams, InstanceJson, MajorityParams, QlsInstance, RandomPdParams,
};
use pdqls::linalg::{max_abs_diff, CMat};
use pdqls::rng::seeded;
use proptest::prelude::*;
use serde_json::json;

fn catalogue() -> Vec<(&'static str, serde_json::Value)> {
    vec![
        ("grover", json!({"n": 16, "m": 2})),
        ("promise_majority", json!({"n": 8, "m": 2, "f": 1})),
        ("expander", json!({"n": 16, "d": 4, "m": 4, "f": 0})),
        ("feynman_kitaev", json!({"n": 1, "t": 2})),
        ("random_pd", json!({"n": 12, "kappa": 20.0})),
        ("random_sum", json!({"n": 3, "j": 2, "s": 2, "d_b": 2})),
    ]
}

fn assert_same(a: &QlsInstance, b: &QlsInstance) {
    assert_eq!(a.family, b.family);
    assert_eq!(a.kappa, b.kappa);
    let d = max_abs_diff(&a.dense_matrix(), &b.dense_matrix());
    assert!(d == 0.0, "{}: {d:e}", a.family);
    assert_eq!(a.b.to_json(), b.b.to_json());
}

#[test]
fn every_family_passes_its_observables() {
    for (family, params) in catalogue() {
        for seed in 0..3 {
            let inst = generate(family, seed, &params).unwrap();
            let a = inst.operator().unwrap();
            assert!(a.lambda_min() > 0.0, "{family}");
            assert!(inst.kappa >= a.condition_number() * (1.0 - 1e-9), "{family}");
            for o in check_observables(&inst).unwrap() {
                assert!(o.holds(), "{family} seed {seed}: {o:?}");
            }
        }
    }
}

#[test]
fn json_roundtrip_and_regeneration() {
    for (family, params) in catalogue() {
        let inst = generate(family, 7, &params).unwrap();
        let text = serde_json::to_string(&inst.to_json()).unwrap();
        let back = QlsInstance::from_json(&serde_json::from_str::<InstanceJson>(&text).unwrap()).unwrap();
        assert_same(&inst, &back);
        assert_same(&inst, &inst.regenerate().unwrap());
    }
}

#[test]
fn unknown_family_and_bad_params_are_rejected() {
    assert!(generate("nope", 0, &json!({})).is_err());
    assert!(generate("grover", 0, &json!({"n": 4})).is_err());
    assert!(grover_diagonal(&GroverParams { n: 8, m: 5, s: None }, 0).is_err());
}

#[test]
fn grover_balanced_case_is_identity_like() {
    let inst = grover_diagonal(&GroverParams { n: 8, m: 4, s: None }, 0).unwrap();
    let a = inst.operator().unwrap();
    assert!((a.condition_number() - 1.0).abs() < 1e-12);
    assert!(max_abs_diff(a.entries(), &CMat::identity(8, 8).scale(0.5f64.sqrt())) < 1e-15);
}

#[test]
fn grover_two_level_closed_form() {
    let (n, m) = (64usize, 4usize);
    let inst = grover_diagonal(
        &GroverParams {
            n,
            m,
            s: Some(vec![1, 9, 17, 40]),
        },
        0,
    )
    .unwrap();
    let a = inst.operator().unwrap();
    let (nf, mf) = (n as f64, m as f64);
    let x = pdqls::solver::direct_solution(&a, &inst.b_state());
    let alpha = ((nf - mf) / nf).sqrt();
    let beta = (mf / nf).sqrt();
    for i in 0..n {
        let d = if [1, 9, 17, 40].contains(&i) { beta } else { alpha };
        assert!((x[i].re - 1.0 / (nf.sqrt() * d)).abs() < 1e-12);
    }
    assert!((inst.kappa - ((nf - mf) / mf).sqrt()).abs() < 1e-12);
}

#[test]
fn majority_condition_number() {
    let inst = promise_majority_instance(
        &MajorityParams {
            n: 64,
            m: 8,
            f: 0,
            y: None,
        },
        3,
    )
    .unwrap();
    let a = inst.operator().unwrap();
    assert!((a.condition_number() - 72.0 / 8.0).abs() < 1e-9);
}

#[test]
fn feynman_kitaev_geometric_inverse() {
    let mut rng = seeded(4);
    for (n, t) in [(1, 1), (2, 3), (3, 4)] {
        let fk = feynman_kitaev(Circuit::random(n, t, &mut rng).unwrap()).unwrap();
        let d = fk.dim();
        assert!(max_abs_diff(&(fk.m_matrix() * fk.geometric_inverse()), &CMat::identity(d, d)) < 1e-8);
        let m = fk.m_matrix();
        assert!(max_abs_diff(&fk.spec.assemble(), &(m.adjoint() * &m)) < 1e-10);
        assert!(fk.b.sparsity() <= 3);
        let a = pdqls::linalg::HermitianOperator::new(fk.spec.assemble()).unwrap();
        assert!(a.condition_number() <= fk_kappa_bound(t));
    }
}

#[test]
fn fixed_eigvec_inverse_norms() {
    let kappa = 32.0;
    let lo = random_pd_spectral(
        &RandomPdParams {
            n: 16,
            kappa,
            b_model: BModel::FixedEigvec(1.0 / kappa),
        },
        1,
    )
    .unwrap();
    assert!((lo.inverse_norm() - kappa).abs() < 1e-9);
    let hi = random_pd_spectral(
        &RandomPdParams {
            n: 16,
            kappa,
            b_model: BModel::FixedEigvec(1.0),
        },
        1,
    )
    .unwrap();
    assert!((hi.inverse_norm() - 1.0).abs() < 1e-12);
}

#[test]
fn porter_thomas_inverse_norm_scales_like_sqrt_kappa() {
    let kappa = 256.0;
    let mut r: Vec<f64> = (0..100)
        .map(|seed| {
            let s = random_pd_spectral(
                &RandomPdParams {
                    n: 1024,
                    kappa,
                    b_model: BModel::PorterThomas,
                },
                seed,
            )
            .unwrap();
            s.inverse_norm() / kappa.sqrt()
        })
        .collect();
    r.sort_by(f64::total_cmp);
    let median = 0.5 * (r[49] + r[50]);
    assert!((0.5..=2.0).contains(&median), "median {median}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_pd_spectrum_is_pinned(seed in any::<u64>(), n in 2usize..40, kappa in 1.01f64..1000.0) {
        let s = random_pd_spectral(&RandomPdParams { n, kappa, b_model: BModel::PorterThomas }, seed).unwrap();
        prop_assert_eq!(s.values[0], 1.0 / kappa);
        prop_assert_eq!(s.values[n - 1], 1.0);
        prop_assert!(s.values.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!((s.coeffs.norm() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn generation_is_deterministic(seed in any::<u64>()) {
        let p = json!({"n": 8, "kappa": 10.0});
        let a = generate("random_pd", seed, &p).unwrap();
        let b = generate("random_pd", seed, &p).unwrap();
        prop_assert!(max_abs_diff(&a.dense_matrix(), &b.dense_matrix()) == 0.0);
    }
}
