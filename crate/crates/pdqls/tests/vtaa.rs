use pdqls::instances::{random_pd_instance, RandomPdParams};
use pdqls::linalg::HermitianOperator;
use pdqls::rng::{porter_thomas, seeded};
use pdqls::solver::promised_kappa;
use pdqls::state::StateVector;
use pdqls::vtaa::{
    build_schedule, evolve, gamma_factor, simulate_vst, stage_count, vtaa_cost_report, Amplification, VttSchedule,
};
use proptest::prelude::*;
use rand::Rng;
use std::sync::OnceLock;

const KAPPAS: [f64; 4] = [4.0, 12.0, 40.0, 128.0];

// schedules are costly to build, so the properties draw κ from a fixed set
fn schedule(i: usize) -> &'static VttSchedule {
    static CACHE: OnceLock<Vec<VttSchedule>> = OnceLock::new();
    &CACHE.get_or_init(|| KAPPAS.iter().map(|&k| build_schedule(k, 1.0, 0.05).unwrap()).collect())[i]
}

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
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn evolution_conserves_norm(seed in any::<u64>(), i in 0usize..KAPPAS.len(), amplified in any::<bool>()) {
        let mut rng = seeded(seed);
        let n = 12;
        let lambdas: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0 / KAPPAS[i]..=1.0)).collect();
        let w: Vec<f64> = porter_thomas(&mut rng, n).iter().map(|z| z.norm_sqr()).collect();
        let s = schedule(i);
        let mode = if amplified { Amplification::Auto } else { Amplification::Fixed(vec![]) };
        let (st, _) = evolve(s, &lambdas, &w, &mode);
        prop_assert!((st.total_norm_sqr(&w) - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn gamma_lies_between_one_and_sqrt_kappa(seed in any::<u64>(), kappa in 1.5f64..200.0) {
        let (a, b) = instance(16, kappa, seed);
        let g = gamma_factor(&a, &b).unwrap();
        prop_assert!(g >= 1.0 - 1e-12 && g <= kappa.sqrt() + 1e-12, "gamma {}", g);
    }

    #[test]
    fn auto_never_rotates_past_a_quarter_turn(seed in any::<u64>(), i in 0usize..KAPPAS.len()) {
        let (a, b) = instance(24, KAPPAS[i], seed);
        prop_assert_eq!(promised_kappa(&a).unwrap(), KAPPAS[i]);
        let (_, r) = simulate_vst(&a, &b, schedule(i), &Amplification::Auto).unwrap();
        for st in r.stages.iter().filter(|st| !st.skipped && st.theta > 0.0) {
            let k = st.k as f64;
            prop_assert!((2.0 * k + 1.0) * st.theta <= std::f64::consts::FRAC_PI_2 + 1e-9 || st.k == 0);
            if st.theta <= std::f64::consts::PI / 8.0 {
                prop_assert!(k >= std::f64::consts::PI / (8.0 * st.theta) - 0.5 - 1e-9);
            }
        }
    }
}

#[test]
fn schedule_shape() {
    for (i, &kappa) in KAPPAS.iter().enumerate() {
        let s = schedule(i);
        assert_eq!(s.m, stage_count(kappa));
        assert_eq!(s.stages.len(), s.m);
        assert!(s.stages.windows(2).all(|w| w[1].t >= w[0].t));
        assert!(s.deltas().windows(2).all(|w| w[1] < w[0]));
        assert!(s.t_max() >= s.t_min());
    }
}

#[test]
fn vtaa_output_is_close_to_the_solution() {
    for seed in 0..4 {
        let (a, b) = instance(32, KAPPAS[2], seed);
        let s = schedule(2);
        let (x, r) = simulate_vst(&a, &b, s, &Amplification::Auto).unwrap();
        assert!(x.is_normalized());
        assert!(r.trace_error <= 0.05, "seed {seed}: {}", r.trace_error);
        assert!(r.p_succ_amplified >= r.p_succ);
        let cost = vtaa_cost_report(s, &r);
        assert!(cost.measured_qub_big > 0);
        assert!(cost.bound > 0.0);
    }
}

#[test]
fn schedule_too_small_for_the_instance_is_rejected() {
    let (a, b) = instance(8, 64.0, 1);
    assert!(simulate_vst(&a, &b, schedule(0), &Amplification::Auto).is_err());
}
