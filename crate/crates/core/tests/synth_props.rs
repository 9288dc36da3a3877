use bsi_core::synth::{
    generate_operator, generate_sparse_signal, reconstruction_metrics, synthesize_observation, NoiseModel,
    OperatorKind, OperatorSpec, SignalSpec,
};
use bsi_core::{solve_jmap, DMatrix, ForwardProblem, HyperParams, Init, JmapConfig};
use proptest::prelude::*;

fn signal(seed: u64) -> SignalSpec {
    SignalSpec { length: 32, sparsity: 4, amplitude_range: (0.5, 2.0), seed }
}

#[test]
fn seeds_separate_outputs() {
    for seed in 0..10u64 {
        let other = seed + 1000;
        assert_ne!(generate_sparse_signal(&signal(seed)).unwrap(), generate_sparse_signal(&signal(other)).unwrap());
        let op = |seed| OperatorSpec { kind: OperatorKind::GaussianRandom, rows: 6, cols: 5, seed };
        assert_ne!(generate_operator(&op(seed)).unwrap(), generate_operator(&op(other)).unwrap());
        let h = DMatrix::identity(8, 8);
        let f = generate_sparse_signal(&SignalSpec { length: 8, ..signal(seed) }).unwrap();
        let noise = NoiseModel::Nonstationary { alpha: 3.0, beta: 2.0 };
        let a = synthesize_observation(&h, &f, &noise, seed).unwrap();
        let b = synthesize_observation(&h, &f, &noise, other).unwrap();
        assert_ne!(a.1, b.1);
        assert_eq!(a, synthesize_observation(&h, &f, &noise, seed).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generators_deterministic(seed in any::<u64>()) {
        prop_assert_eq!(generate_sparse_signal(&signal(seed)).unwrap(), generate_sparse_signal(&signal(seed)).unwrap());
    }

    #[test]
    fn noiseless_identity_recovery(seed in any::<u64>(), alpha in 0.5f64..3.0, log_beta in -12.0f64..-8.0) {
        let f_true = generate_sparse_signal(&signal(seed)).unwrap();
        let (g, _) = synthesize_observation(&DMatrix::identity(32, 32), &f_true, &NoiseModel::None, seed).unwrap();
        let p = ForwardProblem::direct(g, DMatrix::identity(32, 32)).unwrap();
        let hyper = HyperParams::uniform(alpha, 10f64.powf(log_beta));
        let config = JmapConfig { max_iter: 500, tol_rel_f: 1e-12, tol_rel_l: 1e-12, init: Init::LeastSquares };
        let (s, _) = solve_jmap(&p, &hyper, &config).unwrap();
        prop_assert!(reconstruction_metrics(&s.f_hat, &f_true).unwrap().rel_l2 < 1e-6);
    }
}
