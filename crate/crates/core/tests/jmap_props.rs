mod common;

use bsi_core::jmap::{
    initial_state, iterate, least_squares_estimate, update_f, update_variance, update_variances,
    update_z, VarianceKind, DIRECT_ORDER,
};
use bsi_core::synth::{generate_operator, generate_sparse_signal, OperatorKind, OperatorSpec, SignalSpec};
use bsi_core::{solve_jmap, DMatrix, DVector, ForwardProblem, HyperParams, Init, JmapConfig, ModelKind};
use proptest::prelude::*;

fn descends(p: &ForwardProblem, hyper: &HyperParams, init: Init, iters: usize) -> Result<(), TestCaseError> {
    let config = JmapConfig { max_iter: iters, tol_rel_f: 1e-300, tol_rel_l: 1e-300, init };
    let (_, trace) = solve_jmap(p, hyper, &config).unwrap();
    for w in trace.criteria().windows(2) {
        prop_assert!(w[1] <= w[0] + 1e-10 * w[0].abs(), "{} -> {}", w[0], w[1]);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn monotone_descent(seed in any::<u64>(), n in 1usize..9, m in 1usize..9, indirect in any::<bool>(), ls in any::<bool>()) {
        let mut rng = common::rng(seed);
        let p = common::problem(&mut rng, n, m, indirect);
        let hyper = common::hyper(&mut rng);
        let init = if ls { Init::LeastSquares } else { Init::Zeros };
        descends(&p, &hyper, init, 40)?;
    }

    #[test]
    fn variance_sign_symmetry(a in 0.01f64..10.0, b in 0.01f64..10.0, r in -100.0f64..100.0) {
        for kind in [VarianceKind::Eps, VarianceKind::Xi, VarianceKind::Z, VarianceKind::FDirect] {
            prop_assert_eq!(update_variance(kind, a, b, r), update_variance(kind, a, b, -r));
            prop_assert!(update_variance(kind, a, b, r) > 0.0);
        }
    }

    #[test]
    fn residual_shrinks_as_prior_flattens(seed in any::<u64>(), m in 1usize..7) {
        let mut rng = common::rng(seed);
        let h = DMatrix::identity(m, m) * 2.0 + common::uniform_matrix(&mut rng, m, m) * (0.5 / m as f64);
        let g = common::uniform_vector(&mut rng, m, -3.0, 3.0);
        let p = ForwardProblem::direct(g, h).unwrap();
        let v_eps = common::uniform_vector(&mut rng, m, 0.1, 3.0);
        let mut v_f = common::uniform_vector(&mut rng, m, 0.01, 0.1);
        let mut last = f64::INFINITY;
        for _ in 0..8 {
            let r = p.residual(&update_f(&p, &v_eps, &v_f, None).unwrap()).norm();
            prop_assert!(r < last || r < 1e-12);
            last = r;
            v_f *= 10.0;
        }
    }

    #[test]
    fn indirect_identity_transform_matches_direct_update(seed in any::<u64>(), n in 1usize..7, m in 1usize..7) {
        let mut rng = common::rng(seed);
        let direct = common::problem(&mut rng, n, m, false);
        let indirect = ForwardProblem::indirect(direct.g().clone(), direct.h().clone(), DMatrix::identity(m, m)).unwrap();
        let v_eps = common::uniform_vector(&mut rng, n, 0.1, 3.0);
        let v = common::uniform_vector(&mut rng, m, 0.1, 3.0);
        let f_direct = update_f(&direct, &v_eps, &v, None).unwrap();
        let f_indirect = update_f(&indirect, &v_eps, &v, Some(&DVector::zeros(m))).unwrap();
        prop_assert!(common::rel_diff(&f_direct, &f_indirect) < 1e-12);

        // z = f₀ adds V⁻¹f₀ to the right-hand side; checked against an LU solve
        let f0 = common::uniform_vector(&mut rng, m, -1.0, 1.0);
        let w_eps = DMatrix::from_diagonal(&v_eps.map(f64::recip));
        let w = v.map(f64::recip);
        let system = direct.h().transpose() * &w_eps * direct.h() + DMatrix::from_diagonal(&w);
        let rhs = direct.h().transpose() * &w_eps * direct.g() + w.component_mul(&f0);
        let oracle = system.lu().solve(&rhs).unwrap();
        let got = update_f(&indirect, &v_eps, &v, Some(&f0)).unwrap();
        prop_assert!(common::rel_diff(&got, &oracle) < 1e-10);
    }
}

#[test]
fn fixed_point_consistency() {
    let mut checked = 0;
    for seed in 0..12u64 {
        let mut rng = common::rng(seed);
        let indirect = seed % 2 == 0;
        let p = common::problem(&mut rng, 6, 5, indirect);
        let hyper = HyperParams::uniform(1.0, 0.5);
        let config = JmapConfig { max_iter: 20_000, tol_rel_f: 1e-13, tol_rel_l: 1e-15, init: Init::LeastSquares };
        let (s, trace) = solve_jmap(&p, &hyper, &config).unwrap();
        if !trace.converged {
            continue;
        }
        checked += 1;
        let t = iterate(&p, &hyper, &s).unwrap();
        assert!(common::rel_diff(&t.f_hat, &s.f_hat) < 1e-8, "seed {seed}");
        assert!(common::rel_diff(&t.v_eps, &s.v_eps) < 1e-8);
        assert!(common::rel_diff(&t.v_xi, &s.v_xi) < 1e-8);
        if indirect {
            let z = s.z_hat.as_ref().unwrap();
            let vz = s.v_z.as_ref().unwrap();
            let f = update_f(&p, &s.v_eps, &s.v_xi, Some(z)).unwrap();
            assert!(common::rel_diff(&f, &s.f_hat) < 1e-8);
            let z1 = update_z(&p, &s.v_xi, vz, &s.f_hat).unwrap();
            assert!(common::rel_diff(&z1, z) < 1e-8);
            let d = p.d().unwrap();
            let vxi = update_variances(VarianceKind::Xi, hyper.alpha_xi, hyper.beta_xi, &(&s.f_hat - d * z)).unwrap();
            assert!(common::rel_diff(&vxi, &s.v_xi) < 1e-8);
            let vz1 = update_variances(VarianceKind::Z, hyper.alpha_z, hyper.beta_z, z).unwrap();
            assert!(common::rel_diff(&vz1, vz) < 1e-8);
        }
    }
    assert!(checked >= 8, "only {checked} runs converged");
}

#[test]
fn direct_identity_example() {
    let p = ForwardProblem::direct(DVector::from_column_slice(&[1.0, 0.0, 0.0, 0.0]), DMatrix::identity(4, 4)).unwrap();
    let hyper = HyperParams::uniform(1.0, 1.0);
    let config = JmapConfig { max_iter: 50, tol_rel_f: 1e-300, tol_rel_l: 1e-300, init: Init::Zeros };
    let (s, trace) = solve_jmap(&p, &hyper, &config).unwrap();
    assert!(trace.iterations() <= 50);
    assert_eq!(trace.update_order, DIRECT_ORDER.to_vec());
    assert!(trace.criteria().windows(2).all(|w| w[1] <= w[0] + 1e-10 * w[0].abs()));
    assert!(s.f_hat.norm().is_finite());
    assert_eq!(s.kind(), ModelKind::Direct);
}

#[test]
fn noiseless_indirect_gaussian_example() {
    let h = generate_operator(&OperatorSpec { kind: OperatorKind::GaussianRandom, rows: 16, cols: 16, seed: 7 }).unwrap();
    let z = generate_sparse_signal(&SignalSpec { length: 16, sparsity: 3, amplitude_range: (1.0, 2.0), seed: 7 }).unwrap();
    let d = DMatrix::identity(16, 16);
    let f_true = &d * &z;
    let p = ForwardProblem::indirect(&h * &f_true, h, d).unwrap();
    let hyper = HyperParams::uniform(1.0, 1e-3);
    let start = initial_state(&p, &hyper, &Init::Zeros).unwrap();
    let start_err = (&start.f_hat - &f_true).norm() / f_true.norm();
    let (s, _) = solve_jmap(&p, &hyper, &JmapConfig::default()).unwrap();
    let err = (&s.f_hat - &f_true).norm() / f_true.norm();
    assert!(err < start_err, "{err} vs {start_err}");
    assert!(least_squares_estimate(&p).unwrap().iter().all(|x| x.is_finite()));
}
