use bsi_core::priors::report::{centered_grid, random_gh};
use bsi_core::priors::{
    bessel_k, gh_marginal_quadrature, gh_pdf, gig_pdf, ln_bessel_k, reference_pdf, GhParams, GigParams, Reference,
};
use bsi_core::quadrature::{integrate_positive_log, integrate_real_line, Tolerance};
use proptest::prelude::*;
use rand_xoshiro::rand_core::SeedableRng;
use rand_xoshiro::SplitMix64;

fn gh_from_seed(seed: u64, lambda: Option<f64>) -> GhParams {
    random_gh(&mut SplitMix64::seed_from_u64(seed), lambda).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn bessel_symmetry(nu in -60.0f64..60.0, x in 1e-8f64..700.0) {
        prop_assert_eq!(ln_bessel_k(nu, x).unwrap(), ln_bessel_k(-nu, x).unwrap());
    }

    #[test]
    fn bessel_recurrence(nu in -40.0f64..40.0, x in 0.1f64..200.0) {
        let lhs = bessel_k(nu + 1.0, x).unwrap();
        let a = bessel_k(nu - 1.0, x).unwrap();
        let b = 2.0 * nu / x * bessel_k(nu, x).unwrap();
        // relative to the largest term, since the sum cancels for ν < 0
        let scale = lhs.abs().max(a.abs()).max(b.abs());
        prop_assert!((lhs - (a + b)).abs() <= 1e-9 * scale);
    }

    #[test]
    fn gig_normalizes(g2 in 0.05f64..5.0, d2 in 0.05f64..5.0, lambda in -4.0f64..4.0) {
        let p = GigParams::new(g2, d2, lambda).unwrap();
        let total = integrate_positive_log(|v| gig_pdf(v, &p).unwrap().ln(), Tolerance::default()).unwrap();
        prop_assert!((total.value - 1.0).abs() < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn gh_nonnegative_and_normalized(seed in any::<u64>()) {
        let p = gh_from_seed(seed, None);
        for x in centered_grid(p.mu(), 30.0, 61) {
            prop_assert!(gh_pdf(x, &p).unwrap() >= 0.0);
        }
        let total = integrate_real_line(|x| gh_pdf(x, &p).unwrap(), Tolerance::default()).unwrap();
        prop_assert!((total.value - 1.0).abs() < 1e-6, "{:?}: {}", p, total.value);
    }

    #[test]
    fn gh_special_cases_exact(seed in any::<u64>()) {
        let p = gh_from_seed(seed, Some(1.0));
        let hyp = Reference::Hyperbolic { alpha: p.alpha(), beta: p.beta(), delta: p.delta(), mu: p.mu() };
        for x in centered_grid(p.mu(), 10.0, 201) {
            prop_assert!((gh_pdf(x, &p).unwrap() - reference_pdf(&hyp, x).unwrap()).abs() <= 1e-10);
        }
        let p = gh_from_seed(seed, Some(-0.5));
        let nig = Reference::Nig { alpha: p.alpha(), beta: p.beta(), delta: p.delta(), mu: p.mu() };
        for x in centered_grid(p.mu(), 10.0, 201) {
            prop_assert!((gh_pdf(x, &p).unwrap() - reference_pdf(&nig, x).unwrap()).abs() <= 1e-10);
        }
    }

    #[test]
    fn gh_variance_gamma_limit(seed in any::<u64>(), lambda in 0.1f64..4.0) {
        let base = gh_from_seed(seed, Some(lambda));
        let p = GhParams::new(lambda, base.alpha(), base.beta(), 1e-8, base.mu()).unwrap();
        let vg = Reference::VarianceGamma { lambda, alpha: p.alpha(), beta: p.beta(), mu: p.mu() };
        for x in centered_grid(p.mu(), 8.0, 161) {
            if (x - p.mu()).abs() < 0.05 {
                continue;
            }
            prop_assert!((gh_pdf(x, &p).unwrap() - reference_pdf(&vg, x).unwrap()).abs() <= 1e-4);
        }
    }

    #[test]
    fn mixture_identity(seed in any::<u64>()) {
        let p = gh_from_seed(seed, None);
        let gig = GigParams::new(p.gamma() * p.gamma(), p.delta() * p.delta(), p.lambda()).unwrap();
        for x in centered_grid(p.mu(), 5.0, 21) {
            let q = gh_marginal_quadrature(x, p.mu(), p.beta(), &gig).unwrap();
            prop_assert!((q - gh_pdf(x, &p).unwrap()).abs() <= 1e-6);
        }
    }
}
