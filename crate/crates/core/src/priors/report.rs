//! Numerical self-check of the prior toolkit: every identity and limit the
//! densities should satisfy, summarized as worst-case deviations.

use rand::Rng;
use rand_xoshiro::rand_core::SeedableRng;
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};

use super::bessel::bessel_k;
use super::gh::{gh_pdf, GhParams};
use super::gig::GigParams;
use super::limits::{limit_deviation, LimitCase, XGrid};
use super::mixture::{gh_marginal_quadrature, student_from_inverse_gamma, student_mixture_quadrature};
use super::reference::{reference_pdf, Reference};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    /// Seed of the random parameter draws; not part of the serialized form,
    /// callers set it from their own run seed.
    #[serde(skip)]
    pub seed: u64,
    pub student_nu: f64,
    pub laplace_b: f64,
    pub levels: Vec<f64>,
    pub grid: XGrid,
    pub bessel_draws: usize,
    pub identity_draws: usize,
    pub mixture_draws: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seed: 0,
            student_nu: 1.0,
            laplace_b: 1.0,
            levels: vec![1.0, 0.1, 0.01, 0.001],
            grid: XGrid::default(),
            bessel_draws: 50,
            identity_draws: 5,
            mixture_draws: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BesselReport {
    pub k_half_at_one: f64,
    /// `|K_{1/2}(1) − √(π/2)e⁻¹|`.
    pub k_half_at_one_error: f64,
    /// Worst relative `|K_ν − K_{−ν}|`.
    pub symmetry_max_rel: f64,
    /// Worst relative defect of `K_{ν+1} = K_{ν−1} + (2ν/x)K_ν`.
    pub recurrence_max_rel: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    pub case: LimitCase,
    pub levels: Vec<f64>,
    pub deviations: Vec<f64>,
    pub strictly_decreasing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorsReport {
    pub seed: u64,
    pub bessel: BesselReport,
    /// Worst `|GH(λ=1) − Hyperbolic|` over the draws.
    pub gh_hyperbolic_max_abs: f64,
    /// Worst `|GH(λ=−½) − NIG|` over the draws.
    pub gh_nig_max_abs: f64,
    /// Worst `|GH − ∫N·GIG|` over the draws.
    pub gh_mixture_max_abs: f64,
    /// Worst `|Student-t(2α, √(β/α)) − ∫N·IG(α, β)|`.
    pub student_mixture_max_abs: f64,
    pub limits: Vec<LimitReport>,
}

/// A GH parameter set with `|β| < α`, `δ > 0`.
pub fn random_gh<R: Rng>(rng: &mut R, lambda: Option<f64>) -> Result<GhParams> {
    let lambda = lambda.unwrap_or_else(|| rng.random_range(-3.0..3.0));
    let alpha = rng.random_range(0.5..3.0);
    let beta = alpha * rng.random_range(-0.8..0.8);
    let delta = rng.random_range(0.3..2.0);
    let mu = rng.random_range(-1.0..1.0);
    GhParams::new(lambda, alpha, beta, delta, mu)
}

/// `n` points evenly spaced over `[center − half_width, center + half_width]`.
pub fn centered_grid(center: f64, half_width: f64, n: usize) -> Vec<f64> {
    let step = 2.0 * half_width / (n - 1) as f64;
    (0..n).map(|i| center - half_width + i as f64 * step).collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

fn bessel_report<R: Rng>(rng: &mut R, draws: usize) -> Result<BesselReport> {
    let k_half = bessel_k(0.5, 1.0)?;
    let closed = (std::f64::consts::FRAC_PI_2).sqrt() * (-1.0f64).exp();
    let mut symmetry = 0.0_f64;
    let mut recurrence = 0.0_f64;
    for _ in 0..draws {
        let nu: f64 = rng.random_range(-20.0..20.0);
        let x: f64 = rng.random_range(0.05..50.0);
        symmetry = symmetry.max(rel(bessel_k(nu, x)?, bessel_k(-nu, x)?));
        let lhs = bessel_k(nu + 1.0, x)?;
        let rhs = bessel_k(nu - 1.0, x)? + 2.0 * nu / x * bessel_k(nu, x)?;
        recurrence = recurrence.max(rel(lhs, rhs));
    }
    Ok(BesselReport {
        k_half_at_one: k_half,
        k_half_at_one_error: (k_half - closed).abs(),
        symmetry_max_rel: symmetry,
        recurrence_max_rel: recurrence,
    })
}

fn special_case_max<R: Rng>(rng: &mut R, draws: usize, nig: bool) -> Result<f64> {
    let mut worst = 0.0_f64;
    for _ in 0..draws {
        let lambda = if nig { -0.5 } else { 1.0 };
        let p = random_gh(rng, Some(lambda))?;
        let (alpha, beta, delta, mu) = (p.alpha(), p.beta(), p.delta(), p.mu());
        let target = if nig {
            Reference::Nig { alpha, beta, delta, mu }
        } else {
            Reference::Hyperbolic { alpha, beta, delta, mu }
        };
        for x in centered_grid(mu, 10.0, 201) {
            worst = worst.max((gh_pdf(x, &p)? - reference_pdf(&target, x)?).abs());
        }
    }
    Ok(worst)
}

fn mixture_max<R: Rng>(rng: &mut R, draws: usize) -> Result<f64> {
    let mut worst = 0.0_f64;
    for _ in 0..draws {
        let p = random_gh(rng, None)?;
        let gig = GigParams::new(p.gamma() * p.gamma(), p.delta() * p.delta(), p.lambda())?;
        for x in centered_grid(p.mu(), 5.0, 21) {
            let q = gh_marginal_quadrature(x, p.mu(), p.beta(), &gig)?;
            worst = worst.max((q - gh_pdf(x, &p)?).abs());
        }
    }
    Ok(worst)
}

fn student_mixture_max<R: Rng>(rng: &mut R, draws: usize) -> Result<f64> {
    let mut worst = 0.0_f64;
    for _ in 0..draws {
        let alpha = rng.random_range(0.5..5.0);
        let beta = rng.random_range(0.5..5.0);
        let (nu, scale) = student_from_inverse_gamma(alpha, beta);
        let st = Reference::StudentT { nu, mu: 0.0, scale };
        for x in centered_grid(0.0, 5.0, 21) {
            worst = worst.max((student_mixture_quadrature(x, alpha, beta)? - reference_pdf(&st, x)?).abs());
        }
    }
    Ok(worst)
}

pub fn verify_priors(config: &VerifyConfig) -> Result<PriorsReport> {
    let mut rng = SplitMix64::seed_from_u64(config.seed);
    let bessel = bessel_report(&mut rng, config.bessel_draws)?;
    let gh_hyperbolic_max_abs = special_case_max(&mut rng, config.identity_draws, false)?;
    let gh_nig_max_abs = special_case_max(&mut rng, config.identity_draws, true)?;
    let gh_mixture_max_abs = mixture_max(&mut rng, config.mixture_draws)?;
    let student_mixture_max_abs = student_mixture_max(&mut rng, config.mixture_draws)?;
    let limits = [
        LimitCase::StudentTAlpha { nu: config.student_nu },
        LimitCase::LaplaceDelta { b: config.laplace_b },
    ]
    .iter()
    .map(|case| {
        let deviations = limit_deviation(case, &config.levels, &config.grid)?;
        Ok(LimitReport {
            case: *case,
            levels: config.levels.clone(),
            strictly_decreasing: deviations.windows(2).all(|w| w[1] < w[0]),
            deviations,
        })
    })
    .collect::<Result<Vec<_>>>()?;
    Ok(PriorsReport {
        seed: config.seed,
        bessel,
        gh_hyperbolic_max_abs,
        gh_nig_max_abs,
        gh_mixture_max_abs,
        student_mixture_max_abs,
        limits,
    })
}
