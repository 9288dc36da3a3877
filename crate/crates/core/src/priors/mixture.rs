//! Scale-mixture integrals evaluated by quadrature, the independent check on
//! the closed-form GH and Student-t densities.

use std::f64::consts::PI;

use super::gig::{ln_gig_pdf, GigParams};
use crate::error::Result;
use crate::quadrature::{integrate_positive_log, Tolerance};

/// Absolute tolerance of the mixture quadrature.
pub const MIXTURE_ABS_TOL: f64 = 1e-9;

/// `∫₀^∞ N(x | μ + βv, v) GIG(v | γ², δ², λ) dv`.
pub fn gh_marginal_quadrature(x: f64, mu: f64, beta: f64, gig: &GigParams) -> Result<f64> {
    let t = x - mu;
    let ln_integrand = |v: f64| {
        let r = t - beta * v;
        let ln_normal = -0.5 * (2.0 * PI * v).ln() - 0.5 * r * r / v;
        match ln_gig_pdf(v, gig) {
            Ok(l) => ln_normal + l,
            Err(_) => f64::NEG_INFINITY,
        }
    };
    let tol = Tolerance {
        abs: MIXTURE_ABS_TOL,
        rel: 1e-12,
        max_subdivisions: 5000,
    };
    integrate_positive_log(ln_integrand, tol).map(|e| e.value)
}

/// `∫₀^∞ N(x | 0, v) IG(v | α, β) dv` by quadrature.
///
/// In closed form this is a Student-t with `ν = 2α` degrees of freedom and
/// scale `√(β/α)`.
pub fn student_mixture_quadrature(x: f64, alpha: f64, beta: f64) -> Result<f64> {
    gh_marginal_quadrature(x, 0.0, 0.0, &GigParams::inverse_gamma(alpha, beta)?)
}

/// Student-t parameters `(ν, scale)` of the Normal/Inverse-Gamma(α, β)
/// mixture.
pub fn student_from_inverse_gamma(alpha: f64, beta: f64) -> (f64, f64) {
    (2.0 * alpha, (beta / alpha).sqrt())
}
