//! Generalized Inverse Gaussian mixing density.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::bessel::ln_bessel_k;
use crate::error::{Error, Result};

/// `GIG(v | γ², δ², λ) ∝ v^{λ−1} exp(−½(γ²v + δ²/v))`.
///
/// `δ² = 0` is the Gamma limit (needs `λ > 0`) and `γ² = 0` the
/// Inverse-Gamma limit (needs `λ < 0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GigParams {
    gamma_sq: f64,
    delta_sq: f64,
    lambda: f64,
}

impl GigParams {
    pub fn new(gamma_sq: f64, delta_sq: f64, lambda: f64) -> Result<Self> {
        let finite = gamma_sq.is_finite() && delta_sq.is_finite() && lambda.is_finite();
        if !finite || gamma_sq < 0.0 || delta_sq < 0.0 {
            return Err(Error::domain(format!(
                "GIG needs finite γ² ≥ 0 and δ² ≥ 0, got γ² = {gamma_sq}, δ² = {delta_sq}, λ = {lambda}"
            )));
        }
        match (gamma_sq == 0.0, delta_sq == 0.0) {
            (true, true) => Err(Error::domain("GIG with γ² = δ² = 0 is improper")),
            (false, true) if lambda <= 0.0 => Err(Error::domain(format!(
                "GIG with δ² = 0 needs λ > 0, got {lambda}"
            ))),
            (true, false) if lambda >= 0.0 => Err(Error::domain(format!(
                "GIG with γ² = 0 needs λ < 0, got {lambda}"
            ))),
            _ => Ok(GigParams {
                gamma_sq,
                delta_sq,
                lambda,
            }),
        }
    }

    /// The Inverse-Gamma mixing law `IG(shape, scale)` as a GIG.
    pub fn inverse_gamma(shape: f64, scale: f64) -> Result<Self> {
        GigParams::new(0.0, 2.0 * scale, -shape)
    }

    pub fn gamma_sq(&self) -> f64 {
        self.gamma_sq
    }

    pub fn delta_sq(&self) -> f64 {
        self.delta_sq
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

pub fn ln_gig_pdf(v: f64, params: &GigParams) -> Result<f64> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::domain(format!("GIG density needs v > 0, got {v}")));
    }
    let GigParams {
        gamma_sq,
        delta_sq,
        lambda,
    } = *params;
    let ln_v = v.ln();
    if delta_sq == 0.0 {
        // Gamma(shape λ, rate γ²/2)
        let rate = 0.5 * gamma_sq;
        return Ok(lambda * rate.ln() - ln_gamma(lambda) + (lambda - 1.0) * ln_v - rate * v);
    }
    if gamma_sq == 0.0 {
        // Inverse-Gamma(shape −λ, scale δ²/2)
        let (shape, scale) = (-lambda, 0.5 * delta_sq);
        return Ok(shape * scale.ln() - ln_gamma(shape) - (shape + 1.0) * ln_v - scale / v);
    }
    let (gamma, delta) = (gamma_sq.sqrt(), delta_sq.sqrt());
    Ok(lambda * (gamma / delta).ln()
        - std::f64::consts::LN_2
        - ln_bessel_k(lambda, delta * gamma)?
        + (lambda - 1.0) * ln_v
        - 0.5 * (gamma_sq * v + delta_sq / v))
}

pub fn gig_pdf(v: f64, params: &GigParams) -> Result<f64> {
    ln_gig_pdf(v, params).map(f64::exp)
}
