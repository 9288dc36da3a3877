//! Generalized Hyperbolic density.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::bessel::ln_bessel_k;
use crate::error::{Error, Result};

/// `GH(λ, α, β, δ, μ)`, the Normal variance-mean mixture
/// `x | v ~ N(μ + βv, v)` with `v ~ GIG(γ², δ², λ)`, `γ² = α² − β²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GhParams {
    lambda: f64,
    alpha: f64,
    beta: f64,
    delta: f64,
    mu: f64,
}

impl GhParams {
    pub fn new(lambda: f64, alpha: f64, beta: f64, delta: f64, mu: f64) -> Result<Self> {
        if ![lambda, alpha, beta, delta, mu].iter().all(|v| v.is_finite()) {
            return Err(Error::domain("GH parameters must be finite"));
        }
        if alpha < 0.0 || delta < 0.0 || beta.abs() > alpha {
            return Err(Error::domain(format!(
                "GH needs α ≥ |β| and δ ≥ 0, got α = {alpha}, β = {beta}, δ = {delta}"
            )));
        }
        Ok(GhParams {
            lambda,
            alpha,
            beta,
            delta,
            mu,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// `√(α² − β²)`.
    pub fn gamma(&self) -> f64 {
        ((self.alpha - self.beta) * (self.alpha + self.beta)).sqrt()
    }
}

/// `ln GH(x)`:
/// `λ ln(γ/δ) − ½ ln 2π − ln K_λ(δγ) + ln K_{λ−½}(αq) + (λ−½) ln(q/α) + β(x−μ)`
/// with `q = √(δ² + (x−μ)²)`.
pub fn ln_gh_pdf(x: f64, params: &GhParams) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain(format!("GH density at non-finite x = {x}")));
    }
    let GhParams {
        lambda,
        alpha,
        beta,
        delta,
        mu,
    } = *params;
    let gamma = params.gamma();
    if !(delta * gamma > 0.0) {
        return Err(Error::domain(format!(
            "GH density needs δγ > 0, got δ = {delta}, γ = {gamma}"
        )));
    }
    let t = x - mu;
    let q = delta.hypot(t);
    Ok(lambda * (gamma / delta).ln() - 0.5 * (2.0 * PI).ln() - ln_bessel_k(lambda, delta * gamma)?
        + ln_bessel_k(lambda - 0.5, alpha * q)?
        + (lambda - 0.5) * (q / alpha).ln()
        + beta * t)
}

pub fn gh_pdf(x: f64, params: &GhParams) -> Result<f64> {
    ln_gh_pdf(x, params).map(f64::exp)
}
