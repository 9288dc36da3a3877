//! Closed-form heavy-tailed densities used as sparsity priors and as
//! targets for the GH special and limiting cases.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::bessel::ln_bessel_k;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Reference {
    /// Location-scale Student-t with `nu` degrees of freedom.
    StudentT { nu: f64, mu: f64, scale: f64 },
    /// Student-t with one degree of freedom.
    Cauchy { mu: f64, scale: f64 },
    Laplace { mu: f64, b: f64 },
    /// `γ / (2αδK₁(δγ)) · exp(−α√(δ² + (x−μ)²) + β(x−μ))`.
    Hyperbolic { alpha: f64, beta: f64, delta: f64, mu: f64 },
    /// The `δ → 0` limit of GH, `λ > 0`.
    VarianceGamma { lambda: f64, alpha: f64, beta: f64, mu: f64 },
    /// Normal-Inverse Gaussian, GH with `λ = −½`.
    Nig { alpha: f64, beta: f64, delta: f64, mu: f64 },
    /// `β / (2αΓ(1/β)) · exp(−(|x−μ|/α)^β)`: scale `alpha`, shape `beta`.
    GenGaussian { mu: f64, alpha: f64, beta: f64 },
    /// `½ b k |x|^{k−1} exp(−b|x|^k)`, the Weibull density mirrored about 0.
    SymWeibull { k: f64, b: f64 },
    /// `|x| / (2σ²) · exp(−x²/(2σ²))`, i.e. `SymWeibull { k: 2, b: 1/(2σ²) }`.
    SymRayleigh { sigma: f64 },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be positive and finite, got {v}")))
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be finite, got {v}")))
    }
}

fn skewed(alpha: f64, beta: f64) -> Result<f64> {
    positive("alpha", alpha)?;
    finite("beta", beta)?;
    if beta.abs() >= alpha {
        return Err(Error::domain(format!("need |β| < α, got α = {alpha}, β = {beta}")));
    }
    Ok(((alpha - beta) * (alpha + beta)).sqrt())
}

impl Reference {
    pub fn name(&self) -> &'static str {
        match self {
            Reference::StudentT { .. } => "student_t",
            Reference::Cauchy { .. } => "cauchy",
            Reference::Laplace { .. } => "laplace",
            Reference::Hyperbolic { .. } => "hyperbolic",
            Reference::VarianceGamma { .. } => "variance_gamma",
            Reference::Nig { .. } => "nig",
            Reference::GenGaussian { .. } => "gen_gaussian",
            Reference::SymWeibull { .. } => "sym_weibull",
            Reference::SymRayleigh { .. } => "sym_rayleigh",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Reference::StudentT { nu, mu, scale } => {
                positive("nu", nu)?;
                finite("mu", mu)?;
                positive("scale", scale)
            }
            Reference::Cauchy { mu, scale } => {
                finite("mu", mu)?;
                positive("scale", scale)
            }
            Reference::Laplace { mu, b } => {
                finite("mu", mu)?;
                positive("b", b)
            }
            Reference::Hyperbolic { alpha, beta, delta, mu } | Reference::Nig { alpha, beta, delta, mu } => {
                skewed(alpha, beta)?;
                positive("delta", delta)?;
                finite("mu", mu)
            }
            Reference::VarianceGamma { lambda, alpha, beta, mu } => {
                positive("lambda", lambda)?;
                skewed(alpha, beta)?;
                finite("mu", mu)
            }
            Reference::GenGaussian { mu, alpha, beta } => {
                finite("mu", mu)?;
                positive("alpha", alpha)?;
                positive("beta", beta)
            }
            Reference::SymWeibull { k, b } => {
                positive("k", k)?;
                positive("b", b)
            }
            Reference::SymRayleigh { sigma } => positive("sigma", sigma),
        }
    }
}

fn ln_student(nu: f64, mu: f64, scale: f64, x: f64) -> f64 {
    let t = (x - mu) / scale;
    ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu) - 0.5 * (PI * nu).ln() - scale.ln()
        - 0.5 * (nu + 1.0) * (t * t / nu).ln_1p()
}

fn ln_sym_weibull(k: f64, b: f64, x: f64) -> Result<f64> {
    let ax = x.abs();
    if ax == 0.0 {
        return if k < 1.0 {
            Err(Error::Singular(x))
        } else if k == 1.0 {
            Ok((0.5 * b).ln())
        } else {
            Ok(f64::NEG_INFINITY)
        };
    }
    Ok((0.5 * b * k).ln() + (k - 1.0) * ax.ln() - b * ax.powf(k))
}

fn ln_variance_gamma(lambda: f64, alpha: f64, beta: f64, mu: f64, x: f64) -> Result<f64> {
    let gamma = skewed(alpha, beta)?;
    let t = x - mu;
    let a = t.abs();
    let order = lambda - 0.5;
    let norm = 2.0 * lambda * gamma.ln() - 0.5 * PI.ln() - ln_gamma(lambda) - order * (2.0 * alpha).ln();
    if a == 0.0 {
        // |t|^ν K_ν(α|t|) → Γ(ν) 2^{ν−1} α^{−ν} for ν > 0
        if order <= 0.0 {
            return Err(Error::Singular(x));
        }
        return Ok(norm + ln_gamma(order) + (order - 1.0) * std::f64::consts::LN_2 - order * alpha.ln());
    }
    Ok(norm + order * a.ln() + ln_bessel_k(order, alpha * a)? + beta * t)
}

/// Log density of `family` at `x`.
///
/// Returns [`Error::Singular`] where the density is unbounded at `x` (the
/// mode of a Variance-Gamma with `λ ≤ ½`, a Weibull with `k < 1` at 0).
pub fn ln_reference_pdf(family: &Reference, x: f64) -> Result<f64> {
    family.validate()?;
    finite("x", x)?;
    match *family {
        Reference::StudentT { nu, mu, scale } => Ok(ln_student(nu, mu, scale, x)),
        Reference::Cauchy { mu, scale } => Ok(ln_student(1.0, mu, scale, x)),
        Reference::Laplace { mu, b } => Ok(-(2.0 * b).ln() - (x - mu).abs() / b),
        Reference::Hyperbolic { alpha, beta, delta, mu } => {
            let gamma = skewed(alpha, beta)?;
            let t = x - mu;
            Ok(gamma.ln() - (2.0 * alpha * delta).ln() - ln_bessel_k(1.0, delta * gamma)?
                - alpha * delta.hypot(t)
                + beta * t)
        }
        Reference::VarianceGamma { lambda, alpha, beta, mu } => {
            ln_variance_gamma(lambda, alpha, beta, mu, x)
        }
        Reference::Nig { alpha, beta, delta, mu } => {
            let gamma = skewed(alpha, beta)?;
            let t = x - mu;
            let q = delta.hypot(t);
            Ok((alpha * delta / (PI * q)).ln() + ln_bessel_k(1.0, alpha * q)? + delta * gamma + beta * t)
        }
        Reference::GenGaussian { mu, alpha, beta } => Ok((beta / (2.0 * alpha)).ln()
            - ln_gamma(1.0 / beta)
            - ((x - mu).abs() / alpha).powf(beta)),
        Reference::SymWeibull { k, b } => ln_sym_weibull(k, b, x),
        Reference::SymRayleigh { sigma } => ln_sym_weibull(2.0, 0.5 / (sigma * sigma), x),
    }
}

pub fn reference_pdf(family: &Reference, x: f64) -> Result<f64> {
    ln_reference_pdf(family, x).map(f64::exp)
}
