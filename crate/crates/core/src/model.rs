//! Domain types of the hierarchical model and the JMAP criterion.
//!
//! Indirect (three-level) model, with diagonal variance matrices:
//!
//! ```text
//! g | f, v_ε   ~ N(Hf, V_ε)        v_εi ~ IG(α_ε, β_ε)
//! f | z, v_ξ   ~ N(Dz, V_ξ)        v_ξj ~ IG(α_ξ, β_ξ)
//! z | v_z      ~ N(0, V_z)         v_zj ~ IG(α_z, β_z)
//! ```
//!
//! The direct (two-level) model drops `z` and places `f | v_f ~ N(0, V_f)`
//! with `v_fj ~ IG(α_f, β_f)`.

use std::time::Duration;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Sparsity on `f` itself.
    Direct,
    /// Sparsity on `z` through `f = Dz + ξ`.
    Indirect,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Direct => "direct",
            ModelKind::Indirect => "indirect",
        }
    }
}

/// Observations `g` (length N), forward operator `H` (N×M) and the optional
/// sparsifying transform `D` (M×M).
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardProblem {
    g: DVector<f64>,
    h: DMatrix<f64>,
    d: Option<DMatrix<f64>>,
}

impl ForwardProblem {
    pub fn new(g: DVector<f64>, h: DMatrix<f64>, d: Option<DMatrix<f64>>) -> Result<Self> {
        let problem = ForwardProblem { g, h, d };
        problem.check()?;
        Ok(problem)
    }

    pub fn direct(g: DVector<f64>, h: DMatrix<f64>) -> Result<Self> {
        Self::new(g, h, None)
    }

    pub fn indirect(g: DVector<f64>, h: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        Self::new(g, h, Some(d))
    }

    fn check(&self) -> Result<()> {
        let (n, m) = self.h.shape();
        if n == 0 || m == 0 {
            return Err(Error::DimensionMismatch(format!(
                "H must be non-empty, got {n}x{m}"
            )));
        }
        if self.g.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "g has length {} but H has {n} rows",
                self.g.len()
            )));
        }
        if let Some(d) = &self.d {
            if d.shape() != (m, m) {
                return Err(Error::DimensionMismatch(format!(
                    "D must be {m}x{m}, got {}x{}",
                    d.nrows(),
                    d.ncols()
                )));
            }
            if d.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("D"));
            }
        }
        if self.h.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("H"));
        }
        if self.g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("g"));
        }
        Ok(())
    }

    pub fn g(&self) -> &DVector<f64> {
        &self.g
    }

    pub fn h(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn d(&self) -> Option<&DMatrix<f64>> {
        self.d.as_ref()
    }

    /// Number of observations N.
    pub fn n_obs(&self) -> usize {
        self.h.nrows()
    }

    /// Number of unknowns M.
    pub fn n_unknowns(&self) -> usize {
        self.h.ncols()
    }

    pub fn kind(&self) -> ModelKind {
        if self.d.is_some() {
            ModelKind::Indirect
        } else {
            ModelKind::Direct
        }
    }

    pub(crate) fn require_indirect(&self) -> Result<&DMatrix<f64>> {
        self.d.as_ref().ok_or(Error::ModelMismatch {
            expected: "indirect",
        })
    }

    pub(crate) fn require_direct(&self) -> Result<()> {
        match self.d {
            None => Ok(()),
            Some(_) => Err(Error::ModelMismatch { expected: "direct" }),
        }
    }

    /// `g - Hf`.
    pub fn residual(&self, f: &DVector<f64>) -> DVector<f64> {
        &self.g - &self.h * f
    }
}

/// Inverse-Gamma hyperparameters `(α, β)` for every variance family.
///
/// `alpha_xi`/`beta_xi` and `alpha_z`/`beta_z` are used by the indirect
/// model only, `alpha_f`/`beta_f` by the direct model only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperParams {
    pub alpha_eps: f64,
    pub beta_eps: f64,
    pub alpha_xi: f64,
    pub beta_xi: f64,
    pub alpha_z: f64,
    pub beta_z: f64,
    pub alpha_f: f64,
    pub beta_f: f64,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams::uniform(1.0, 1.0)
    }
}

impl HyperParams {
    /// Same `(α, β)` for every family.
    pub fn uniform(alpha: f64, beta: f64) -> Self {
        HyperParams {
            alpha_eps: alpha,
            beta_eps: beta,
            alpha_xi: alpha,
            beta_xi: beta,
            alpha_z: alpha,
            beta_z: beta,
            alpha_f: alpha,
            beta_f: beta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("alpha_eps", self.alpha_eps),
            ("beta_eps", self.beta_eps),
            ("alpha_xi", self.alpha_xi),
            ("beta_xi", self.beta_xi),
            ("alpha_z", self.alpha_z),
            ("beta_z", self.beta_z),
            ("alpha_f", self.alpha_f),
            ("beta_f", self.beta_f),
        ];
        for (name, value) in fields {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::NonPositiveHyper { name, value });
            }
        }
        Ok(())
    }

    /// `(α, β)` of the prior on the variances of `f`'s Gaussian block:
    /// `(α_ξ, β_ξ)` for the indirect model, `(α_f, β_f)` for the direct one.
    pub fn f_block(&self, kind: ModelKind) -> (f64, f64) {
        match kind {
            ModelKind::Indirect => (self.alpha_xi, self.beta_xi),
            ModelKind::Direct => (self.alpha_f, self.beta_f),
        }
    }
}

/// Checks every invariant of `problem` and `hyper`.
pub fn validate_problem(problem: &ForwardProblem, hyper: &HyperParams) -> Result<()> {
    problem.check()?;
    hyper.validate()
}

/// Variational factors kept alongside the point estimates by the VBA solver.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalFactors {
    pub sigma_f: crate::vba::Covariance,
    pub sigma_z: Option<crate::vba::Covariance>,
    pub ig_eps: crate::vba::IgFamily,
    /// ξ-family (indirect) or f-family (direct).
    pub ig_xi: crate::vba::IgFamily,
    pub ig_z: Option<crate::vba::IgFamily>,
}

/// Current iterate of either solver.
///
/// For VBA runs the variance vectors hold `⟨v⁻¹⟩⁻¹ = β̂/α̂`, the effective
/// variances entering the Gaussian updates, and `factors` holds the full
/// variational parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub f_hat: DVector<f64>,
    /// Indirect model only.
    pub z_hat: Option<DVector<f64>>,
    pub v_eps: DVector<f64>,
    /// Variances of `f`'s Gaussian block: `v_ξ` (indirect) or `v_f` (direct).
    pub v_xi: DVector<f64>,
    /// Indirect model only.
    pub v_z: Option<DVector<f64>>,
    pub factors: Option<VariationalFactors>,
}

impl SolverState {
    pub fn kind(&self) -> ModelKind {
        if self.z_hat.is_some() {
            ModelKind::Indirect
        } else {
            ModelKind::Direct
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    /// Criterion value; JMAP only.
    pub criterion: Option<f64>,
    /// Relative change of `f̂` against the previous record; `None` at iteration 0.
    pub rel_change_f: Option<f64>,
    pub rel_change_z: Option<f64>,
    /// Wall time since the solver started.
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunTrace {
    pub records: Vec<TraceRecord>,
    /// Block update order of one iteration, e.g. `["f", "z", "v_xi", "v_eps", "v_z"]`.
    pub update_order: Vec<&'static str>,
    /// True when the stopping rule fired before `max_iter`.
    pub converged: bool,
}

impl RunTrace {
    pub fn new(update_order: &[&'static str]) -> Self {
        RunTrace {
            records: Vec::new(),
            update_order: update_order.to_vec(),
            converged: false,
        }
    }

    pub fn push(&mut self, record: TraceRecord) {
        debug_assert!(self
            .records
            .last()
            .map_or(record.iter == 0, |last| record.iter > last.iter));
        self.records.push(record);
    }

    /// Number of completed iterations (records after the initial one).
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn criteria(&self) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.criterion).collect()
    }
}

fn check_variances(name: &'static str, v: &DVector<f64>, len: usize) -> Result<()> {
    if v.len() != len {
        return Err(Error::DimensionMismatch(format!(
            "{name} has length {} but {len} was expected",
            v.len()
        )));
    }
    match v.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
        Some(index) => Err(Error::NonPositiveVariance {
            name,
            index,
            value: v[index],
        }),
        None => Ok(()),
    }
}

/// `½ rᵀ V⁻¹ r + (α + 3/2) Σ ln v + Σ β / v`
fn gaussian_ig_block(residual: &DVector<f64>, v: &DVector<f64>, alpha: f64, beta: f64) -> f64 {
    residual
        .iter()
        .zip(v.iter())
        .map(|(&r, &vi)| 0.5 * r * r / vi + (alpha + 1.5) * vi.ln() + beta / vi)
        .sum()
}

/// Negative log posterior up to an additive constant.
///
/// Each Gaussian level contributes `½ rᵀ V⁻¹ r` with its residual (`g − Hf`,
/// `f − Dz`, `z`; direct model: `g − Hf`, `f`) and each variance family
/// `(α + 3/2) Σ ln v + Σ β / v`.
pub fn neg_log_posterior(
    state: &SolverState,
    problem: &ForwardProblem,
    hyper: &HyperParams,
) -> Result<f64> {
    let (n, m) = (problem.n_obs(), problem.n_unknowns());
    if state.f_hat.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "f has length {} but M = {m}",
            state.f_hat.len()
        )));
    }
    check_variances("v_eps", &state.v_eps, n)?;
    check_variances("v_xi", &state.v_xi, m)?;

    let mut total = gaussian_ig_block(
        &problem.residual(&state.f_hat),
        &state.v_eps,
        hyper.alpha_eps,
        hyper.beta_eps,
    );
    match problem.d() {
        Some(d) => {
            let (z, v_z) = match (&state.z_hat, &state.v_z) {
                (Some(z), Some(v_z)) => (z, v_z),
                _ => {
                    return Err(Error::ModelMismatch {
                        expected: "indirect",
                    })
                }
            };
            if z.len() != m {
                return Err(Error::DimensionMismatch(format!(
                    "z has length {} but M = {m}",
                    z.len()
                )));
            }
            check_variances("v_z", v_z, m)?;
            total += gaussian_ig_block(
                &(&state.f_hat - d * z),
                &state.v_xi,
                hyper.alpha_xi,
                hyper.beta_xi,
            );
            total += gaussian_ig_block(z, v_z, hyper.alpha_z, hyper.beta_z);
        }
        None => {
            if state.z_hat.is_some() || state.v_z.is_some() {
                return Err(Error::ModelMismatch { expected: "direct" });
            }
            total += gaussian_ig_block(&state.f_hat, &state.v_xi, hyper.alpha_f, hyper.beta_f);
        }
    }
    Ok(total)
}
