//! Joint MAP estimation by alternating exact block minimization of
//! [`neg_log_posterior`].
//!
//! Each block update is the closed-form minimizer of the criterion with the
//! other blocks held fixed, so the criterion never increases across an
//! iteration.

use std::time::Instant;

use log::{debug, warn};
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{add_diagonal, relative_change, spd_solve, weighted_at_b, weighted_gram};
use crate::model::{
    neg_log_posterior, validate_problem, ForwardProblem, HyperParams, ModelKind, RunTrace,
    SolverState, TraceRecord,
};

/// Update order of one indirect-model iteration.
pub const INDIRECT_ORDER: [&str; 5] = ["f", "z", "v_xi", "v_eps", "v_z"];
/// Update order of one direct-model iteration.
pub const DIRECT_ORDER: [&str; 3] = ["v_f", "v_eps", "f"];

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// `f̂ = 0`, `ẑ = 0` and every variance at its zero-residual value `β/(α + 3/2)`.
    Zeros,
    /// Minimum-norm least squares `f̂ = H⁺g` (and `ẑ = D⁺f̂`), variances
    /// set from the resulting residuals.
    LeastSquares,
    /// Given `f̂`, with `ẑ = D⁺f̂` and variances from the residuals.
    Provided(DVector<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct JmapConfig {
    pub max_iter: usize,
    /// Stop once the relative change of `f̂` ...
    pub tol_rel_f: f64,
    /// ... and the relative decrease of the criterion both fall below these.
    pub tol_rel_l: f64,
    pub init: Init,
}

impl Default for JmapConfig {
    fn default() -> Self {
        JmapConfig {
            max_iter: 200,
            tol_rel_f: 1e-6,
            tol_rel_l: 1e-9,
            init: Init::Zeros,
        }
    }
}

impl JmapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be at least 1".into()));
        }
        if !(self.tol_rel_f > 0.0 && self.tol_rel_l > 0.0) {
            return Err(Error::InvalidConfig(
                "tolerances must be strictly positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarianceKind {
    /// Noise variances, residual `gᵢ − Hᵢf̂`.
    Eps,
    /// Indirect-model `f` variances, residual `f̂ⱼ − Dⱼẑ`.
    Xi,
    /// Latent variances, residual `ẑⱼ`.
    Z,
    /// Direct-model `f` variances, residual `f̂ⱼ`.
    FDirect,
}

/// Minimizer of `(α + 3/2) ln v + (β + r²/2) / v`.
///
/// The same formula serves every family; `kind` only documents which
/// residual is expected.
pub fn update_variance(_kind: VarianceKind, alpha: f64, beta: f64, residual: f64) -> f64 {
    (beta + 0.5 * residual * residual) / (alpha + 1.5)
}

pub fn update_variances(
    kind: VarianceKind,
    alpha: f64,
    beta: f64,
    residuals: &DVector<f64>,
) -> Result<DVector<f64>> {
    let v = residuals.map(|r| update_variance(kind, alpha, beta, r));
    if v.iter().all(|x| x.is_finite() && *x > 0.0) {
        Ok(v)
    } else {
        Err(Error::NonFinite("variance update"))
    }
}

fn check_len(name: &str, v: &DVector<f64>, len: usize) -> Result<()> {
    if v.len() == len {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!(
            "{name} has length {} but {len} was expected",
            v.len()
        )))
    }
}

/// Exact minimizer over `f`:
/// `(HᵀV_ε⁻¹H + V_ξ⁻¹) f̂ = HᵀV_ε⁻¹g + V_ξ⁻¹Dz`.
///
/// `z` must be given for the indirect model and omitted for the direct model,
/// where `v_xi` holds `v_f` and the `Dz` term vanishes.
pub fn update_f(
    problem: &ForwardProblem,
    v_eps: &DVector<f64>,
    v_xi: &DVector<f64>,
    z: Option<&DVector<f64>>,
) -> Result<DVector<f64>> {
    check_len("v_eps", v_eps, problem.n_obs())?;
    check_len("v_xi", v_xi, problem.n_unknowns())?;
    let w_eps = v_eps.map(f64::recip);
    let w_xi = v_xi.map(f64::recip);
    let mut system = weighted_gram(problem.h(), &w_eps);
    add_diagonal(&mut system, &w_xi);
    let mut rhs = weighted_at_b(problem.h(), &w_eps, problem.g());
    match (problem.d(), z) {
        (Some(d), Some(z)) => {
            check_len("z", z, problem.n_unknowns())?;
            rhs += w_xi.component_mul(&(d * z));
        }
        (None, None) => {}
        (Some(_), None) => {
            return Err(Error::ModelMismatch {
                expected: "indirect",
            })
        }
        (None, Some(_)) => return Err(Error::ModelMismatch { expected: "direct" }),
    }
    spd_solve(system, &rhs)
}

/// Exact minimizer over `z`: `(DᵀV_ξ⁻¹D + V_z⁻¹) ẑ = DᵀV_ξ⁻¹f`.
pub fn update_z(
    problem: &ForwardProblem,
    v_xi: &DVector<f64>,
    v_z: &DVector<f64>,
    f: &DVector<f64>,
) -> Result<DVector<f64>> {
    let d = problem.require_indirect()?;
    let m = problem.n_unknowns();
    check_len("v_xi", v_xi, m)?;
    check_len("v_z", v_z, m)?;
    check_len("f", f, m)?;
    let w_xi = v_xi.map(f64::recip);
    let mut system = weighted_gram(d, &w_xi);
    add_diagonal(&mut system, &v_z.map(f64::recip));
    spd_solve(system, &weighted_at_b(d, &w_xi, f))
}

fn pseudo_inverse_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let svd = a.clone().svd(true, true);
    let cutoff = svd.singular_values.max() * f64::EPSILON * a.nrows().max(a.ncols()) as f64;
    svd.solve(b, cutoff)
        .map_err(|_| Error::SingularSystem)
}

/// Point estimate `H⁺g`, the baseline used by [`Init::LeastSquares`].
pub fn least_squares_estimate(problem: &ForwardProblem) -> Result<DVector<f64>> {
    pseudo_inverse_solve(problem.h(), problem.g())
}

/// Starting state for `init`.
pub fn initial_state(
    problem: &ForwardProblem,
    hyper: &HyperParams,
    init: &Init,
) -> Result<SolverState> {
    let (n, m) = (problem.n_obs(), problem.n_unknowns());
    let kind = problem.kind();
    let (alpha_f, beta_f) = hyper.f_block(kind);
    let f0 = match init {
        Init::Zeros => {
            let zero_residual = |alpha: f64, beta: f64, len: usize| {
                DVector::from_element(len, beta / (alpha + 1.5))
            };
            return Ok(SolverState {
                f_hat: DVector::zeros(m),
                z_hat: problem.d().map(|_| DVector::zeros(m)),
                v_eps: zero_residual(hyper.alpha_eps, hyper.beta_eps, n),
                v_xi: zero_residual(alpha_f, beta_f, m),
                v_z: problem
                    .d()
                    .map(|_| zero_residual(hyper.alpha_z, hyper.beta_z, m)),
                factors: None,
            });
        }
        Init::LeastSquares => least_squares_estimate(problem)?,
        Init::Provided(f) => {
            check_len("initial f", f, m)?;
            if f.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("initial f"));
            }
            f.clone()
        }
    };
    let v_eps = update_variances(
        VarianceKind::Eps,
        hyper.alpha_eps,
        hyper.beta_eps,
        &problem.residual(&f0),
    )?;
    match problem.d() {
        Some(d) => {
            let z0 = pseudo_inverse_solve(d, &f0)?;
            let v_xi = update_variances(VarianceKind::Xi, alpha_f, beta_f, &(&f0 - d * &z0))?;
            let v_z = update_variances(VarianceKind::Z, hyper.alpha_z, hyper.beta_z, &z0)?;
            Ok(SolverState {
                f_hat: f0,
                z_hat: Some(z0),
                v_eps,
                v_xi,
                v_z: Some(v_z),
                factors: None,
            })
        }
        None => {
            let v_xi = update_variances(VarianceKind::FDirect, alpha_f, beta_f, &f0)?;
            Ok(SolverState {
                f_hat: f0,
                z_hat: None,
                v_eps,
                v_xi,
                v_z: None,
                factors: None,
            })
        }
    }
}

/// One full sweep of block updates in the model's fixed order.
pub fn iterate(
    problem: &ForwardProblem,
    hyper: &HyperParams,
    state: &SolverState,
) -> Result<SolverState> {
    match problem.d() {
        Some(d) => {
            let (z_prev, v_z) = match (&state.z_hat, &state.v_z) {
                (Some(z), Some(v)) => (z, v),
                _ => {
                    return Err(Error::ModelMismatch {
                        expected: "indirect",
                    })
                }
            };
            let f = update_f(problem, &state.v_eps, &state.v_xi, Some(z_prev))?;
            let z = update_z(problem, &state.v_xi, v_z, &f)?;
            let v_xi = update_variances(
                VarianceKind::Xi,
                hyper.alpha_xi,
                hyper.beta_xi,
                &(&f - d * &z),
            )?;
            let v_eps = update_variances(
                VarianceKind::Eps,
                hyper.alpha_eps,
                hyper.beta_eps,
                &problem.residual(&f),
            )?;
            let v_z = update_variances(VarianceKind::Z, hyper.alpha_z, hyper.beta_z, &z)?;
            Ok(SolverState {
                f_hat: f,
                z_hat: Some(z),
                v_eps,
                v_xi,
                v_z: Some(v_z),
                factors: None,
            })
        }
        None => {
            let v_f = update_variances(
                VarianceKind::FDirect,
                hyper.alpha_f,
                hyper.beta_f,
                &state.f_hat,
            )?;
            let v_eps = update_variances(
                VarianceKind::Eps,
                hyper.alpha_eps,
                hyper.beta_eps,
                &problem.residual(&state.f_hat),
            )?;
            let f = update_f(problem, &v_eps, &v_f, None)?;
            Ok(SolverState {
                f_hat: f,
                z_hat: None,
                v_eps,
                v_xi: v_f,
                v_z: None,
                factors: None,
            })
        }
    }
}

/// Runs JMAP from `config.init` until the stopping rule fires or
/// `config.max_iter` iterations have been made.
///
/// The trace starts with the initial state at iteration 0. Reaching
/// `max_iter` is not an error; it is reported through `RunTrace::converged`.
pub fn solve_jmap(
    problem: &ForwardProblem,
    hyper: &HyperParams,
    config: &JmapConfig,
) -> Result<(SolverState, RunTrace)> {
    validate_problem(problem, hyper)?;
    config.validate()?;
    let start = Instant::now();
    let mut trace = RunTrace::new(match problem.kind() {
        ModelKind::Indirect => &INDIRECT_ORDER,
        ModelKind::Direct => &DIRECT_ORDER,
    });
    let mut state = initial_state(problem, hyper, &config.init)?;
    let mut criterion = neg_log_posterior(&state, problem, hyper)?;
    trace.push(TraceRecord {
        iter: 0,
        criterion: Some(criterion),
        rel_change_f: None,
        rel_change_z: None,
        elapsed: start.elapsed(),
    });

    for iter in 1..=config.max_iter {
        let next = iterate(problem, hyper, &state)?;
        let next_criterion = neg_log_posterior(&next, problem, hyper)?;
        if !next_criterion.is_finite() {
            return Err(Error::NonFinite("criterion"));
        }
        let rel_f = relative_change(&next.f_hat, &state.f_hat);
        let rel_z = match (&next.z_hat, &state.z_hat) {
            (Some(a), Some(b)) => Some(relative_change(a, b)),
            _ => None,
        };
        let decrease = (criterion - next_criterion) / criterion.abs().max(f64::MIN_POSITIVE);
        if decrease < -1e-10 {
            warn!("criterion increased at iteration {iter}: {criterion} -> {next_criterion}");
        }
        trace.push(TraceRecord {
            iter,
            criterion: Some(next_criterion),
            rel_change_f: Some(rel_f),
            rel_change_z: rel_z,
            elapsed: start.elapsed(),
        });
        debug!("jmap iter {iter}: L = {next_criterion:.12e}, rel_f = {rel_f:.3e}");
        state = next;
        criterion = next_criterion;
        if rel_f < config.tol_rel_f && decrease < config.tol_rel_l {
            trace.converged = true;
            break;
        }
    }
    Ok((state, trace))
}
