//! Posterior-mean estimation by variational Bayes.
//!
//! The posterior is approximated by a product of Gaussian factors for `f`
//! (and `z`) and independent Inverse-Gamma factors for every variance. All
//! Gaussian updates use the precisions `ṽ = ⟨v⁻¹⟩ = α̂/β̂` of the current
//! Inverse-Gamma factors.
//!
//! Two factorizations are available: [`Separability::Partial`] keeps `f` and
//! `z` as joint multivariate Gaussians, [`Separability::Full`] (direct model
//! only) factorizes every coordinate of `f` and updates them one at a time.

use std::time::Instant;

use log::debug;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{add_diagonal, cholesky, relative_change, spd_inverse, weighted_at_b, weighted_gram};
use crate::model::{
    validate_problem, ForwardProblem, HyperParams, ModelKind, RunTrace, SolverState, TraceRecord,
    VariationalFactors,
};

/// Above this many unknowns covariances are kept factored instead of
/// materialized.
pub const DEFAULT_COVARIANCE_THRESHOLD: usize = 2048;

pub const PARTIAL_INDIRECT_ORDER: [&str; 5] = ["q_f", "q_z", "q_v_xi", "q_v_eps", "q_v_z"];
pub const PARTIAL_DIRECT_ORDER: [&str; 3] = ["q_f", "q_v_f", "q_v_eps"];
pub const FULL_DIRECT_ORDER: [&str; 3] = ["q_f_j sweep", "q_v_f", "q_v_eps"];

/// `⟨x⁻¹⟩` under `IG(x | α, β)`, which is `α/β`.
pub fn ig_inv_expectation(alpha: f64, beta: f64) -> f64 {
    alpha / beta
}

/// Independent Inverse-Gamma factors `IG(α̂ₖ, β̂ₖ)`, one per component.
#[derive(Debug, Clone, PartialEq)]
pub struct IgFamily {
    alpha_hat: DVector<f64>,
    beta_hat: DVector<f64>,
}

impl IgFamily {
    pub fn new(alpha_hat: DVector<f64>, beta_hat: DVector<f64>) -> Result<Self> {
        if alpha_hat.len() != beta_hat.len() || alpha_hat.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "IG family with {} shapes and {} scales",
                alpha_hat.len(),
                beta_hat.len()
            )));
        }
        for (name, v) in [("alpha_hat", &alpha_hat), ("beta_hat", &beta_hat)] {
            if let Some(index) = v.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
                return Err(Error::NonPositiveVariance {
                    name,
                    index,
                    value: v[index],
                });
            }
        }
        Ok(IgFamily {
            alpha_hat,
            beta_hat,
        })
    }

    /// Zero-residual start: `α̂ = α + ½`, `β̂ = β`.
    pub fn prior(len: usize, alpha: f64, beta: f64) -> Self {
        IgFamily {
            alpha_hat: DVector::from_element(len, alpha + 0.5),
            beta_hat: DVector::from_element(len, beta),
        }
    }

    /// Factors with shape `alpha + ½` whose inverse expectations equal
    /// `precisions`.
    pub fn with_precisions(alpha: f64, precisions: &DVector<f64>) -> Result<Self> {
        let shape = alpha + 0.5;
        IgFamily::new(
            DVector::from_element(precisions.len(), shape),
            precisions.map(|p| shape / p),
        )
    }

    pub fn alpha_hat(&self) -> &DVector<f64> {
        &self.alpha_hat
    }

    pub fn beta_hat(&self) -> &DVector<f64> {
        &self.beta_hat
    }

    pub fn len(&self) -> usize {
        self.alpha_hat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha_hat.is_empty()
    }

    /// `ṽ = α̂/β̂` componentwise.
    pub fn inv_expectations(&self) -> DVector<f64> {
        self.alpha_hat.zip_map(&self.beta_hat, ig_inv_expectation)
    }
}

/// Covariance of a Gaussian factor.
#[derive(Debug, Clone, PartialEq)]
pub enum Covariance {
    Dense(DMatrix<f64>),
    /// Large systems: the lower Cholesky factor `L` of the precision
    /// (`P = LLᵀ`) plus the precomputed diagonal of `P⁻¹`.
    Factored {
        precision_factor: DMatrix<f64>,
        diag: DVector<f64>,
    },
    /// Fully factorized posterior.
    Diagonal(DVector<f64>),
}

impl Covariance {
    fn from_precision(precision: DMatrix<f64>, threshold: usize) -> Result<(nalgebra::Cholesky<f64, nalgebra::Dyn>, Covariance)> {
        let m = precision.nrows();
        let chol = cholesky(precision)?;
        if m <= threshold {
            let sigma = spd_inverse(&chol);
            return Ok((chol, Covariance::Dense(sigma)));
        }
        let l = chol.l();
        let mut diag = DVector::zeros(m);
        let mut e = DVector::zeros(m);
        for j in 0..m {
            e.fill(0.0);
            e[j] = 1.0;
            // Σ_jj = ‖L⁻¹ eⱼ‖²
            let col = l
                .solve_lower_triangular(&e)
                .ok_or(Error::SingularSystem)?;
            diag[j] = col.norm_squared();
        }
        Ok((
            chol,
            Covariance::Factored {
                precision_factor: l,
                diag,
            },
        ))
    }

    pub fn dim(&self) -> usize {
        match self {
            Covariance::Dense(s) => s.nrows(),
            Covariance::Factored { diag, .. } | Covariance::Diagonal(diag) => diag.len(),
        }
    }

    pub fn diag(&self) -> DVector<f64> {
        match self {
            Covariance::Dense(s) => s.diagonal(),
            Covariance::Factored { diag, .. } | Covariance::Diagonal(diag) => diag.clone(),
        }
    }

    /// `aᵢ Σ aᵢᵀ` for every row `aᵢ` of `rows`.
    pub fn quad_forms(&self, rows: &DMatrix<f64>) -> Result<DVector<f64>> {
        if rows.ncols() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} columns against a {}-dimensional covariance",
                rows.ncols(),
                self.dim()
            )));
        }
        Ok(match self {
            Covariance::Dense(s) => {
                let a_sigma = rows * s;
                DVector::from_iterator(
                    rows.nrows(),
                    a_sigma
                        .row_iter()
                        .zip(rows.row_iter())
                        .map(|(x, y)| x.dot(&y)),
                )
            }
            Covariance::Factored {
                precision_factor, ..
            } => {
                // aΣaᵀ = ‖L⁻¹aᵀ‖²
                let b = precision_factor
                    .solve_lower_triangular(&rows.transpose())
                    .ok_or(Error::SingularSystem)?;
                DVector::from_iterator(b.ncols(), b.column_iter().map(|c| c.norm_squared()))
            }
            Covariance::Diagonal(d) => DVector::from_iterator(
                rows.nrows(),
                rows.row_iter()
                    .map(|r| r.iter().zip(d.iter()).map(|(a, s)| a * a * s).sum()),
            ),
        })
    }

    /// Dense copy, materializing a factored covariance if needed.
    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        match self {
            Covariance::Dense(s) => Ok(s.clone()),
            Covariance::Diagonal(d) => Ok(DMatrix::from_diagonal(d)),
            Covariance::Factored {
                precision_factor, ..
            } => {
                let m = precision_factor.nrows();
                let linv = precision_factor
                    .solve_lower_triangular(&DMatrix::identity(m, m))
                    .ok_or(Error::SingularSystem)?;
                Ok(linv.tr_mul(&linv))
            }
        }
    }
}

fn check_precisions(name: &str, v: &DVector<f64>, len: usize) -> Result<()> {
    if v.len() != len {
        return Err(Error::DimensionMismatch(format!(
            "{name} has length {} but {len} was expected",
            v.len()
        )));
    }
    if v.iter().all(|&x| x > 0.0 && x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite("precision vector"))
    }
}

/// Gaussian factor of `f`: precision `HᵀṼ_εH + Ṽ_ξ`, mean
/// `Σ_f (Ṽ_ξDẑ + HᵀṼ_εg)`.
///
/// For the direct model pass `z_hat = None` and the `f`-family precisions as
/// `vtilde_xi`.
pub fn update_f(
    problem: &ForwardProblem,
    vtilde_eps: &DVector<f64>,
    vtilde_xi: &DVector<f64>,
    z_hat: Option<&DVector<f64>>,
) -> Result<(DVector<f64>, Covariance)> {
    update_f_with_threshold(
        problem,
        vtilde_eps,
        vtilde_xi,
        z_hat,
        DEFAULT_COVARIANCE_THRESHOLD,
    )
}

pub fn update_f_with_threshold(
    problem: &ForwardProblem,
    vtilde_eps: &DVector<f64>,
    vtilde_xi: &DVector<f64>,
    z_hat: Option<&DVector<f64>>,
    covariance_threshold: usize,
) -> Result<(DVector<f64>, Covariance)> {
    let m = problem.n_unknowns();
    check_precisions("vtilde_eps", vtilde_eps, problem.n_obs())?;
    check_precisions("vtilde_xi", vtilde_xi, m)?;
    let mut precision = weighted_gram(problem.h(), vtilde_eps);
    add_diagonal(&mut precision, vtilde_xi);
    let mut rhs = weighted_at_b(problem.h(), vtilde_eps, problem.g());
    match (problem.d(), z_hat) {
        (Some(d), Some(z)) => {
            if z.len() != m {
                return Err(Error::DimensionMismatch(format!(
                    "z_hat has length {} but M = {m}",
                    z.len()
                )));
            }
            rhs += vtilde_xi.component_mul(&(d * z));
        }
        (None, None) => {}
        (Some(_), None) => {
            return Err(Error::ModelMismatch {
                expected: "indirect",
            })
        }
        (None, Some(_)) => return Err(Error::ModelMismatch { expected: "direct" }),
    }
    let (chol, sigma) = Covariance::from_precision(precision, covariance_threshold)?;
    Ok((chol.solve(&rhs), sigma))
}

/// Gaussian factor of `z`: precision `DᵀṼ_ξD + Ṽ_z`, mean `Σ_z DᵀṼ_ξf̂`.
pub fn update_z(
    problem: &ForwardProblem,
    vtilde_xi: &DVector<f64>,
    vtilde_z: &DVector<f64>,
    f_hat: &DVector<f64>,
) -> Result<(DVector<f64>, Covariance)> {
    update_z_with_threshold(
        problem,
        vtilde_xi,
        vtilde_z,
        f_hat,
        DEFAULT_COVARIANCE_THRESHOLD,
    )
}

pub fn update_z_with_threshold(
    problem: &ForwardProblem,
    vtilde_xi: &DVector<f64>,
    vtilde_z: &DVector<f64>,
    f_hat: &DVector<f64>,
    covariance_threshold: usize,
) -> Result<(DVector<f64>, Covariance)> {
    let d = problem.require_indirect()?;
    let m = problem.n_unknowns();
    check_precisions("vtilde_xi", vtilde_xi, m)?;
    check_precisions("vtilde_z", vtilde_z, m)?;
    if f_hat.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "f_hat has length {} but M = {m}",
            f_hat.len()
        )));
    }
    let mut precision = weighted_gram(d, vtilde_xi);
    add_diagonal(&mut precision, vtilde_z);
    let rhs = weighted_at_b(d, vtilde_xi, f_hat);
    let (chol, sigma) = Covariance::from_precision(precision, covariance_threshold)?;
    Ok((chol.solve(&rhs), sigma))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IgKind {
    /// Indirect model, `v_ξ`.
    Xi,
    Eps,
    /// Indirect model, `v_z`.
    Z,
    /// Direct model, `v_f`.
    F,
}

/// First and second moments of the Gaussian factors.
#[derive(Debug, Clone, Copy)]
pub struct Moments<'a> {
    pub f_hat: &'a DVector<f64>,
    pub sigma_f: &'a Covariance,
    pub z_hat: Option<&'a DVector<f64>>,
    pub sigma_z: Option<&'a Covariance>,
}

/// Inverse-Gamma factor update: shape `α + ½` and scale `β + ½⟨r²⟩`, where
/// `⟨r²⟩` is the expected squared residual of the level under the Gaussian
/// factors.
pub fn update_ig(
    kind: IgKind,
    hyper: &HyperParams,
    problem: &ForwardProblem,
    moments: &Moments<'_>,
) -> Result<IgFamily> {
    let (alpha, beta, expected_sq) = match kind {
        IgKind::Xi => {
            let d = problem.require_indirect()?;
            let (z, sigma_z) = indirect_moments(moments)?;
            let r = moments.f_hat - d * z;
            let sq = r.map(|x| x * x) + moments.sigma_f.diag() + sigma_z.quad_forms(d)?;
            (hyper.alpha_xi, hyper.beta_xi, sq)
        }
        IgKind::Eps => {
            let r = problem.residual(moments.f_hat);
            let sq = r.map(|x| x * x) + moments.sigma_f.quad_forms(problem.h())?;
            (hyper.alpha_eps, hyper.beta_eps, sq)
        }
        IgKind::Z => {
            problem.require_indirect()?;
            let (z, sigma_z) = indirect_moments(moments)?;
            (hyper.alpha_z, hyper.beta_z, z.map(|x| x * x) + sigma_z.diag())
        }
        IgKind::F => {
            problem.require_direct()?;
            let sq = moments.f_hat.map(|x| x * x) + moments.sigma_f.diag();
            (hyper.alpha_f, hyper.beta_f, sq)
        }
    };
    IgFamily::new(
        DVector::from_element(expected_sq.len(), alpha + 0.5),
        expected_sq.map(|s| beta + 0.5 * s),
    )
}

fn indirect_moments<'a>(moments: &Moments<'a>) -> Result<(&'a DVector<f64>, &'a Covariance)> {
    match (moments.z_hat, moments.sigma_z) {
        (Some(z), Some(s)) => Ok((z, s)),
        _ => Err(Error::ModelMismatch {
            expected: "indirect",
        }),
    }
}

fn column_stats(
    problem: &ForwardProblem,
    vtilde_eps: &DVector<f64>,
    residual: &DVector<f64>,
    j: usize,
) -> (f64, f64) {
    // with rⱼ = g − H⁻ʲf̂⁻ʲ = residual + Hʲf̂ⱼ the numerator is
    // Hʲᵀ Ṽ_ε residual + ‖Ṽ_ε^{1/2}Hʲ‖² f̂ⱼ
    let col = problem.h().column(j);
    let mut weighted_norm = 0.0;
    let mut correlation = 0.0;
    for ((&h, &w), &r) in col.iter().zip(vtilde_eps.iter()).zip(residual.iter()) {
        weighted_norm += w * h * h;
        correlation += w * h * r;
    }
    (weighted_norm, correlation)
}

/// Coordinate update of the fully factorized direct model: mean and
/// variance of `q(fⱼ)` given the other coordinates' means.
pub fn full_coordinate_update(
    problem: &ForwardProblem,
    f_hat: &DVector<f64>,
    vtilde_eps: &DVector<f64>,
    vtilde_f: &DVector<f64>,
    j: usize,
) -> Result<(f64, f64)> {
    problem.require_direct()?;
    let m = problem.n_unknowns();
    if j >= m {
        return Err(Error::IndexOutOfRange { index: j, len: m });
    }
    if f_hat.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "f_hat has length {} but M = {m}",
            f_hat.len()
        )));
    }
    check_precisions("vtilde_eps", vtilde_eps, problem.n_obs())?;
    check_precisions("vtilde_f", vtilde_f, m)?;
    let residual = problem.residual(f_hat);
    let (weighted_norm, correlation) = column_stats(problem, vtilde_eps, &residual, j);
    let precision = weighted_norm + vtilde_f[j];
    Ok((
        (correlation + weighted_norm * f_hat[j]) / precision,
        precision.recip(),
    ))
}

/// One Gauss-Seidel sweep over `j = 0..M`, keeping `g − Hf̂` up to date.
fn coordinate_sweep(
    problem: &ForwardProblem,
    f_hat: &mut DVector<f64>,
    var: &mut DVector<f64>,
    vtilde_eps: &DVector<f64>,
    vtilde_f: &DVector<f64>,
) {
    let mut residual = problem.residual(f_hat);
    for j in 0..f_hat.len() {
        let (weighted_norm, correlation) = column_stats(problem, vtilde_eps, &residual, j);
        let precision = weighted_norm + vtilde_f[j];
        let new = (correlation + weighted_norm * f_hat[j]) / precision;
        let step = new - f_hat[j];
        if step != 0.0 {
            residual.axpy(-step, &problem.h().column(j), 1.0);
        }
        f_hat[j] = new;
        var[j] = precision.recip();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Separability {
    #[default]
    Partial,
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VbaConfig {
    pub max_iter: usize,
    pub tol_rel_f: f64,
    pub separability: Separability,
    /// When false the Inverse-Gamma factors stay at their starting values,
    /// which turns the iteration into exact Gaussian inference with fixed
    /// precisions.
    pub update_ig: bool,
    pub covariance_threshold: usize,
}

impl Default for VbaConfig {
    fn default() -> Self {
        VbaConfig {
            max_iter: 200,
            tol_rel_f: 1e-6,
            separability: Separability::Partial,
            update_ig: true,
            covariance_threshold: DEFAULT_COVARIANCE_THRESHOLD,
        }
    }
}

impl VbaConfig {
    pub fn validate(&self, kind: ModelKind) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be at least 1".into()));
        }
        if !(self.tol_rel_f > 0.0) {
            return Err(Error::InvalidConfig(
                "tol_rel_f must be strictly positive".into(),
            ));
        }
        if self.separability == Separability::Full && kind == ModelKind::Indirect {
            return Err(Error::ModelMismatch { expected: "direct" });
        }
        Ok(())
    }
}

/// Starting point of a VBA run.
#[derive(Debug, Clone, PartialEq)]
pub struct VbaStart {
    pub f_hat: DVector<f64>,
    pub z_hat: Option<DVector<f64>>,
    pub ig_eps: IgFamily,
    /// ξ-family (indirect) or f-family (direct).
    pub ig_xi: IgFamily,
    pub ig_z: Option<IgFamily>,
}

impl VbaStart {
    /// `f̂ = ẑ = 0` and every factor at `IG(α + ½, β)`.
    pub fn prior(problem: &ForwardProblem, hyper: &HyperParams) -> Self {
        let (n, m) = (problem.n_obs(), problem.n_unknowns());
        let (alpha_f, beta_f) = hyper.f_block(problem.kind());
        let indirect = problem.kind() == ModelKind::Indirect;
        VbaStart {
            f_hat: DVector::zeros(m),
            z_hat: indirect.then(|| DVector::zeros(m)),
            ig_eps: IgFamily::prior(n, hyper.alpha_eps, hyper.beta_eps),
            ig_xi: IgFamily::prior(m, alpha_f, beta_f),
            ig_z: indirect.then(|| IgFamily::prior(m, hyper.alpha_z, hyper.beta_z)),
        }
    }

    fn check(&self, problem: &ForwardProblem) -> Result<()> {
        let (n, m) = (problem.n_obs(), problem.n_unknowns());
        let indirect = problem.kind() == ModelKind::Indirect;
        let ok = self.f_hat.len() == m
            && self.ig_eps.len() == n
            && self.ig_xi.len() == m
            && self.z_hat.as_ref().map(|z| z.len() == m).unwrap_or(!indirect)
            && self.ig_z.as_ref().map(|z| z.len() == m).unwrap_or(!indirect)
            && self.z_hat.is_some() == indirect
            && self.ig_z.is_some() == indirect;
        if ok {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(
                "VBA starting point does not match the problem".into(),
            ))
        }
    }
}

pub fn solve_vba(
    problem: &ForwardProblem,
    hyper: &HyperParams,
    config: &VbaConfig,
) -> Result<(SolverState, RunTrace)> {
    solve_vba_from(problem, hyper, config, VbaStart::prior(problem, hyper))
}

/// Runs VBA from an explicit starting point.
///
/// The returned state carries the Gaussian means, the effective variances
/// `β̂/α̂` and the full variational factors.
pub fn solve_vba_from(
    problem: &ForwardProblem,
    hyper: &HyperParams,
    config: &VbaConfig,
    start: VbaStart,
) -> Result<(SolverState, RunTrace)> {
    validate_problem(problem, hyper)?;
    config.validate(problem.kind())?;
    start.check(problem)?;
    match (config.separability, problem.kind()) {
        (Separability::Full, _) => solve_full(problem, hyper, config, start),
        (Separability::Partial, ModelKind::Direct) => solve_partial_direct(problem, hyper, config, start),
        (Separability::Partial, ModelKind::Indirect) => {
            solve_partial_indirect(problem, hyper, config, start)
        }
    }
}

fn initial_record() -> TraceRecord {
    TraceRecord {
        iter: 0,
        criterion: None,
        rel_change_f: None,
        rel_change_z: None,
        elapsed: std::time::Duration::ZERO,
    }
}

fn effective_variances(family: &IgFamily) -> DVector<f64> {
    family.beta_hat().zip_map(family.alpha_hat(), |b, a| b / a)
}

fn solve_partial_indirect(
    problem: &ForwardProblem,
    hyper: &HyperParams,
    config: &VbaConfig,
    start: VbaStart,
) -> Result<(SolverState, RunTrace)> {
    let clock = Instant::now();
    let mut trace = RunTrace::new(&PARTIAL_INDIRECT_ORDER);
    trace.push(initial_record());
    let VbaStart {
        mut f_hat,
        z_hat,
        mut ig_eps,
        mut ig_xi,
        ig_z,
    } = start;
    let mut z_hat = z_hat.expect("checked by VbaStart::check");
    let mut ig_z = ig_z.expect("checked by VbaStart::check");
    let mut sigmas = None;

    for iter in 1..=config.max_iter {
        let (f_new, sigma_f) = update_f_with_threshold(
            problem,
            &ig_eps.inv_expectations(),
            &ig_xi.inv_expectations(),
            Some(&z_hat),
            config.covariance_threshold,
        )?;
        let (z_new, sigma_z) = update_z_with_threshold(
            problem,
            &ig_xi.inv_expectations(),
            &ig_z.inv_expectations(),
            &f_new,
            config.covariance_threshold,
        )?;
        if config.update_ig {
            let moments = Moments {
                f_hat: &f_new,
                sigma_f: &sigma_f,
                z_hat: Some(&z_new),
                sigma_z: Some(&sigma_z),
            };
            ig_xi = update_ig(IgKind::Xi, hyper, problem, &moments)?;
            ig_eps = update_ig(IgKind::Eps, hyper, problem, &moments)?;
            ig_z = update_ig(IgKind::Z, hyper, problem, &moments)?;
        }
        let rel_f = relative_change(&f_new, &f_hat);
        let rel_z = relative_change(&z_new, &z_hat);
        trace.push(TraceRecord {
            iter,
            criterion: None,
            rel_change_f: Some(rel_f),
            rel_change_z: Some(rel_z),
            elapsed: clock.elapsed(),
        });
        debug!("vba iter {iter}: rel_f = {rel_f:.3e}, rel_z = {rel_z:.3e}");
        f_hat = f_new;
        z_hat = z_new;
        sigmas = Some((sigma_f, sigma_z));
        if rel_f < config.tol_rel_f {
            trace.converged = true;
            break;
        }
    }
    let (sigma_f, sigma_z) = sigmas.expect("max_iter ≥ 1");
    let state = SolverState {
        f_hat,
        z_hat: Some(z_hat),
        v_eps: effective_variances(&ig_eps),
        v_xi: effective_variances(&ig_xi),
        v_z: Some(effective_variances(&ig_z)),
        factors: Some(VariationalFactors {
            sigma_f,
            sigma_z: Some(sigma_z),
            ig_eps,
            ig_xi,
            ig_z: Some(ig_z),
        }),
    };
    Ok((state, trace))
}

fn solve_partial_direct(
    problem: &ForwardProblem,
    hyper: &HyperParams,
    config: &VbaConfig,
    start: VbaStart,
) -> Result<(SolverState, RunTrace)> {
    let clock = Instant::now();
    let mut trace = RunTrace::new(&PARTIAL_DIRECT_ORDER);
    trace.push(initial_record());
    let VbaStart {
        mut f_hat,
        mut ig_eps,
        ig_xi: mut ig_f,
        ..
    } = start;
    let mut sigma = None;

    for iter in 1..=config.max_iter {
        let (f_new, sigma_f) = update_f_with_threshold(
            problem,
            &ig_eps.inv_expectations(),
            &ig_f.inv_expectations(),
            None,
            config.covariance_threshold,
        )?;
        if config.update_ig {
            let moments = Moments {
                f_hat: &f_new,
                sigma_f: &sigma_f,
                z_hat: None,
                sigma_z: None,
            };
            ig_f = update_ig(IgKind::F, hyper, problem, &moments)?;
            ig_eps = update_ig(IgKind::Eps, hyper, problem, &moments)?;
        }
        let rel_f = relative_change(&f_new, &f_hat);
        trace.push(TraceRecord {
            iter,
            criterion: None,
            rel_change_f: Some(rel_f),
            rel_change_z: None,
            elapsed: clock.elapsed(),
        });
        debug!("vba iter {iter}: rel_f = {rel_f:.3e}");
        f_hat = f_new;
        sigma = Some(sigma_f);
        if rel_f < config.tol_rel_f {
            trace.converged = true;
            break;
        }
    }
    Ok((
        direct_state(f_hat, sigma.expect("max_iter ≥ 1"), ig_eps, ig_f),
        trace,
    ))
}

fn direct_state(f_hat: DVector<f64>, sigma_f: Covariance, ig_eps: IgFamily, ig_f: IgFamily) -> SolverState {
    SolverState {
        f_hat,
        z_hat: None,
        v_eps: effective_variances(&ig_eps),
        v_xi: effective_variances(&ig_f),
        v_z: None,
        factors: Some(VariationalFactors {
            sigma_f,
            sigma_z: None,
            ig_eps,
            ig_xi: ig_f,
            ig_z: None,
        }),
    }
}

fn solve_full(
    problem: &ForwardProblem,
    hyper: &HyperParams,
    config: &VbaConfig,
    start: VbaStart,
) -> Result<(SolverState, RunTrace)> {
    let clock = Instant::now();
    let mut trace = RunTrace::new(&FULL_DIRECT_ORDER);
    trace.push(initial_record());
    let VbaStart {
        mut f_hat,
        mut ig_eps,
        ig_xi: mut ig_f,
        ..
    } = start;
    let mut var = DVector::zeros(problem.n_unknowns());

    for iter in 1..=config.max_iter {
        let f_prev = f_hat.clone();
        coordinate_sweep(
            problem,
            &mut f_hat,
            &mut var,
            &ig_eps.inv_expectations(),
            &ig_f.inv_expectations(),
        );
        if f_hat.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("coordinate sweep"));
        }
        if config.update_ig {
            let sigma = Covariance::Diagonal(var.clone());
            let moments = Moments {
                f_hat: &f_hat,
                sigma_f: &sigma,
                z_hat: None,
                sigma_z: None,
            };
            ig_f = update_ig(IgKind::F, hyper, problem, &moments)?;
            ig_eps = update_ig(IgKind::Eps, hyper, problem, &moments)?;
        }
        let rel_f = relative_change(&f_hat, &f_prev);
        trace.push(TraceRecord {
            iter,
            criterion: None,
            rel_change_f: Some(rel_f),
            rel_change_z: None,
            elapsed: clock.elapsed(),
        });
        debug!("vba-full iter {iter}: rel_f = {rel_f:.3e}");
        if rel_f < config.tol_rel_f {
            trace.converged = true;
            break;
        }
    }
    Ok((
        direct_state(f_hat, Covariance::Diagonal(var), ig_eps, ig_f),
        trace,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate_positive_log, Tolerance};
    use approx::assert_relative_eq;
    use statrs::function::gamma::ln_gamma;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    fn dense(c: &Covariance) -> DMatrix<f64> {
        c.to_dense().unwrap()
    }

    #[test]
    fn inv_expectation_examples() {
        assert_eq!(ig_inv_expectation(2.0, 4.0), 0.5);
        assert_eq!(ig_inv_expectation(1.0, 1.0), 1.0);
        let (a, b) = (3.7_f64, 2.2_f64);
        // ∫ x⁻¹ IG(x | a, b) dx, integrated in log space
        let ln_norm = a * b.ln() - ln_gamma(a);
        let est = integrate_positive_log(
            |x: f64| ln_norm - (a + 2.0) * x.ln() - b / x,
            Tolerance::default(),
        )
        .unwrap();
        assert_relative_eq!(est.value, ig_inv_expectation(a, b), max_relative = 1e-9);
        assert_relative_eq!(ig_inv_expectation(a, b), 1.6818181818181817, epsilon = 1e-15);
    }

    #[test]
    fn update_f_scalar() {
        let p = ForwardProblem::indirect(v(&[4.0]), DMatrix::identity(1, 1), DMatrix::identity(1, 1))
            .unwrap();
        let (f, s) = update_f(&p, &v(&[2.0]), &v(&[2.0]), Some(&v(&[0.0]))).unwrap();
        assert_relative_eq!(f[0], 2.0, epsilon = 1e-15);
        assert_relative_eq!(dense(&s)[(0, 0)], 0.25, epsilon = 1e-15);

        let p = ForwardProblem::indirect(v(&[0.0]), DMatrix::identity(1, 1), DMatrix::identity(1, 1))
            .unwrap();
        let (f, s) = update_f(&p, &v(&[2.0]), &v(&[2.0]), Some(&v(&[0.0]))).unwrap();
        assert_eq!(f[0], 0.0);
        assert!(dense(&s)[(0, 0)] > 0.0);
    }

    #[test]
    fn update_f_two_by_two_against_lu() {
        let h = DMatrix::from_diagonal(&v(&[1.0, 3.0]));
        let p = ForwardProblem::indirect(v(&[1.0, 1.0]), h.clone(), DMatrix::identity(2, 2)).unwrap();
        let ones = v(&[1.0, 1.0]);
        let z = v(&[1.0, 0.0]);
        let (f, s) = update_f(&p, &ones, &ones, Some(&z)).unwrap();
        let precision = h.transpose() * &h + DMatrix::identity(2, 2);
        let lu = precision.clone().lu();
        let oracle_f = lu.solve(&(&z + h.transpose() * v(&[1.0, 1.0]))).unwrap();
        let oracle_s = lu.try_inverse().unwrap();
        assert_relative_eq!(f, oracle_f, epsilon = 1e-14);
        assert_relative_eq!(dense(&s), oracle_s, epsilon = 1e-14);
        assert_relative_eq!(f, v(&[1.0, 0.3]), epsilon = 1e-14);
    }

    #[test]
    fn update_z_examples() {
        let p = ForwardProblem::indirect(v(&[0.0]), DMatrix::identity(1, 1), DMatrix::identity(1, 1))
            .unwrap();
        let one = v(&[1.0]);
        let (z, s) = update_z(&p, &one, &one, &v(&[3.0])).unwrap();
        assert_relative_eq!(z[0], 1.5, epsilon = 1e-15);
        assert_relative_eq!(dense(&s)[(0, 0)], 0.5, epsilon = 1e-15);
        assert_eq!(update_z(&p, &one, &one, &v(&[0.0])).unwrap().0[0], 0.0);

        let d = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let p = ForwardProblem::indirect(v(&[0.0, 0.0]), DMatrix::identity(2, 2), d.clone()).unwrap();
        let ones = v(&[1.0, 1.0]);
        let (z, s) = update_z(&p, &ones, &ones, &ones).unwrap();
        let precision = d.transpose() * &d + DMatrix::identity(2, 2);
        assert_relative_eq!(z, precision.clone().lu().solve(&(d.transpose() * &ones)).unwrap(), epsilon = 1e-14);
        assert_relative_eq!(dense(&s), precision.try_inverse().unwrap(), epsilon = 1e-14);

        let direct = ForwardProblem::direct(v(&[0.0]), DMatrix::identity(1, 1)).unwrap();
        assert!(matches!(
            update_z(&direct, &one, &one, &one),
            Err(Error::ModelMismatch { .. })
        ));
    }

    #[test]
    fn factored_covariance_matches_dense() {
        let h = DMatrix::from_fn(5, 4, |i, j| ((i * 4 + j) as f64 * 0.7).sin());
        let g = DVector::from_fn(5, |i, _| i as f64 - 2.0);
        let p = ForwardProblem::direct(g, h.clone()).unwrap();
        let w_eps = DVector::from_fn(5, |i, _| 1.0 + i as f64);
        let w_f = DVector::from_element(4, 0.3);
        let (f_dense, s_dense) = update_f_with_threshold(&p, &w_eps, &w_f, None, 10).unwrap();
        let (f_fact, s_fact) = update_f_with_threshold(&p, &w_eps, &w_f, None, 2).unwrap();
        assert!(matches!(s_fact, Covariance::Factored { .. }));
        assert_relative_eq!(f_dense, f_fact, epsilon = 1e-13);
        assert_relative_eq!(s_dense.diag(), s_fact.diag(), epsilon = 1e-13);
        assert_relative_eq!(
            s_dense.quad_forms(&h).unwrap(),
            s_fact.quad_forms(&h).unwrap(),
            epsilon = 1e-13
        );
        assert_relative_eq!(dense(&s_dense), dense(&s_fact), epsilon = 1e-13);
    }

    fn scalar_moments_problem(g: f64) -> ForwardProblem {
        ForwardProblem::indirect(v(&[g]), DMatrix::identity(1, 1), DMatrix::identity(1, 1)).unwrap()
    }

    #[test]
    fn ig_update_examples() {
        let hyper = HyperParams::uniform(1.0, 1.0);
        let zero = Covariance::Dense(DMatrix::zeros(1, 1));

        let p = scalar_moments_problem(0.0);
        let zeros = v(&[0.0]);
        let m = Moments {
            f_hat: &zeros,
            sigma_f: &zero,
            z_hat: Some(&zeros),
            sigma_z: Some(&zero),
        };
        let fam = update_ig(IgKind::Z, &hyper, &p, &m).unwrap();
        assert_eq!(fam.beta_hat()[0], 1.0);
        assert_eq!(fam.alpha_hat()[0], 1.5);

        // residual 2, HΣHᵀ = 1
        let p = scalar_moments_problem(2.0);
        let one = Covariance::Dense(DMatrix::identity(1, 1));
        let m = Moments {
            f_hat: &zeros,
            sigma_f: &one,
            z_hat: Some(&zeros),
            sigma_z: Some(&zero),
        };
        assert_relative_eq!(update_ig(IgKind::Eps, &hyper, &p, &m).unwrap().beta_hat()[0], 3.5);

        // f̂ = Dẑ = 1, Σ_f = Σ_z = 0.5
        let half = Covariance::Dense(DMatrix::from_element(1, 1, 0.5));
        let ones = v(&[1.0]);
        let m = Moments {
            f_hat: &ones,
            sigma_f: &half,
            z_hat: Some(&ones),
            sigma_z: Some(&half),
        };
        assert_relative_eq!(update_ig(IgKind::Xi, &hyper, &p, &m).unwrap().beta_hat()[0], 1.5);

        let direct = ForwardProblem::direct(v(&[0.0]), DMatrix::identity(1, 1)).unwrap();
        for kind in [IgKind::Xi, IgKind::Z] {
            assert!(matches!(
                update_ig(kind, &hyper, &direct, &m),
                Err(Error::ModelMismatch { .. })
            ));
        }
        assert!(matches!(
            update_ig(IgKind::F, &hyper, &p, &m),
            Err(Error::ModelMismatch { .. })
        ));
    }

    #[test]
    fn coordinate_update_examples() {
        let p = ForwardProblem::direct(v(&[2.0]), DMatrix::identity(1, 1)).unwrap();
        let one = v(&[1.0]);
        let (f, var) = full_coordinate_update(&p, &v(&[0.0]), &one, &one, 0).unwrap();
        assert_relative_eq!(f, 1.0);
        assert_relative_eq!(var, 0.5);
        assert!(matches!(
            full_coordinate_update(&p, &v(&[0.0]), &one, &one, 1),
            Err(Error::IndexOutOfRange { index: 1, len: 1 })
        ));

        let p = ForwardProblem::direct(v(&[0.0, 0.0]), DMatrix::identity(2, 2)).unwrap();
        let ones = v(&[1.0, 1.0]);
        assert_eq!(full_coordinate_update(&p, &v(&[0.0, 0.0]), &ones, &ones, 1).unwrap().0, 0.0);

        let p = ForwardProblem::direct(v(&[2.0, 4.0]), DMatrix::identity(2, 2)).unwrap();
        let (f, _) = full_coordinate_update(&p, &v(&[0.0, 5.0]), &ones, &ones, 0).unwrap();
        assert_relative_eq!(f, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn sweep_matches_single_updates() {
        let h = DMatrix::from_fn(6, 4, |i, j| ((i + 2 * j) as f64).cos());
        let g = DVector::from_fn(6, |i, _| (i as f64).sin());
        let p = ForwardProblem::direct(g, h).unwrap();
        let w_eps = DVector::from_element(6, 2.0);
        let w_f = DVector::from_fn(4, |j, _| 0.5 + j as f64);
        let mut f = DVector::from_element(4, 0.1);
        let mut expected = f.clone();
        for j in 0..4 {
            expected[j] = full_coordinate_update(&p, &expected, &w_eps, &w_f, j).unwrap().0;
        }
        let mut var = DVector::zeros(4);
        coordinate_sweep(&p, &mut f, &mut var, &w_eps, &w_f);
        assert_relative_eq!(f, expected, epsilon = 1e-13);
    }

    #[test]
    fn full_requires_direct() {
        let p = scalar_moments_problem(1.0);
        let config = VbaConfig {
            separability: Separability::Full,
            ..VbaConfig::default()
        };
        assert!(matches!(
            solve_vba(&p, &HyperParams::default(), &config),
            Err(Error::ModelMismatch { .. })
        ));
    }

    #[test]
    fn zero_data_fixed_point() {
        let p = ForwardProblem::indirect(
            DVector::zeros(3),
            DMatrix::identity(3, 3),
            DMatrix::identity(3, 3),
        )
        .unwrap();
        let hyper = HyperParams::uniform(1.0, 1.0);
        let (state, trace) = solve_vba(&p, &hyper, &VbaConfig::default()).unwrap();
        assert!(trace.converged);
        assert!(state.f_hat.iter().all(|&x| x == 0.0));
        assert!(state.z_hat.as_ref().unwrap().iter().all(|&x| x == 0.0));
        let factors = state.factors.as_ref().unwrap();
        let sigma_f = factors.sigma_f.diag();
        let beta_eps = factors.ig_eps.beta_hat();
        for i in 0..3 {
            assert_relative_eq!(beta_eps[i], 1.0 + 0.5 * sigma_f[i], epsilon = 1e-14);
        }
    }
}
