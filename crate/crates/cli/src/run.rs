//! Execution of the three subcommands.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use bsi_core::priors::{gh_pdf, reference_pdf, verify_priors, PriorsReport};
use bsi_core::synth::{
    derive_seeds, generate_operator, generate_sparse_signal, reconstruction_metrics, synthesize_observation,
    Metrics, OperatorSpec, SignalSpec,
};
use bsi_core::vba::{solve_vba, IgFamily, VbaConfig};
use bsi_core::{
    solve_jmap, DMatrix, DVector, ForwardProblem, Init, JmapConfig, ModelKind, RunTrace, Separability,
    SolverState,
};
use log::info;
use serde::Serialize;

use crate::config::{InitConfig, Method, Mode, RunConfig};
use crate::error::{CliError, Result};
use crate::io::{format_f64, push_field, read_matrix, read_vector, write_matrix, write_vector};

/// Files written by a run, and for `solve` whether the solver converged.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub converged: Option<bool>,
}

pub fn run(mode: Mode, config: &RunConfig) -> Result<Outcome> {
    config.validate(mode)?;
    let out = &config.output_dir;
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    match mode {
        Mode::Simulate => simulate(config),
        Mode::Solve => solve(config),
        Mode::VerifyPriors => verify(config),
    }
}

fn write_text(path: PathBuf, text: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    files.push(path);
    Ok(())
}

fn spec_error(e: bsi_core::Error) -> CliError {
    CliError::Config(e.to_string())
}

fn simulate(config: &RunConfig) -> Result<Outcome> {
    let sim = &config.simulate;
    let [signal_seed, operator_seed, noise_seed] = derive_seeds::<3>(config.seed);
    let signal = SignalSpec {
        length: sim.cols,
        sparsity: sim.sparsity,
        amplitude_range: sim.amplitude_range,
        seed: signal_seed,
    };
    let operator = OperatorSpec {
        kind: sim.operator.clone(),
        rows: sim.rows,
        cols: sim.cols,
        seed: operator_seed,
    };
    signal.validate().map_err(spec_error)?;
    operator.validate().map_err(spec_error)?;
    sim.noise.validate().map_err(spec_error)?;

    let sparse = generate_sparse_signal(&signal)?;
    let h = generate_operator(&operator)?;
    // indirect problems are simulated with D = I, so f* = z*
    let d = (config.model == ModelKind::Indirect).then(|| DMatrix::identity(sim.cols, sim.cols));
    let f_true = match &d {
        Some(d) => d * &sparse,
        None => sparse,
    };
    let (g, v_eps) = synthesize_observation(&h, &f_true, &sim.noise, noise_seed)?;

    let out = &config.output_dir;
    let mut files = Vec::new();
    let mut put_matrix = |name: &str, m: &DMatrix<f64>| -> Result<()> {
        let path = out.join(name);
        write_matrix(m, &path)?;
        files.push(path);
        Ok(())
    };
    put_matrix("H.csv", &h)?;
    if let Some(d) = &d {
        put_matrix("D.csv", d)?;
    }
    for (name, v) in [("g.csv", &g), ("f_true.csv", &f_true), ("v_eps_true.csv", &v_eps)] {
        let path = out.join(name);
        write_vector(v, &path)?;
        files.push(path);
    }
    info!("simulated N={} M={} K={} into {}", sim.rows, sim.cols, sim.sparsity, out.display());
    Ok(Outcome {
        files,
        converged: None,
    })
}

fn load_problem(config: &RunConfig) -> Result<ForwardProblem> {
    let inputs = &config.inputs;
    let required = |p: &Option<PathBuf>| p.clone().expect("checked by RunConfig::validate");
    let g = read_vector(&required(&inputs.g))?;
    let h = read_matrix(&required(&inputs.h))?;
    let d = match (config.model, &inputs.d) {
        (ModelKind::Direct, _) => None,
        (ModelKind::Indirect, Some(path)) => Some(read_matrix(path)?),
        (ModelKind::Indirect, None) => Some(DMatrix::identity(h.ncols(), h.ncols())),
    };
    // inconsistent input files are an input problem, not a solver failure
    ForwardProblem::new(g, h, d).map_err(|e| input_error(&inputs.h.clone().unwrap_or_default(), e))
}

fn input_error(path: &Path, e: bsi_core::Error) -> CliError {
    CliError::io(path, std::io::Error::new(std::io::ErrorKind::InvalidData, e.to_string()))
}

#[derive(Debug, Serialize)]
struct IgSummary<'a> {
    alpha_hat: &'a [f64],
    beta_hat: &'a [f64],
}

impl<'a> From<&'a IgFamily> for IgSummary<'a> {
    fn from(f: &'a IgFamily) -> Self {
        IgSummary {
            alpha_hat: f.alpha_hat().as_slice(),
            beta_hat: f.beta_hat().as_slice(),
        }
    }
}

#[derive(Debug, Serialize)]
struct Variational<'a> {
    sigma_f_diag: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma_z_diag: Option<Vec<f64>>,
    ig_eps: IgSummary<'a>,
    /// `ig_xi` (indirect) or `ig_f` (direct).
    #[serde(rename = "ig_f_block")]
    ig_xi: IgSummary<'a>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ig_z: Option<IgSummary<'a>>,
}

#[derive(Debug, Serialize)]
struct Variances<'a> {
    v_eps: &'a [f64],
    #[serde(skip_serializing_if = "Option::is_none")]
    v_xi: Option<&'a [f64]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    v_f: Option<&'a [f64]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    v_z: Option<&'a [f64]>,
}

#[derive(Debug, Serialize)]
struct SolveResult<'a> {
    model: ModelKind,
    method: &'static str,
    seed: u64,
    converged: bool,
    iterations: usize,
    update_order: &'a [&'static str],
    final_criterion: Option<f64>,
    f_hat: &'a [f64],
    z_hat: Option<&'a [f64]>,
    variances: Variances<'a>,
    #[serde(skip_serializing_if = "Option::is_none")]
    variational: Option<Variational<'a>>,
    metrics: Option<Metrics>,
}

fn trace_csv(trace: &RunTrace, record_timing: bool) -> String {
    let mut out = String::from("iter,L,rel_change_f,rel_change_z,millis\n");
    for r in &trace.records {
        let mut line = r.iter.to_string();
        push_field(&mut line, r.criterion);
        push_field(&mut line, r.rel_change_f);
        push_field(&mut line, r.rel_change_z);
        push_field(&mut line, record_timing.then_some(r.elapsed.as_secs_f64() * 1e3));
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// Tidy per-component table for plotting.
fn estimate_csv(state: &SolverState, f_true: Option<&DVector<f64>>) -> String {
    let mut out = String::from("index,f_hat,z_hat,f_true\n");
    for j in 0..state.f_hat.len() {
        let mut line = j.to_string();
        push_field(&mut line, Some(state.f_hat[j]));
        push_field(&mut line, state.z_hat.as_ref().map(|z| z[j]));
        push_field(&mut line, f_true.map(|f| f[j]));
        out.push_str(&line);
        out.push('\n');
    }
    out
}

fn solve(config: &RunConfig) -> Result<Outcome> {
    let problem = load_problem(config)?;
    let f_true = match &config.inputs.f_true {
        Some(path) => {
            let f = read_vector(path)?;
            if f.len() != problem.n_unknowns() {
                return Err(input_error(
                    path,
                    bsi_core::Error::DimensionMismatch(format!(
                        "f_true has length {} but M = {}",
                        f.len(),
                        problem.n_unknowns()
                    )),
                ));
            }
            Some(f)
        }
        None => None,
    };
    let s = &config.solver;
    let clock = Instant::now();
    let (state, trace) = match config.method {
        Method::Jmap => {
            let init = match &s.init {
                InitConfig::Zeros => Init::Zeros,
                InitConfig::LeastSquares => Init::LeastSquares,
                InitConfig::Provided(path) => Init::Provided(read_vector(path)?),
            };
            let jmap = JmapConfig {
                max_iter: s.max_iter,
                tol_rel_f: s.tol_rel_f,
                tol_rel_l: s.tol_rel_l,
                init,
            };
            solve_jmap(&problem, &config.hyper, &jmap)?
        }
        Method::VbaPartial | Method::VbaFull => {
            let vba = VbaConfig {
                max_iter: s.max_iter,
                tol_rel_f: s.tol_rel_f,
                separability: if config.method == Method::VbaFull {
                    Separability::Full
                } else {
                    Separability::Partial
                },
                update_ig: true,
                covariance_threshold: s.covariance_threshold,
            };
            solve_vba(&problem, &config.hyper, &vba)?
        }
    };
    info!(
        "{} finished after {} iterations in {:.1} ms (converged: {})",
        config.method.name(),
        trace.iterations(),
        clock.elapsed().as_secs_f64() * 1e3,
        trace.converged
    );
    let metrics = match &f_true {
        Some(f) => Some(reconstruction_metrics(&state.f_hat, f)?),
        None => None,
    };
    let indirect = problem.kind() == ModelKind::Indirect;
    let variational = state.factors.as_ref().map(|fac| Variational {
        sigma_f_diag: fac.sigma_f.diag().as_slice().to_vec(),
        sigma_z_diag: fac.sigma_z.as_ref().map(|s| s.diag().as_slice().to_vec()),
        ig_eps: (&fac.ig_eps).into(),
        ig_xi: (&fac.ig_xi).into(),
        ig_z: fac.ig_z.as_ref().map(Into::into),
    });
    let result = SolveResult {
        model: problem.kind(),
        method: config.method.name(),
        seed: config.seed,
        converged: trace.converged,
        iterations: trace.iterations(),
        update_order: &trace.update_order,
        final_criterion: trace.records.last().and_then(|r| r.criterion),
        f_hat: state.f_hat.as_slice(),
        z_hat: state.z_hat.as_ref().map(|z| z.as_slice()),
        variances: Variances {
            v_eps: state.v_eps.as_slice(),
            v_xi: indirect.then(|| state.v_xi.as_slice()),
            v_f: (!indirect).then(|| state.v_xi.as_slice()),
            v_z: state.v_z.as_ref().map(|v| v.as_slice()),
        },
        variational,
        metrics,
    };
    let out = &config.output_dir;
    let mut files = Vec::new();
    let mut json = serde_json::to_string_pretty(&result).expect("result serializes");
    json.push('\n');
    write_text(out.join("result.json"), &json, &mut files)?;
    write_text(out.join("trace.csv"), &trace_csv(&trace, config.record_timing), &mut files)?;
    write_text(out.join("estimate.csv"), &estimate_csv(&state, f_true.as_ref()), &mut files)?;
    Ok(Outcome {
        files,
        converged: Some(trace.converged),
    })
}

fn curves_csv(config: &RunConfig, report: &PriorsReport) -> Result<String> {
    let mut out = String::from("case,level,x,gh,reference\n");
    let xs = config.priors.grid.points()?;
    for limit in &report.limits {
        for &level in &limit.levels {
            let (gh, target) = limit.case.configuration(level)?;
            for &x in &xs {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    limit.case.name(),
                    format_f64(level),
                    format_f64(x),
                    format_f64(gh_pdf(x, &gh)?),
                    format_f64(reference_pdf(&target, x)?)
                ));
            }
        }
    }
    Ok(out)
}

fn verify(config: &RunConfig) -> Result<Outcome> {
    let mut priors = config.priors.clone();
    priors.seed = config.seed;
    let report = verify_priors(&priors)?;
    let out = &config.output_dir;
    let mut files = Vec::new();
    let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
    json.push('\n');
    write_text(out.join("priors_report.json"), &json, &mut files)?;
    write_text(out.join("priors_curves.csv"), &curves_csv(config, &report)?, &mut files)?;
    Ok(Outcome {
        files,
        converged: None,
    })
}
