//! Run configuration: a single JSON document, unknown keys rejected.
//!
//! Relative paths inside the document are resolved against the directory
//! containing it.

use std::fs;
use std::path::{Path, PathBuf};

use bsi_core::priors::VerifyConfig;
use bsi_core::synth::{NoiseModel, OperatorKind};
use bsi_core::vba::DEFAULT_COVARIANCE_THRESHOLD;
use bsi_core::{HyperParams, ModelKind};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Simulate,
    Solve,
    VerifyPriors,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Solve => "solve",
            Mode::VerifyPriors => "verify-priors",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[default]
    Jmap,
    VbaPartial,
    VbaFull,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Jmap => "jmap",
            Method::VbaPartial => "vba-partial",
            Method::VbaFull => "vba-full",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InitConfig {
    #[default]
    Zeros,
    LeastSquares,
    /// Starting `f̂` read from a vector file.
    Provided(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub max_iter: usize,
    pub tol_rel_f: f64,
    /// JMAP only.
    pub tol_rel_l: f64,
    /// JMAP only.
    pub init: InitConfig,
    /// VBA only: above this many unknowns covariances stay factored.
    pub covariance_threshold: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iter: 200,
            tol_rel_f: 1e-6,
            tol_rel_l: 1e-9,
            init: InitConfig::Zeros,
            covariance_threshold: DEFAULT_COVARIANCE_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct Inputs {
    pub g: Option<PathBuf>,
    pub h: Option<PathBuf>,
    pub d: Option<PathBuf>,
    /// Use `D = I` when no `d` file is given.
    pub d_identity: bool,
    /// Ground truth for the metrics in `result.json`.
    pub f_true: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub rows: usize,
    pub cols: usize,
    pub sparsity: usize,
    pub amplitude_range: (f64, f64),
    pub operator: OperatorKind,
    pub noise: NoiseModel,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            rows: 64,
            cols: 64,
            sparsity: 5,
            amplitude_range: (1.0, 2.0),
            operator: OperatorKind::Convolution {
                kernel: vec![0.25, 0.5, 0.25],
            },
            noise: NoiseModel::Nonstationary {
                alpha: 3.0,
                beta: 2.0,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Optional; must agree with the subcommand when given.
    pub mode: Option<Mode>,
    pub model: ModelKind,
    pub method: Method,
    pub hyper: HyperParams,
    pub solver: SolverConfig,
    pub inputs: Inputs,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub simulate: SimulateConfig,
    pub priors: VerifyConfig,
    /// Fill the `millis` column of `trace.csv`. Off by default so that
    /// repeated runs produce identical files.
    pub record_timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: None,
            model: ModelKind::Direct,
            method: Method::Jmap,
            hyper: HyperParams::default(),
            solver: SolverConfig::default(),
            inputs: Inputs::default(),
            output_dir: PathBuf::from("out"),
            seed: 0,
            simulate: SimulateConfig::default(),
            priors: VerifyConfig::default(),
            record_timing: false,
        }
    }
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| config_err(e.to_string()))
    }

    fn from_file_text(path: &Path, text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| config_err(format!("{}: {e}", path.display())))
    }

    /// Reads `path` and resolves every relative path in it against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut config = RunConfig::from_file_text(path, &text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.resolve_paths(base);
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        for p in [
            &mut self.inputs.g,
            &mut self.inputs.h,
            &mut self.inputs.d,
            &mut self.inputs.f_true,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        if let InitConfig::Provided(p) = &mut self.solver.init {
            fix(p);
        }
    }

    /// Cross-field rules for `mode`.
    pub fn validate(&self, mode: Mode) -> Result<()> {
        if let Some(declared) = self.mode {
            if declared != mode {
                return Err(config_err(format!(
                    "config declares mode `{}` but `{}` was requested",
                    declared.name(),
                    mode.name()
                )));
            }
        }
        self.hyper.validate().map_err(|e| config_err(e.to_string()))?;
        match mode {
            Mode::Solve => {
                if self.method == Method::VbaFull && self.model == ModelKind::Indirect {
                    return Err(config_err("method `vba-full` requires model `direct`"));
                }
                if self.model == ModelKind::Indirect && self.inputs.d.is_none() && !self.inputs.d_identity {
                    return Err(config_err(
                        "model `indirect` needs `inputs.d` or `inputs.d_identity: true`",
                    ));
                }
                if self.inputs.g.is_none() || self.inputs.h.is_none() {
                    return Err(config_err("solve needs `inputs.g` and `inputs.h`"));
                }
                if self.solver.max_iter == 0 {
                    return Err(config_err("solver.max_iter must be at least 1"));
                }
                if !(self.solver.tol_rel_f > 0.0 && self.solver.tol_rel_l > 0.0) {
                    return Err(config_err("solver tolerances must be strictly positive"));
                }
            }
            Mode::Simulate | Mode::VerifyPriors => {}
        }
        Ok(())
    }
}
