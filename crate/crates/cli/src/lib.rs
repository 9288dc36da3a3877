//! Command-line front end for `bsi-core`: JSON run configurations, matrix
//! files, solver dispatch and result/trace emission.

pub mod config;
pub mod error;
pub mod io;
pub mod run;

use std::path::PathBuf;

pub use config::{Mode, RunConfig};
pub use error::{CliError, Result};
pub use run::{run, Outcome};

/// Overrides given on the command line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

/// Loads the config at `config_path`, applies `overrides` and runs `mode`.
pub fn execute(mode: Mode, config_path: &std::path::Path, overrides: &Overrides) -> Result<Outcome> {
    let mut config = RunConfig::load(config_path)?;
    if let Some(out) = &overrides.out {
        config.output_dir = out.clone();
    }
    if let Some(seed) = overrides.seed {
        config.seed = seed;
    }
    run(mode, &config)
}
