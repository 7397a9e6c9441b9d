//! Commands behind the `otfs-outage` binary.
//!
//! Exit codes: 0 success, 1 validation or runtime failure, 2 configuration
//! error, 3 violated model precondition (divergent moment or undefined
//! variance for the chosen parameters).

use std::fs;
use std::path::Path;

use otfs_outage::config::{parse_scenario, ConfigError, Scenario};
use otfs_outage::Error;

pub mod curve;
pub mod fit;
pub mod validate;

pub use curve::{op_curve, run_op_curve, CurveRow, OutageCurve, CURVE_HEADER};
pub use fit::{pdf_fit, run_pdf_fit, FitReport, LinkChoice};
pub use validate::{run_validate, validate_checks, CheckOutcome};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Runtime(_) => 1,
            CliError::Config(_) => 2,
            CliError::Precondition(_) => 3,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::DivergentMoment { .. } | Error::UndefinedVariance { .. } => {
                CliError::Precondition(e.to_string())
            }
            other => CliError::Runtime(other.to_string()),
        }
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    Ok(parse_scenario(&text)?)
}

/// Command-line overrides of the `mc.*` section.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct McOverrides {
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
}

impl McOverrides {
    pub fn apply(&self, s: &mut Scenario) -> Result<(), CliError> {
        if let Some(t) = self.trials {
            if t == 0 {
                return Err(CliError::Config("--trials must be >= 1".into()));
            }
            s.mc.trials = t;
        }
        if let Some(seed) = self.seed {
            s.mc.master_seed = seed;
        }
        if let Some(w) = self.workers {
            if w == 0 || w > otfs_outage::config::MAX_WORKERS {
                return Err(CliError::Config(format!(
                    "--workers must be in 1..={}",
                    otfs_outage::config::MAX_WORKERS
                )));
            }
            s.mc.workers = w;
        }
        Ok(())
    }
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}
