//! Configuration-driven residual suites for the `birkhoff` crate.
//!
//! A run reads an [`ExperimentConfig`], evaluates the selected suites and
//! returns a [`Report`]; the binary only parses arguments and writes files.

pub mod config;
pub mod families;
pub mod report;
pub mod suites;

use std::time::Instant;

use birkhoff::circle_diffeo::DEFAULT_CUTOFF;
use birkhoff::Diffeo64;
use thiserror::Error;

pub use config::{ExperimentConfig, Suite, Tolerances};
pub use report::{Record, Report, Status};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Numerical(#[from] birkhoff::Error),
}

impl CliError {
    /// Process exit code: 2 for bad input, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Run,
    Sweep,
}

impl Mode {
    fn label(self) -> &'static str {
        match self {
            Self::Run => "run",
            Self::Sweep => "sweep",
        }
    }
}

/// Command-line overrides of configuration values.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tol_scale: Option<f64>,
}

/// Evaluates every configured suite. Numerical failures inside a suite become
/// `error` records; only invalid input returns `Err`.
pub fn run(cfg: &ExperimentConfig, mode: Mode, overrides: Overrides) -> Result<Report, CliError> {
    if mode == Mode::Sweep && cfg.cutoffs().len() < 2 && cfg.steps().len() < 2 {
        return Err(CliError::Config("sweep needs a list of cutoffs M or steps h".into()));
    }
    let scale = overrides.tol_scale.unwrap_or(1.0);
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(CliError::Config(format!("tolerance scale must be positive, got {scale}")));
    }
    let seed = overrides.seed.unwrap_or(cfg.seed);
    let tol = cfg.tolerances.scaled(scale);

    let mut gammas = vec![("e".to_string(), Diffeo64::identity(DEFAULT_CUTOFF))];
    if families::has_diffeo(&cfg.diffeo) {
        gammas.push(("gamma".to_string(), families::diffeo(&cfg.diffeo, seed)?));
    }

    let mut suites = cfg.suites.clone();
    suites.sort();
    suites.dedup();

    let start = Instant::now();
    let mut timing = report::Timing::default();
    let mut runner = suites::Runner::new(cfg, tol.clone(), seed, gammas);
    for s in suites {
        let t = Instant::now();
        runner.run(s);
        let name = serde_json::to_value(s).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        timing.suites.insert(name, t.elapsed().as_secs_f64());
    }
    timing.total_seconds = start.elapsed().as_secs_f64();
    Ok(Report::new(mode.label(), seed, cfg.clone(), tol, runner.records, timing))
}
