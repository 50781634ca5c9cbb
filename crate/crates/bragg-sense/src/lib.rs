//! Batch runs of the Bragg interferometer model with CSV/JSON output.

pub mod config;
pub mod experiments;
pub mod output;

use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

use config::{Experiment, Format, RunConfig};
use output::{Provenance, ResultRecord, RunMeta};

pub const THREADS_ENV: &str = "BRAGG_SENSE_THREADS";

#[derive(Debug, Error)]
pub enum AppError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl AppError {
    pub fn exit_code(&self) -> u8 {
        match self {
            AppError::Config(_) => 2,
            AppError::Numeric(_) | AppError::Io(_) => 3,
        }
    }
}

impl From<bragg_core::Error> for AppError {
    fn from(e: bragg_core::Error) -> Self {
        if e.is_config() {
            AppError::Config(e.to_string())
        } else {
            AppError::Numeric(e.to_string())
        }
    }
}

/// Command-line overrides of the `[output]` section.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

/// Thread count from the flag, else from the environment.
pub fn thread_count(flag: Option<usize>, env: Option<&str>) -> Result<Option<usize>, AppError> {
    let n = match (flag, env) {
        (Some(n), _) => n,
        (None, Some(s)) => s
            .trim()
            .parse()
            .map_err(|_| AppError::Config(format!("{THREADS_ENV} = {s:?} is not a thread count")))?,
        (None, None) => return Ok(None),
    };
    if n == 0 {
        return Err(AppError::Config("thread count must be positive".into()));
    }
    Ok(Some(n))
}

pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

/// Loads, resolves and runs a configuration, then writes the results.
pub fn run_file(exp: Experiment, config: &Path, overrides: &Overrides) -> Result<RunSummary, AppError> {
    let text = std::fs::read_to_string(config)
        .map_err(|e| AppError::Config(format!("cannot read {}: {e}", config.display())))?;
    let mut cfg = RunConfig::from_toml(&text)?;
    if let Some(dir) = &overrides.out {
        cfg.output.dir = Some(dir.clone());
    }
    if let Some(f) = overrides.format {
        cfg.output.format = Some(f);
    }
    run(exp, cfg.resolve(exp)?)
}

/// Runs a resolved configuration and writes its files.
pub fn run(exp: Experiment, cfg: RunConfig) -> Result<RunSummary, AppError> {
    let start = Instant::now();
    let outcome = experiments::run(exp, &cfg)?;
    let version = env!("CARGO_PKG_VERSION").to_string();
    let dir = cfg.output.dir.clone().expect("resolved");
    let format = cfg.output.format.expect("resolved");
    let digits = cfg.output.precision.expect("resolved");
    let record = ResultRecord {
        experiment: exp.tag().to_string(),
        config: cfg,
        provenance: Provenance { version: version.clone(), backends: outcome.backends },
        tables: outcome.tables,
    };
    let mut files = output::emit(&record, &dir, format, digits)?;
    let meta = RunMeta {
        experiment: record.experiment.clone(),
        version,
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        runtime_s: start.elapsed().as_secs_f64(),
        threads: rayon::current_num_threads(),
        warnings: outcome.warnings.clone(),
    };
    files.push(output::write_meta(&meta, &dir)?);
    Ok(RunSummary { files, warnings: outcome.warnings })
}
