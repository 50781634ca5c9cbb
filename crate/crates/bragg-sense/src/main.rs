use std::path::PathBuf;
use std::process::ExitCode;

use bragg_sense::config::{Experiment, Format};
use bragg_sense::{run_file, thread_count, AppError, Overrides, THREADS_ENV};
use clap::Parser;

/// Reproduces the data behind the Bragg interferometer figures as tables.
#[derive(Debug, Parser)]
#[command(name = "bragg-sense", version)]
struct Cli {
    experiment: Experiment,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format; overrides `output.format`.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads; falls back to BRAGG_SENSE_THREADS.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn execute(cli: &Cli) -> Result<(), AppError> {
    let env = std::env::var(THREADS_ENV).ok();
    if let Some(n) = thread_count(cli.threads, env.as_deref())? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| AppError::Config(format!("thread pool: {e}")))?;
    }
    let overrides = Overrides { out: cli.out.clone(), format: cli.format };
    let summary = run_file(cli.experiment, &cli.config, &overrides)?;
    for w in &summary.warnings {
        eprintln!("warning: {w}");
    }
    for f in &summary.files {
        println!("{}", f.display());
    }
    Ok(())
}
