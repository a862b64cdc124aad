//! Command-line front end: configuration, sweeps, CSV/JSON reports and VTK export.

pub mod commands;
pub mod config;
pub mod output;
pub mod sweep;
pub mod vtk;

use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use config::{Command, RunConfig};
use output::Outputs;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error(transparent)]
    Numeric(#[from] steklov_patterns::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl CliError {
    /// 2 for configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

impl<T> From<steklov_patterns::dynamics::NewtonFailure<T>> for CliError {
    fn from(f: steklov_patterns::dynamics::NewtonFailure<T>) -> Self {
        CliError::Numeric(f.error)
    }
}

/// Uniform nodal values on `[−1, 1]`, drawn in vertex order from ChaCha8
/// seeded by `seed`; stable across platforms.
pub fn random_field(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

/// `--out` flag, then the environment variable, then the config value.
pub fn resolve_output_dir(flag: Option<PathBuf>, config_value: PathBuf) -> PathBuf {
    flag.or_else(|| std::env::var_os(config::OUTPUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or(config_value)
}

#[derive(Debug)]
pub struct RunOutcome {
    pub summary: String,
    pub output_dir: PathBuf,
    pub files: Vec<String>,
}

/// Validates `config`, runs its command on a pool of `config.jobs` threads and
/// writes `manifest.json` next to the artifacts, also when the command fails.
pub fn run(config: &RunConfig) -> Result<RunOutcome, CliError> {
    config.validate()?;
    let command = config.command.expect("validated");
    let start = Instant::now();
    let mut out = Outputs::new(config.output_dir.clone())?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = config.jobs {
        builder = builder.num_threads(jobs);
    }
    let pool = builder.build()?;
    let result = pool.install(|| match command {
        Command::Mesh => commands::mesh(config, &mut out),
        Command::Steklov => commands::steklov(config, &mut out),
        Command::TraceProbe => commands::trace(config, &mut out),
        Command::Certificate => commands::certificate(config, &mut out),
        Command::Evolve => commands::evolve(config, &mut out),
        Command::Stationary => commands::stationary(config, &mut out, false),
        Command::Stability => commands::stationary(config, &mut out, true),
        Command::Sweep => commands::run_sweep(config, &mut out),
    });
    let status = match &result {
        Ok(_) => "ok".to_string(),
        Err(e) => format!("error: {e}"),
    };
    out.write_manifest(config, start.elapsed(), &status)?;
    let summary = result?;
    Ok(RunOutcome { summary, output_dir: out.dir.clone(), files: out.files })
}
