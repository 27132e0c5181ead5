//! Experiment harness: configuration, runs and deterministic output files.

pub mod config;
pub mod experiments;
pub mod output;

use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::error::Error;
use crate::par::Execution;
use config::{RunConfig, RunPlacement};
use output::RunManifest;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_IO: i32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Compute(#[from] Error),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 2 for invalid input, 3 for numerical failures, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => EXIT_CONFIG,
            HarnessError::Io { .. } => EXIT_IO,
            HarnessError::Compute(e) => match e {
                Error::InvalidSpec(_)
                | Error::DivergentModel { .. }
                | Error::InvalidCoupling(_)
                | Error::OracleRange { .. }
                | Error::Contour(_)
                | Error::InvalidGrid(_) => EXIT_CONFIG,
                _ => EXIT_SOLVER,
            },
        }
    }
}

/// Runs one experiment into `placement.out/<experiment>/`.
pub fn execute(cfg: &RunConfig, placement: &RunPlacement) -> Result<RunManifest, HarnessError> {
    let start = Instant::now();
    let (tables, jobs) = compute(cfg, placement.jobs)?;
    let dir = placement.out.join(cfg.experiment.name());
    output::write_run(&dir, cfg, &tables, jobs, start.elapsed().as_secs_f64())
}

#[cfg(feature = "rayon")]
fn compute(cfg: &RunConfig, jobs: Option<usize>) -> Result<(Vec<output::Table>, usize), HarnessError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j);
    }
    let pool = builder
        .build()
        .map_err(|e| HarnessError::Config(format!("cannot start {jobs:?} workers: {e}")))?;
    let n = pool.current_num_threads();
    pool.install(|| experiments::run(cfg, Execution::Parallel)).map(|t| (t, n))
}

#[cfg(not(feature = "rayon"))]
fn compute(cfg: &RunConfig, _jobs: Option<usize>) -> Result<(Vec<output::Table>, usize), HarnessError> {
    experiments::run(cfg, Execution::Sequential).map(|t| (t, 1))
}
