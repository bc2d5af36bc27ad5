//! Experiment runner for the `mbswap` simulator: TOML configs in, CSV or
//! JSON tables out.

pub mod commands;
pub mod config;
pub mod table;

pub use commands::{
    cmd_feedforward_demo, cmd_network, cmd_noise_scan, cmd_random_circuits, cmd_swap, cmd_theta_sweep, run_command,
    Command,
};
pub use config::ExperimentConfig;
pub use table::{Cell, OutputFormat, Provenance, ResultTable};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Environment variable holding the worker-pool size.
pub const WORKERS_ENV: &str = "MBSWAP_WORKERS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("resource limit: {0}")]
    Overflow(String),
    #[error("numerical invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Sim(mbswap::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl From<mbswap::Error> for CliError {
    fn from(e: mbswap::Error) -> Self {
        use mbswap::Error as E;
        match e {
            E::SizeOverflow { .. } | E::PathOverflow { .. } | E::RankExceedsCapacity { .. } => {
                CliError::Overflow(e.to_string())
            }
            E::NotUnitary(_)
            | E::NotTracePreserving(_)
            | E::Undecodable { .. }
            | E::ImpossibleOutcome { .. }
            | E::InvalidState(_) => CliError::Invariant(e.to_string()),
            other => CliError::Sim(other),
        }
    }
}

impl CliError {
    /// 2 for configuration problems, 3 for size limits, 4 for numerical
    /// invariant failures, 1 for i/o.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Sim(_) => 2,
            CliError::Overflow(_) => 3,
            CliError::Invariant(_) => 4,
            CliError::Io(_) | CliError::Csv(_) | CliError::Json(_) => 1,
        }
    }
}

/// Independent seed for sweep point `index`, so results do not depend on
/// how points are scheduled.
pub fn point_seed(master: u64, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index as u64);
    rng.next_u64()
}

/// Builds the global worker pool from `workers`, or leaves rayon's default
/// when `None`.
pub fn init_workers(workers: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = workers {
        if n == 0 {
            return Err(CliError::Config("worker count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(())
}
