//! Experiment harness: configuration, repeated runs, sweeps and summaries.

pub mod config;
pub mod run;
pub mod summary;
pub mod trace;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::sim::SimError;
use crate::topology::TopologyError;

pub use config::{Algorithm, ConfigError, DeltaRule, ExperimentConfig, RewardKind, TopologySpec};
pub use run::{
    build_simulation, run_experiment, simulate, simulate_repeat, sweep, ExperimentOutput, SweepOutput, SweepParam,
};
pub use summary::{summarize, Stats, Sublinearity, Summary};
pub use trace::{log_grid, GridKind, RegretTrace};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed trace: {0}")]
    TraceFormat(String),
    #[error("trace header was modified: stored hash {stored}, recomputed {recomputed}")]
    HashMismatch { stored: String, recomputed: String },
    #[error("traces were sampled on different grids")]
    GridMismatch,
    #[error("nothing to summarize")]
    Empty,
    #[error("parameter '{param}' does not apply to the {algorithm} algorithm")]
    InapplicableParameter { param: String, algorithm: String },
}

impl HarnessError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.to_path_buf(), source }
    }

    /// Process exit code: 2 for configuration problems, 3 for numerical
    /// failures, 4 for a mixing matrix without a spectral gap, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::InapplicableParameter { .. } => 2,
            HarnessError::Sim(e) => sim_exit_code(e),
            _ => 1,
        }
    }
}

pub fn sim_exit_code(e: &SimError) -> i32 {
    match e {
        SimError::Topology(t) => topology_exit_code(t),
        SimError::NonFiniteIndex { .. } | SimError::NotEstimable { .. } | SimError::Dp(_) => 3,
        SimError::InvalidParameter(_) | SimError::Env(_) => 2,
        _ => 1,
    }
}

pub fn topology_exit_code(e: &TopologyError) -> i32 {
    match e {
        TopologyError::SpectralGap { .. } => 4,
        TopologyError::EigenNotConverged { .. } => 3,
        _ => 2,
    }
}
