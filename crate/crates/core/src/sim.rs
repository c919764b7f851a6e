//! Pieces shared by the two federated algorithms.

use thiserror::Error;

use crate::dp::DpError;
use crate::env::{BanditEnv, EnvError};
use crate::topology::TopologyError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Dp(#[from] DpError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("non-finite index {value} for agent {agent}, arm {arm}")]
    NonFiniteIndex { agent: usize, arm: usize, value: f64 },
    #[error("arm {arm} of agent {agent} has never been pulled")]
    UnpulledArm { agent: usize, arm: usize },
    #[error("estimated count {n_hat} of arm {arm} at agent {agent} is below 1")]
    NotEstimable { agent: usize, arm: usize, n_hat: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("agents fell out of lockstep at t = {t}")]
    Desynchronized { t: u64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Index of the largest value; ties go to the lowest index. NaN never wins.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] || values[best].is_nan() {
            best = j;
        }
    }
    best
}

/// A synchronous multi-agent simulation advanced one time step at a time.
pub trait Simulation {
    /// Runs step `t = self.time()` and returns the arm each agent played.
    fn step(&mut self) -> Result<Vec<usize>, SimError>;

    /// The next step to run, starting at 1.
    fn time(&self) -> u64;

    fn env(&self) -> &BanditEnv;

    /// Reward clamping events summed over every mechanism.
    fn clamp_events(&self) -> u64;

    fn run(&mut self, horizon: u64) -> Result<(), SimError> {
        while self.time() <= horizon {
            self.step()?;
        }
        Ok(())
    }
}
