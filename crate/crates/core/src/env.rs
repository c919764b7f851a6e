//! Ground-truth stochastic bandit shared by all agents.
//!
//! Regret is pseudo-regret: every pull of arm `j` adds the gap
//! `mu_best - mu_j`, so the trace is `sum_j gap_j * n_j(t)` with true means.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dp::ClampRange;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("need at least two arms, got {0}")]
    TooFewArms(usize),
    #[error("need at least one agent")]
    NoAgents,
    #[error("arm mean {0} is outside [0, 1] for a bounded reward model")]
    MeanOutOfRange(f64),
    #[error("arm mean {0} is not finite")]
    NonFiniteMean(f64),
    #[error("gaussian standard deviation must be positive and finite, got {0}")]
    InvalidSigma(f64),
    #[error("best arm is not unique (mu = {0})")]
    TiedBestArm(f64),
    #[error("agent {agent} out of range (M = {m})")]
    AgentOutOfRange { agent: usize, m: usize },
    #[error("arm {arm} out of range (K = {k})")]
    ArmOutOfRange { arm: usize, k: usize },
}

/// Reward distribution of one arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ArmModel {
    Bernoulli {
        mu: f64,
    },
    /// Uniform on `[mu - w, mu + w]` with `w = min(mu, 1 - mu)`.
    Uniform {
        mu: f64,
    },
    Gaussian {
        mu: f64,
        sigma: f64,
    },
}

impl ArmModel {
    pub fn mean(&self) -> f64 {
        match *self {
            ArmModel::Bernoulli { mu } | ArmModel::Uniform { mu } | ArmModel::Gaussian { mu, .. } => mu,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            ArmModel::Bernoulli { mu } => mu * (1.0 - mu),
            ArmModel::Uniform { mu } => {
                let w = mu.min(1.0 - mu);
                w * w / 3.0
            }
            ArmModel::Gaussian { sigma, .. } => sigma * sigma,
        }
    }

    fn validate(&self) -> Result<(), EnvError> {
        let mu = self.mean();
        if !mu.is_finite() {
            return Err(EnvError::NonFiniteMean(mu));
        }
        match *self {
            ArmModel::Bernoulli { .. } | ArmModel::Uniform { .. } if !(0.0..=1.0).contains(&mu) => {
                Err(EnvError::MeanOutOfRange(mu))
            }
            ArmModel::Gaussian { sigma, .. } if !(sigma.is_finite() && sigma > 0.0) => {
                Err(EnvError::InvalidSigma(sigma))
            }
            _ => Ok(()),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ArmModel::Bernoulli { mu } => {
                if rng.gen::<f64>() < mu {
                    1.0
                } else {
                    0.0
                }
            }
            ArmModel::Uniform { mu } => {
                let w = mu.min(1.0 - mu);
                mu + w * (2.0 * rng.gen::<f64>() - 1.0)
            }
            ArmModel::Gaussian { mu, sigma } => Normal::new(mu, sigma).expect("validated sigma").sample(rng),
        }
    }
}

/// `k` means evenly spaced on `[0.1, 0.9]`, best first.
pub fn default_means(k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![0.9];
    }
    (0..k).map(|j| 0.9 - 0.8 * j as f64 / (k - 1) as f64).collect()
}

/// Arm set with the best arm first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSet {
    arms: Vec<ArmModel>,
}

impl ArmSet {
    /// Validates the arms and sorts them by decreasing mean.
    pub fn new(mut arms: Vec<ArmModel>) -> Result<Self, EnvError> {
        if arms.len() < 2 {
            return Err(EnvError::TooFewArms(arms.len()));
        }
        for a in &arms {
            a.validate()?;
        }
        arms.sort_by(|a, b| b.mean().total_cmp(&a.mean()));
        if arms[0].mean() == arms[1].mean() {
            return Err(EnvError::TiedBestArm(arms[0].mean()));
        }
        Ok(Self { arms })
    }

    pub fn len(&self) -> usize {
        self.arms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arms.is_empty()
    }

    pub fn arms(&self) -> &[ArmModel] {
        &self.arms
    }

    pub fn means(&self) -> Vec<f64> {
        self.arms.iter().map(ArmModel::mean).collect()
    }

    pub fn gaps(&self) -> Vec<f64> {
        let best = self.arms[0].mean();
        self.arms.iter().map(|a| best - a.mean()).collect()
    }

    pub fn min_gap(&self) -> f64 {
        self.gaps()[1..].iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_gap(&self) -> f64 {
        self.gaps().into_iter().fold(0.0, f64::max)
    }

    /// Range the private mechanisms clamp rewards to: `[0, 1]` for bounded
    /// models, `[min mu - 3 sigma, max mu + 3 sigma]` once any arm is
    /// Gaussian.
    pub fn default_clamp(&self) -> ClampRange {
        let sigma = self.max_sigma();
        if sigma == 0.0 {
            return ClampRange::unit();
        }
        let means = self.means();
        let lo = means.iter().copied().fold(f64::INFINITY, f64::min) - 3.0 * sigma;
        let hi = means.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 3.0 * sigma;
        ClampRange::new(lo, hi).expect("finite, ordered bounds")
    }

    /// Reward scale the consensus index assumes: the Gaussian sigma, or 1/2
    /// for rewards bounded in `[0, 1]`.
    pub fn index_sigma(&self) -> f64 {
        match self.max_sigma() {
            s if s > 0.0 => s,
            _ => 0.5,
        }
    }

    fn max_sigma(&self) -> f64 {
        self.arms
            .iter()
            .map(|a| match *a {
                ArmModel::Gaussian { sigma, .. } => sigma,
                _ => 0.0,
            })
            .fold(0.0, f64::max)
    }
}

/// Pull counts and pseudo-regret of one simulation run.
#[derive(Debug, Clone)]
pub struct BanditEnv {
    arms: ArmSet,
    gaps: Vec<f64>,
    agents: usize,
    counts: Vec<Vec<u64>>,
    cumulative_regret: f64,
    trace: Vec<f64>,
}

impl BanditEnv {
    pub fn new(arms: ArmSet, agents: usize) -> Result<Self, EnvError> {
        if agents == 0 {
            return Err(EnvError::NoAgents);
        }
        let k = arms.len();
        Ok(Self {
            gaps: arms.gaps(),
            arms,
            agents,
            counts: vec![vec![0; k]; agents],
            cumulative_regret: 0.0,
            trace: Vec::new(),
        })
    }

    pub fn arms(&self) -> &ArmSet {
        &self.arms
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    pub fn num_agents(&self) -> usize {
        self.agents
    }

    pub fn gap(&self, arm: usize) -> f64 {
        self.gaps[arm]
    }

    /// Draws a reward for `agent` pulling `arm` (0-based) and charges the
    /// arm's gap to the cumulative regret.
    pub fn pull<R: Rng + ?Sized>(&mut self, agent: usize, arm: usize, rng: &mut R) -> Result<f64, EnvError> {
        if agent >= self.agents {
            return Err(EnvError::AgentOutOfRange { agent, m: self.agents });
        }
        let k = self.arms.len();
        if arm >= k {
            return Err(EnvError::ArmOutOfRange { arm, k });
        }
        self.counts[agent][arm] += 1;
        self.cumulative_regret += self.gaps[arm];
        Ok(self.arms.arms[arm].sample(rng))
    }

    /// Records the cumulative regret at the end of a time step.
    pub fn close_step(&mut self) {
        self.trace.push(self.cumulative_regret);
    }

    pub fn steps(&self) -> usize {
        self.trace.len()
    }

    pub fn cumulative_regret(&self) -> f64 {
        self.cumulative_regret
    }

    /// Cumulative pseudo-regret after each closed step; entry `t - 1` is
    /// `R(t)`.
    pub fn regret_trace(&self) -> &[f64] {
        &self.trace
    }

    pub fn into_trace(self) -> Vec<f64> {
        self.trace
    }

    /// `n_{i,j}(t)`.
    pub fn count(&self, agent: usize, arm: usize) -> u64 {
        self.counts[agent][arm]
    }

    /// `n_j(t) = sum_i n_{i,j}(t)`.
    pub fn arm_total(&self, arm: usize) -> u64 {
        self.counts.iter().map(|c| c[arm]).sum()
    }

    /// Pulls per arm summed over agents.
    pub fn action_histogram(&self) -> Vec<u64> {
        (0..self.arms.len()).map(|j| self.arm_total(j)).collect()
    }

    /// Regret recomputed from the pull counts.
    pub fn regret_from_counts(&self) -> f64 {
        (1..self.arms.len()).map(|j| self.gaps[j] * self.arm_total(j) as f64).sum()
    }
}
