//! Master-worker private UCB.
//!
//! Each agent keeps one [`HybridMechanism`] per arm. For `t <= K` every agent
//! plays arm `t`. Afterwards a per-agent counter `eta` counts steps since the
//! last switch of the shared arm; whenever `eta` is a power of two the agents
//! send their private indices to the master, which averages them, and every
//! agent plays the argmax of the average. Between rounds the previous arm is
//! replayed, so an arm kept for `p` consecutive rounds is held for the next
//! `2^p` steps.
//!
//! The index of arm `j` at agent `i` is
//! `X_ij + sqrt(2 ln t / n_ij) + h(n_ij)` where `X_ij` is the private mean
//! and `h` the mechanism's error certificate.

use crate::dp::{ClampRange, HybridMechanism, Privacy};
use crate::env::{ArmSet, BanditEnv};
use crate::rng::{noise_stream, reward_stream, SimRng};
use crate::sim::{argmax, SimError, Simulation};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MasterConfig {
    pub privacy: Privacy,
    pub delta: f64,
    pub clamp: ClampRange,
}

impl MasterConfig {
    /// `delta = T^-4`.
    pub fn default_delta(horizon: u64) -> f64 {
        (horizon as f64).powi(-4)
    }
}

/// State of one worker.
#[derive(Debug, Clone)]
pub struct MasterAgent {
    mechanisms: Vec<HybridMechanism>,
    counts: Vec<u64>,
    indices: Vec<f64>,
    eta: u64,
    last_action: Option<usize>,
    reward_rng: SimRng,
    noise_rng: SimRng,
}

impl MasterAgent {
    fn new(k: usize, cfg: &MasterConfig, seed: u64, id: usize) -> Result<Self, SimError> {
        let mech = HybridMechanism::new(cfg.privacy, cfg.delta, cfg.clamp)?;
        Ok(Self {
            mechanisms: vec![mech; k],
            counts: vec![0; k],
            indices: vec![f64::NAN; k],
            eta: 1,
            last_action: None,
            reward_rng: reward_stream(seed, id),
            noise_rng: noise_stream(seed, id),
        })
    }

    pub fn eta(&self) -> u64 {
        self.eta
    }

    pub fn count(&self, arm: usize) -> u64 {
        self.counts[arm]
    }

    /// Indices from the latest communication round.
    pub fn indices(&self) -> &[f64] {
        &self.indices
    }

    pub fn last_action(&self) -> Option<usize> {
        self.last_action
    }

    pub fn mechanism(&self, arm: usize) -> &HybridMechanism {
        &self.mechanisms[arm]
    }

    fn clamp_events(&self) -> u64 {
        self.mechanisms.iter().map(HybridMechanism::clamp_events).sum()
    }
}

/// Private UCB index of `arm` at time `t`. Reads only the mechanism's
/// private report.
pub fn compute_index(agent: &MasterAgent, arm: usize, t: u64) -> Result<f64, SimError> {
    let n = agent.counts[arm];
    if n == 0 {
        return Err(SimError::UnpulledArm { agent: usize::MAX, arm });
    }
    if t == 0 {
        return Err(SimError::InvalidParameter("time starts at 1".into()));
    }
    let report = agent.mechanisms[arm].report()?;
    Ok(ucb_index(report.x_private, n as f64, (t as f64).ln(), report.h_n))
}

/// `x + sqrt(2 ln_t / n) + certificate`.
pub fn ucb_index(x_private: f64, n: f64, ln_t: f64, certificate: f64) -> f64 {
    x_private + (2.0 * ln_t / n).sqrt() + certificate
}

/// Per-arm average of the workers' indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralAggregate {
    pub averaged: Vec<f64>,
}

impl CentralAggregate {
    /// Arm every agent plays after the round (lowest index on ties).
    pub fn best_arm(&self) -> usize {
        argmax(&self.averaged)
    }
}

/// Averages an `M x K` index matrix over agents.
pub fn central_average(indices: &[Vec<f64>]) -> Result<CentralAggregate, SimError> {
    let m = indices.len();
    if m == 0 {
        return Err(SimError::DimensionMismatch { expected: 1, got: 0 });
    }
    let k = indices[0].len();
    let mut sums = vec![0.0; k];
    for (agent, row) in indices.iter().enumerate() {
        if row.len() != k {
            return Err(SimError::DimensionMismatch { expected: k, got: row.len() });
        }
        for (arm, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(SimError::NonFiniteIndex { agent, arm, value: v });
            }
            sums[arm] += v;
        }
    }
    let inv = m as f64;
    Ok(CentralAggregate { averaged: sums.into_iter().map(|s| s / inv).collect() })
}

/// Communication statistics of a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CommStats {
    /// Steps at which the index exchange ran.
    pub rounds: u64,
    /// Rounds whose chosen arm differed from the previously played arm.
    pub switches: u64,
    /// Index messages sent to the master (one per agent per round).
    pub messages: u64,
}

/// Full master-worker simulation.
#[derive(Debug, Clone)]
pub struct MasterWorkerSim {
    agents: Vec<MasterAgent>,
    env: BanditEnv,
    t: u64,
    stats: CommStats,
    round_times: Vec<u64>,
}

impl MasterWorkerSim {
    pub fn new(arms: ArmSet, m: usize, cfg: MasterConfig, seed: u64) -> Result<Self, SimError> {
        let k = arms.len();
        let env = BanditEnv::new(arms, m)?;
        let agents = (0..m).map(|i| MasterAgent::new(k, &cfg, seed, i)).collect::<Result<_, _>>()?;
        Ok(Self { agents, env, t: 1, stats: CommStats::default(), round_times: Vec::new() })
    }

    pub fn agents(&self) -> &[MasterAgent] {
        &self.agents
    }

    pub fn stats(&self) -> CommStats {
        self.stats
    }

    /// Time steps at which communication rounds ran.
    pub fn round_times(&self) -> &[u64] {
        &self.round_times
    }

    fn communicate(&mut self) -> Result<usize, SimError> {
        let t = self.t;
        let k = self.env.num_arms();
        let mut matrix = Vec::with_capacity(self.agents.len());
        for (i, agent) in self.agents.iter_mut().enumerate() {
            for arm in 0..k {
                agent.indices[arm] = compute_index(agent, arm, t).map_err(|e| match e {
                    SimError::UnpulledArm { arm, .. } => SimError::UnpulledArm { agent: i, arm },
                    other => other,
                })?;
            }
            matrix.push(agent.indices.clone());
        }
        let best = central_average(&matrix)?.best_arm();
        self.stats.rounds += 1;
        self.stats.messages += self.agents.len() as u64;
        self.round_times.push(t);
        Ok(best)
    }
}

impl Simulation for MasterWorkerSim {
    fn step(&mut self) -> Result<Vec<usize>, SimError> {
        let t = self.t;
        let k = self.env.num_arms() as u64;
        let action = if t <= k {
            (t - 1) as usize
        } else {
            let eta = self.agents[0].eta;
            if self.agents.iter().any(|a| a.eta != eta || a.last_action != self.agents[0].last_action) {
                return Err(SimError::Desynchronized { t });
            }
            if eta.is_power_of_two() {
                let best = self.communicate()?;
                if Some(best) != self.agents[0].last_action {
                    self.stats.switches += 1;
                    for a in self.agents.iter_mut() {
                        a.eta = 1;
                    }
                }
                best
            } else {
                self.agents[0].last_action.expect("played during initialization")
            }
        };

        for (i, agent) in self.agents.iter_mut().enumerate() {
            let reward = self.env.pull(i, action, &mut agent.reward_rng)?;
            agent.mechanisms[action].insert(reward, &mut agent.noise_rng);
            agent.counts[action] += 1;
            agent.last_action = Some(action);
            if t > k {
                agent.eta += 1;
            }
        }
        self.env.close_step();
        self.t += 1;
        Ok(vec![action; self.agents.len()])
    }

    fn time(&self) -> u64 {
        self.t
    }

    fn env(&self) -> &BanditEnv {
        &self.env
    }

    fn clamp_events(&self) -> u64 {
        self.agents.iter().map(MasterAgent::clamp_events).sum()
    }
}
