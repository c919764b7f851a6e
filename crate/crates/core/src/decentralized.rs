//! Decentralized private UCB over a consensus network.
//!
//! Every agent keeps one [`HybridMechanism`] per arm plus two consensus
//! estimates per arm: the network-average pull count `n_hat` and the
//! network-average private reward sum `s_hat`. Each step starts with one
//! mixing round over the symmetric matrix `P`:
//!
//! ```text
//! n_hat_j <- P (n_hat_j + xi_j)      xi_j = last step's pull indicators
//! s_hat_j <- P s_hat_j
//! ```
//!
//! After pulling, an agent adds its mechanism's fresh private increment for
//! the pulled arm to its own `s_hat`, so new rewards enter the estimate only
//! through the private mechanism and reach neighbours at the next mixing.
//!
//! The index of arm `j` at agent `i` is
//!
//! ```text
//! s_hat/n_hat + sigma * sqrt(2 rho (n_hat + c_i) / (M n_hat) * ln t / n_hat) + h(n_hat)
//! ```
//!
//! with `h` the mechanism's error certificate evaluated at `n_hat`. Arms
//! whose `n_hat` is still below one are explored first.

use crate::dp::{ClampRange, HybridMechanism, Privacy};
use crate::env::{ArmSet, BanditEnv};
use crate::rng::{noise_stream, reward_stream, SimRng};
use crate::sim::{argmax, SimError, Simulation};
use crate::topology::{MixingMatrix, SpectralConstants};

// Consensus estimates of an arm played once by everyone can land one ulp
// below 1.
const ESTIMABLE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct DecConfig {
    pub privacy: Privacy,
    pub delta: f64,
    pub clamp: ClampRange,
    /// Exploration parameter, at least 1.
    pub rho: f64,
    /// Reward standard deviation known to the agents.
    pub sigma: f64,
    /// Check `|n_hat - n_avg| <= c0` after every mixing round.
    pub track_count_bound: bool,
}

impl DecConfig {
    /// `delta = T^-rho / 2`.
    pub fn default_delta(horizon: u64, rho: f64) -> f64 {
        0.5 * (horizon as f64).powf(-rho)
    }

    fn validate(&self) -> Result<(), SimError> {
        if !(self.rho.is_finite() && self.rho >= 1.0) {
            return Err(SimError::InvalidParameter(format!("rho must be >= 1, got {}", self.rho)));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(SimError::InvalidParameter(format!("sigma must be > 0, got {}", self.sigma)));
        }
        Ok(())
    }
}

/// Inputs of the consensus index for one (agent, arm).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecIndexInputs {
    pub s_hat: f64,
    pub n_hat: f64,
    pub t: f64,
    pub agents: usize,
    pub rho: f64,
    pub sigma: f64,
    pub c_i: f64,
    pub privacy: Privacy,
    pub delta: f64,
}

/// The confidence radius `sigma * sqrt(2 rho (n + c_i) / (M n) * ln t / n)`.
pub fn confidence_radius(n_hat: f64, ln_t: f64, agents: usize, rho: f64, sigma: f64, c_i: f64) -> f64 {
    sigma * (2.0 * rho * (n_hat + c_i) / (agents as f64 * n_hat) * ln_t / n_hat).sqrt()
}

/// Consensus index for one (agent, arm).
pub fn compute_dec_index(x: &DecIndexInputs) -> Result<f64, SimError> {
    if x.n_hat.is_nan() || x.n_hat < 1.0 - ESTIMABLE_SLACK {
        return Err(SimError::NotEstimable { agent: usize::MAX, arm: usize::MAX, n_hat: x.n_hat });
    }
    if x.t.is_nan() || x.t < 2.0 {
        return Err(SimError::InvalidParameter(format!("index needs t >= 2, got {}", x.t)));
    }
    let radius = confidence_radius(x.n_hat, x.t.ln(), x.agents, x.rho, x.sigma, x.c_i);
    let privacy_term = x.privacy.certificate(x.n_hat.max(1.0), x.delta)?;
    Ok(x.s_hat / x.n_hat + radius + privacy_term)
}

/// One mixing round: `n_hat_j <- P (n_hat_j + xi_j)` and `s_hat_j <- P s_hat_j`
/// for every arm. Vectors are indexed `[arm][agent]`.
pub fn consensus_update(
    mm: &MixingMatrix,
    n_hat: &mut [Vec<f64>],
    s_hat: &mut [Vec<f64>],
    xi: &[Vec<f64>],
) -> Result<(), SimError> {
    let m = mm.len();
    if s_hat.len() != n_hat.len() || xi.len() != n_hat.len() {
        return Err(SimError::DimensionMismatch { expected: n_hat.len(), got: s_hat.len().min(xi.len()) });
    }
    let mut buf = vec![0.0; m];
    for ((n, s), x) in n_hat.iter_mut().zip(s_hat.iter_mut()).zip(xi) {
        for v in [n.len(), s.len(), x.len()] {
            if v != m {
                return Err(SimError::DimensionMismatch { expected: m, got: v });
            }
        }
        for (b, (a, d)) in buf.iter_mut().zip(n.iter().zip(x)) {
            *b = a + d;
        }
        mm.mix_into(&buf, n);
        buf.copy_from_slice(s);
        mm.mix_into(&buf, s);
    }
    Ok(())
}

/// Record of `|n_hat - n_avg| <= c0` checks.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CountBoundAudit {
    pub checks: u64,
    pub violations: u64,
    /// Largest `|n_hat - n_avg|` observed.
    pub max_deviation: f64,
}

#[derive(Debug, Clone)]
struct DecAgent {
    mechanisms: Vec<HybridMechanism>,
    last_private: Vec<f64>,
    reward_rng: SimRng,
    noise_rng: SimRng,
}

/// Full decentralized simulation.
#[derive(Debug, Clone)]
pub struct DecentralizedSim {
    cfg: DecConfig,
    mm: MixingMatrix,
    constants: SpectralConstants,
    agents: Vec<DecAgent>,
    env: BanditEnv,
    n_hat: Vec<Vec<f64>>,
    s_hat: Vec<Vec<f64>>,
    xi: Vec<Vec<f64>>,
    index_buf: Vec<f64>,
    audit: CountBoundAudit,
    t: u64,
    #[cfg(feature = "audit")]
    shadow: Shadow,
}

impl DecentralizedSim {
    pub fn new(arms: ArmSet, mm: MixingMatrix, cfg: DecConfig, seed: u64) -> Result<Self, SimError> {
        cfg.validate()?;
        let constants = mm.spectral_constants()?;
        let m = mm.len();
        let k = arms.len();
        let env = BanditEnv::new(arms, m)?;
        let mech = HybridMechanism::new(cfg.privacy, cfg.delta, cfg.clamp)?;
        let agents = (0..m)
            .map(|i| DecAgent {
                mechanisms: vec![mech.clone(); k],
                last_private: vec![0.0; k],
                reward_rng: reward_stream(seed, i),
                noise_rng: noise_stream(seed, i),
            })
            .collect();
        Ok(Self {
            cfg,
            mm,
            constants,
            agents,
            env,
            n_hat: vec![vec![0.0; m]; k],
            s_hat: vec![vec![0.0; m]; k],
            xi: vec![vec![0.0; m]; k],
            index_buf: vec![0.0; k],
            audit: CountBoundAudit::default(),
            t: 1,
            #[cfg(feature = "audit")]
            shadow: Shadow::new(k, m),
        })
    }

    pub fn constants(&self) -> &SpectralConstants {
        &self.constants
    }

    pub fn mixing(&self) -> &MixingMatrix {
        &self.mm
    }

    /// `n_hat[agent]` for `arm`.
    pub fn n_hat(&self, arm: usize) -> &[f64] {
        &self.n_hat[arm]
    }

    /// `s_hat[agent]` for `arm`.
    pub fn s_hat(&self, arm: usize) -> &[f64] {
        &self.s_hat[arm]
    }

    pub fn count_bound_audit(&self) -> CountBoundAudit {
        self.audit
    }

    fn num_agents(&self) -> usize {
        self.agents.len()
    }

    fn mix(&mut self) -> Result<(), SimError> {
        consensus_update(&self.mm, &mut self.n_hat, &mut self.s_hat, &self.xi)?;
        #[cfg(feature = "audit")]
        self.shadow.mix(&self.mm);
        if self.cfg.track_count_bound {
            self.check_count_bound();
        }
        Ok(())
    }

    fn check_count_bound(&mut self) {
        let m = self.num_agents() as f64;
        let c0 = self.constants.c0;
        for (arm, row) in self.n_hat.iter().enumerate() {
            let avg = self.env.arm_total(arm) as f64 / m;
            for &n in row {
                let dev = (n - avg).abs();
                self.audit.checks += 1;
                self.audit.max_deviation = self.audit.max_deviation.max(dev);
                if dev > c0 + 1e-9 {
                    self.audit.violations += 1;
                }
            }
        }
    }

    fn choose(&mut self, agent: usize) -> Result<usize, SimError> {
        let m = self.num_agents();
        for arm in 0..self.env.num_arms() {
            let n_hat = self.n_hat[arm][agent];
            self.index_buf[arm] = if n_hat < 1.0 - ESTIMABLE_SLACK {
                f64::INFINITY
            } else {
                let v = compute_dec_index(&DecIndexInputs {
                    s_hat: self.s_hat[arm][agent],
                    n_hat,
                    t: self.t as f64,
                    agents: m,
                    rho: self.cfg.rho,
                    sigma: self.cfg.sigma,
                    c_i: self.constants.ci[agent],
                    privacy: self.cfg.privacy,
                    delta: self.cfg.delta,
                })?;
                if !v.is_finite() {
                    return Err(SimError::NonFiniteIndex { agent, arm, value: v });
                }
                v
            };
        }
        Ok(argmax(&self.index_buf))
    }

    fn play(&mut self, actions: &[usize]) -> Result<(), SimError> {
        for row in self.xi.iter_mut() {
            row.iter_mut().for_each(|x| *x = 0.0);
        }
        #[cfg(feature = "audit")]
        self.shadow.clear_rewards();
        for (i, &arm) in actions.iter().enumerate() {
            let agent = &mut self.agents[i];
            let reward = self.env.pull(i, arm, &mut agent.reward_rng)?;
            let mech = &mut agent.mechanisms[arm];
            mech.insert(reward, &mut agent.noise_rng);
            let private = mech.private_sum()?;
            self.s_hat[arm][i] += private - agent.last_private[arm];
            agent.last_private[arm] = private;
            self.xi[arm][i] = 1.0;
            #[cfg(feature = "audit")]
            self.shadow.record(arm, i, reward);
        }
        self.env.close_step();
        self.t += 1;
        Ok(())
    }

    /// Runs step `t` with externally chosen arms instead of the UCB rule.
    /// The mixing and private-sum updates are unchanged.
    pub fn step_forced(&mut self, actions: &[usize]) -> Result<(), SimError> {
        if actions.len() != self.num_agents() {
            return Err(SimError::DimensionMismatch { expected: self.num_agents(), got: actions.len() });
        }
        if self.t >= 2 {
            self.mix()?;
        }
        self.play(actions)
    }
}

impl Simulation for DecentralizedSim {
    fn step(&mut self) -> Result<Vec<usize>, SimError> {
        let t = self.t;
        let k = self.env.num_arms() as u64;
        if t >= 2 {
            self.mix()?;
        }
        let actions = if t <= k {
            vec![(t - 1) as usize; self.num_agents()]
        } else {
            (0..self.num_agents()).map(|i| self.choose(i)).collect::<Result<Vec<_>, _>>()?
        };
        self.play(&actions)?;
        Ok(actions)
    }

    fn time(&self) -> u64 {
        self.t
    }

    fn env(&self) -> &BanditEnv {
        &self.env
    }

    fn clamp_events(&self) -> u64 {
        self.agents.iter().flat_map(|a| a.mechanisms.iter()).map(HybridMechanism::clamp_events).sum()
    }
}

/// Non-private consensus estimate of reward sums, `y_hat_j <- P (y_hat_j + r_j)`
/// with raw rewards. Kept only for statistical tests; the policy never
/// reads it.
#[cfg(feature = "audit")]
#[derive(Debug, Clone)]
struct Shadow {
    y_hat: Vec<Vec<f64>>,
    rewards: Vec<Vec<f64>>,
    buf: Vec<f64>,
}

#[cfg(feature = "audit")]
impl Shadow {
    fn new(k: usize, m: usize) -> Self {
        Self { y_hat: vec![vec![0.0; m]; k], rewards: vec![vec![0.0; m]; k], buf: vec![0.0; m] }
    }

    fn mix(&mut self, mm: &MixingMatrix) {
        for (y, r) in self.y_hat.iter_mut().zip(&self.rewards) {
            for (b, (a, d)) in self.buf.iter_mut().zip(y.iter().zip(r)) {
                *b = a + d;
            }
            mm.mix_into(&self.buf, y);
        }
    }

    fn clear_rewards(&mut self) {
        for row in self.rewards.iter_mut() {
            row.iter_mut().for_each(|x| *x = 0.0);
        }
    }

    fn record(&mut self, arm: usize, agent: usize, reward: f64) {
        self.rewards[arm][agent] = reward;
    }
}

#[cfg(feature = "audit")]
impl DecentralizedSim {
    /// Consensus estimate of true reward sums for `arm`, one entry per agent.
    pub fn y_hat(&self, arm: usize) -> &[f64] {
        &self.shadow.y_hat[arm]
    }

    /// Exact clamped reward sum in agent `agent`'s mechanism for `arm`.
    pub fn raw_sum(&self, agent: usize, arm: usize) -> f64 {
        self.agents[agent].mechanisms[arm].raw_sum()
    }
}
