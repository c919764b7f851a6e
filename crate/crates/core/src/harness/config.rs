//! Experiment configuration.
//!
//! Plain-text `key = value` lines; `#` starts a comment. Keys:
//!
//! | key          | values                                             | default        |
//! |--------------|----------------------------------------------------|----------------|
//! | `algorithm`  | `master_worker`, `decentralized`                   | required       |
//! | `agents`     | M >= 1                                             | 20             |
//! | `arms`       | K >= 2                                             | 10             |
//! | `horizon`    | T > K                                              | 100000         |
//! | `topology`   | `cycle`, `complete`, `star`, `path`, `custom`      | `cycle`        |
//! | `edge_list`  | path of an edge-list file (custom topology)        |                |
//! | `kappa`      | mixing step size in (0, 1]                         | 0.5            |
//! | `reward`     | `bernoulli`, `uniform`, `gaussian`                 | `gaussian`     |
//! | `means`      | comma-separated arm means                          | 0.9 .. 0.1     |
//! | `sigma`      | Gaussian standard deviation                        | 0.1            |
//! | `epsilon`    | privacy level > 0, or `off`                        | 2              |
//! | `rho`        | exploration parameter >= 1 (decentralized)         | 2              |
//! | `delta`      | `auto`, `t^-4`, `half_t^-rho`, or a number in (0,1) | `auto`        |
//! | `repeats`    | independent runs                                   | 20             |
//! | `seed`       | master seed (u64)                                  | 0              |
//! | `output`     | output directory                                   | `out`          |
//! | `full_trace` | `true` to keep every step instead of the log grid  | `false`        |
//!
//! `delta = auto` means `T^-4` for the master-worker algorithm and
//! `T^-rho / 2` for the decentralized one.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::decentralized::DecConfig;
use crate::dp::Privacy;
use crate::env::{default_means, ArmModel, ArmSet};
use crate::master::MasterConfig;
use crate::topology::{Graph, MixingMatrix, Topology};

/// Environment variable that overrides the configured master seed.
pub const SEED_ENV: &str = "FEDBAN_SEED";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Invalid(Vec<String>),
    #[error("reading config: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    MasterWorker,
    Decentralized,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::MasterWorker => "master_worker",
            Algorithm::Decentralized => "decentralized",
        })
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "master_worker" | "master-worker" | "master" => Ok(Algorithm::MasterWorker),
            "decentralized" => Ok(Algorithm::Decentralized),
            other => Err(format!("unknown algorithm '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TopologySpec {
    Named(Topology),
    Custom(PathBuf),
}

impl fmt::Display for TopologySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TopologySpec::Named(t) => write!(f, "{t}"),
            TopologySpec::Custom(p) => write!(f, "custom:{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardKind {
    Bernoulli,
    Uniform,
    Gaussian,
}

impl fmt::Display for RewardKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RewardKind::Bernoulli => "bernoulli",
            RewardKind::Uniform => "uniform",
            RewardKind::Gaussian => "gaussian",
        })
    }
}

impl FromStr for RewardKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bernoulli" => Ok(RewardKind::Bernoulli),
            "uniform" => Ok(RewardKind::Uniform),
            "gaussian" | "normal" => Ok(RewardKind::Gaussian),
            other => Err(format!("unknown reward model '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaRule {
    Auto,
    InverseQuartic,
    HalfInversePowerRho,
    Explicit(f64),
}

impl fmt::Display for DeltaRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeltaRule::Auto => f.write_str("auto"),
            DeltaRule::InverseQuartic => f.write_str("t^-4"),
            DeltaRule::HalfInversePowerRho => f.write_str("half_t^-rho"),
            DeltaRule::Explicit(d) => write!(f, "{d}"),
        }
    }
}

impl FromStr for DeltaRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(DeltaRule::Auto),
            "t^-4" | "T^-4" => Ok(DeltaRule::InverseQuartic),
            "half_t^-rho" | "half_T^-rho" => Ok(DeltaRule::HalfInversePowerRho),
            other => other
                .parse()
                .map(DeltaRule::Explicit)
                .map_err(|_| format!("delta must be auto, t^-4, half_t^-rho or a number, got '{other}'")),
        }
    }
}

pub(crate) fn parse_privacy(s: &str) -> Result<Privacy, String> {
    if s.eq_ignore_ascii_case("off") {
        return Ok(Privacy::Off);
    }
    let eps: f64 = s.parse().map_err(|_| format!("epsilon must be a number or 'off', got '{s}'"))?;
    Ok(Privacy::Epsilon(eps))
}

fn privacy_str(p: Privacy) -> String {
    match p {
        Privacy::Epsilon(e) => e.to_string(),
        Privacy::Off => "off".into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub agents: usize,
    pub arms: usize,
    pub horizon: u64,
    pub topology: TopologySpec,
    pub kappa: f64,
    pub reward: RewardKind,
    pub means: Option<Vec<f64>>,
    pub sigma: f64,
    pub privacy: Privacy,
    pub rho: f64,
    pub delta: DeltaRule,
    pub repeats: usize,
    pub master_seed: u64,
    pub output: PathBuf,
    pub full_trace: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Decentralized,
            agents: 20,
            arms: 10,
            horizon: 100_000,
            topology: TopologySpec::Named(Topology::Cycle),
            kappa: 0.5,
            reward: RewardKind::Gaussian,
            means: None,
            sigma: 0.1,
            privacy: Privacy::Epsilon(2.0),
            rho: 2.0,
            delta: DeltaRule::Auto,
            repeats: 20,
            master_seed: 0,
            output: PathBuf::from("out"),
            full_trace: false,
        }
    }
}

impl ExperimentConfig {
    /// Parses the key-value format and validates the result. Every problem
    /// found is reported at once.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut errors = Vec::new();
        let mut saw_algorithm = false;
        let mut edge_list = None;
        let mut custom = false;

        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                errors.push(format!("line {}: expected 'key = value', found '{line}'", no + 1));
                continue;
            };
            let (key, value) = (key.trim(), value.trim());
            let res: Result<(), String> = (|| {
                match key {
                    "algorithm" => {
                        cfg.algorithm = value.parse()?;
                        saw_algorithm = true;
                    }
                    "agents" | "m" => cfg.agents = num(value)?,
                    "arms" | "k" => cfg.arms = num(value)?,
                    "horizon" | "t" => cfg.horizon = num(value)?,
                    "topology" => {
                        if value == "custom" {
                            custom = true;
                        } else {
                            cfg.topology = TopologySpec::Named(value.parse()?);
                        }
                    }
                    "edge_list" => edge_list = Some(PathBuf::from(value)),
                    "kappa" => cfg.kappa = num(value)?,
                    "reward" => cfg.reward = value.parse()?,
                    "means" => {
                        cfg.means = Some(value.split(',').map(|v| num::<f64>(v.trim())).collect::<Result<_, _>>()?)
                    }
                    "sigma" => cfg.sigma = num(value)?,
                    "epsilon" => cfg.privacy = parse_privacy(value)?,
                    "rho" => cfg.rho = num(value)?,
                    "delta" => cfg.delta = value.parse()?,
                    "repeats" => cfg.repeats = num(value)?,
                    "seed" => cfg.master_seed = num(value)?,
                    "output" => cfg.output = PathBuf::from(value),
                    "full_trace" => cfg.full_trace = num(value)?,
                    other => return Err(format!("unknown key '{other}'")),
                }
                Ok(())
            })();
            if let Err(e) = res {
                errors.push(format!("line {}: {e}", no + 1));
            }
        }
        if !saw_algorithm {
            errors.push("missing required key 'algorithm'".into());
        }
        match (custom, edge_list) {
            (true, Some(p)) => cfg.topology = TopologySpec::Custom(p),
            (true, None) => errors.push("topology = custom needs an edge_list path".into()),
            (false, Some(_)) => errors.push("edge_list is only used with topology = custom".into()),
            (false, None) => {}
        }
        if errors.is_empty() {
            cfg.validate()?;
            Ok(cfg)
        } else {
            if let Err(ConfigError::Invalid(more)) = cfg.validate() {
                if saw_algorithm {
                    errors.extend(more);
                }
            }
            Err(ConfigError::Invalid(errors))
        }
    }

    /// Applies `FEDBAN_SEED` from the environment, if set.
    pub fn apply_env_seed(&mut self) -> Result<(), ConfigError> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.master_seed =
                v.trim().parse().map_err(|_| ConfigError::Invalid(vec![format!("{SEED_ENV}='{v}' is not a u64")]))?;
        }
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Checks every constraint and reports all violations.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errs = Vec::new();
        if self.agents == 0 {
            errs.push("agents must be at least 1".into());
        }
        if self.arms < 2 {
            errs.push(format!("arms must be at least 2, got {}", self.arms));
        }
        if self.horizon <= self.arms as u64 {
            errs.push(format!("horizon {} must exceed the number of arms {}", self.horizon, self.arms));
        }
        if let Privacy::Epsilon(e) = self.privacy {
            if !(e.is_finite() && e > 0.0) {
                errs.push(format!("epsilon must be positive, got {e}"));
            }
        }
        if self.repeats == 0 {
            errs.push("repeats must be at least 1".into());
        }
        if self.reward == RewardKind::Gaussian && !(self.sigma.is_finite() && self.sigma > 0.0) {
            errs.push(format!("sigma must be positive, got {}", self.sigma));
        }
        if let DeltaRule::Explicit(d) = self.delta {
            if !(d > 0.0 && d < 1.0) {
                errs.push(format!("delta must lie in (0, 1), got {d}"));
            }
        }
        if let Some(means) = &self.means {
            if means.len() != self.arms {
                errs.push(format!("means lists {} values for {} arms", means.len(), self.arms));
            }
        }
        if self.arms >= 2 && self.means.as_ref().is_none_or(|m| m.len() == self.arms) {
            if let Err(e) = self.arm_set() {
                errs.push(e.to_string());
            }
        }
        if self.algorithm == Algorithm::Decentralized {
            if !(self.rho.is_finite() && self.rho >= 1.0) {
                errs.push(format!("rho must be at least 1, got {}", self.rho));
            }
            if !(self.kappa > 0.0 && self.kappa <= 1.0) {
                errs.push(format!("kappa must lie in (0, 1], got {}", self.kappa));
            }
            if self.agents == 1 && self.topology != TopologySpec::Named(Topology::Complete) {
                errs.push("a single agent needs topology = complete".into());
            } else if self.agents >= 1 {
                match self.graph() {
                    Ok(g) if g.len() != self.agents => {
                        errs.push(format!("edge list has {} agents but agents = {}", g.len(), self.agents))
                    }
                    Ok(_) => {}
                    Err(e) => errs.push(e.to_string()),
                }
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(errs))
        }
    }

    pub fn arm_set(&self) -> Result<ArmSet, crate::env::EnvError> {
        let means = self.means.clone().unwrap_or_else(|| default_means(self.arms));
        let arms = means
            .into_iter()
            .map(|mu| match self.reward {
                RewardKind::Bernoulli => ArmModel::Bernoulli { mu },
                RewardKind::Uniform => ArmModel::Uniform { mu },
                RewardKind::Gaussian => ArmModel::Gaussian { mu, sigma: self.sigma },
            })
            .collect();
        ArmSet::new(arms)
    }

    pub fn graph(&self) -> Result<Graph, crate::topology::TopologyError> {
        match &self.topology {
            TopologySpec::Named(t) => Graph::build(*t, self.agents),
            TopologySpec::Custom(p) => Graph::load_edge_list(p),
        }
    }

    pub fn mixing_matrix(&self) -> Result<MixingMatrix, crate::topology::TopologyError> {
        MixingMatrix::new(&self.graph()?, self.kappa)
    }

    pub fn resolved_delta(&self) -> f64 {
        match (self.delta, self.algorithm) {
            (DeltaRule::Explicit(d), _) => d,
            (DeltaRule::InverseQuartic, _) | (DeltaRule::Auto, Algorithm::MasterWorker) => {
                MasterConfig::default_delta(self.horizon)
            }
            (DeltaRule::HalfInversePowerRho, _) | (DeltaRule::Auto, Algorithm::Decentralized) => {
                DecConfig::default_delta(self.horizon, self.rho)
            }
        }
    }

    /// One-line canonical form; covers every field that affects results.
    pub fn canonical(&self) -> String {
        let means = self
            .means
            .as_ref()
            .map(|m| m.iter().map(f64::to_string).collect::<Vec<_>>().join(","))
            .unwrap_or_else(|| "default".into());
        let mut parts = vec![
            format!("algorithm={}", self.algorithm),
            format!("agents={}", self.agents),
            format!("arms={}", self.arms),
            format!("horizon={}", self.horizon),
            format!("reward={}", self.reward),
            format!("means={means}"),
            format!("sigma={}", self.sigma),
            format!("epsilon={}", privacy_str(self.privacy)),
            format!("delta={}", self.delta),
            format!("repeats={}", self.repeats),
            format!("seed={}", self.master_seed),
            format!("full_trace={}", self.full_trace),
        ];
        if self.algorithm == Algorithm::Decentralized {
            parts.push(format!("topology={}", self.topology));
            parts.push(format!("kappa={}", self.kappa));
            parts.push(format!("rho={}", self.rho));
        }
        parts.join(";")
    }

    pub fn hash(&self) -> String {
        canonical_hash(&self.canonical())
    }
}

/// First 16 hex digits of the SHA-256 of a canonical config line.
pub fn canonical_hash(canonical: &str) -> String {
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn num<T: FromStr>(s: &str) -> Result<T, String> {
    s.parse().map_err(|_| format!("cannot parse '{s}'"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_config() {
        let cfg = ExperimentConfig::parse(
            "# figure setup\nalgorithm = decentralized\nagents = 20\narms = 10\nhorizon = 1000\n\
             topology = cycle\nkappa = 0.5\nepsilon = 1.5\nrho = 2\nrepeats = 3\nseed = 9\n",
        )
        .unwrap();
        assert_eq!(cfg.algorithm, Algorithm::Decentralized);
        assert_eq!(cfg.privacy, Privacy::Epsilon(1.5));
        assert_eq!(cfg.repeats, 3);
        assert_eq!(cfg.master_seed, 9);
        assert!((cfg.resolved_delta() - 0.5e-6).abs() < 1e-18);
    }

    #[test]
    fn reports_every_violation() {
        let err = ExperimentConfig::parse(
            "algorithm = decentralized\narms = 10\nhorizon = 5\nepsilon = -1\nrho = 0.5\nbogus = 1\n",
        )
        .unwrap_err();
        let ConfigError::Invalid(list) = err else { panic!() };
        let joined = list.join("\n");
        for needle in ["unknown key 'bogus'", "horizon 5", "epsilon must be positive", "rho must be at least 1"] {
            assert!(joined.contains(needle), "missing '{needle}' in\n{joined}");
        }
    }

    #[test]
    fn missing_algorithm() {
        let ConfigError::Invalid(list) = ExperimentConfig::parse("agents = 3\n").unwrap_err() else { panic!() };
        assert!(list.iter().any(|e| e.contains("algorithm")));
    }

    #[test]
    fn tied_means_rejected() {
        let err = ExperimentConfig::parse("algorithm = master_worker\narms = 2\nmeans = 0.5,0.5\nreward = bernoulli\n");
        assert!(matches!(err, Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn noise_off_and_hash_sensitivity() {
        let a = ExperimentConfig::parse("algorithm = master_worker\nepsilon = off\n").unwrap();
        assert_eq!(a.privacy, Privacy::Off);
        let b = ExperimentConfig::parse("algorithm = master_worker\nepsilon = off\nseed = 1\n").unwrap();
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash(), a.clone().hash());
        assert_eq!(a.hash().len(), 16);
    }

    #[test]
    fn master_delta_default() {
        let cfg = ExperimentConfig::parse("algorithm = master_worker\nhorizon = 1000\n").unwrap();
        assert!((cfg.resolved_delta() - 1e-12).abs() < 1e-24);
    }
}
