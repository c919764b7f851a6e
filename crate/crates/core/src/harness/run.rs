//! Running experiments and parameter sweeps.
//!
//! Repeat `r` of a configuration with master seed `s` always uses run seed
//! `run_seed(s, r)`, so a sweep compares parameter values on identical
//! reward and noise streams. Repeats run in parallel; their results do not
//! depend on scheduling.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{parse_privacy, Algorithm, ExperimentConfig, TopologySpec};
use super::summary::{summarize, Summary};
use super::trace::{full_grid, log_grid, GridKind, RegretTrace};
use super::HarnessError;
use crate::decentralized::{DecConfig, DecentralizedSim};
use crate::master::{MasterConfig, MasterWorkerSim};
use crate::rng::run_seed;
use crate::sim::{SimError, Simulation};

/// Builds the simulation a config describes, seeded with `seed`.
pub fn build_simulation(cfg: &ExperimentConfig, seed: u64) -> Result<Box<dyn Simulation + Send>, HarnessError> {
    let arms = cfg.arm_set().map_err(SimError::from)?;
    let clamp = arms.default_clamp();
    let delta = cfg.resolved_delta();
    Ok(match cfg.algorithm {
        Algorithm::MasterWorker => {
            Box::new(MasterWorkerSim::new(arms, cfg.agents, MasterConfig { privacy: cfg.privacy, delta, clamp }, seed)?)
        }
        Algorithm::Decentralized => {
            let mm = cfg.mixing_matrix().map_err(SimError::from)?;
            let sigma = arms.index_sigma();
            Box::new(DecentralizedSim::new(
                arms,
                mm,
                DecConfig { privacy: cfg.privacy, delta, clamp, rho: cfg.rho, sigma, track_count_bound: false },
                seed,
            )?)
        }
    })
}

/// Runs repeat `repeat` of `cfg` to the horizon and samples its regret.
pub fn simulate_repeat(cfg: &ExperimentConfig, repeat: usize) -> Result<RegretTrace, HarnessError> {
    let seed = run_seed(cfg.master_seed, repeat as u64);
    let mut sim = build_simulation(cfg, seed)?;
    sim.run(cfg.horizon)?;
    let (grid_kind, grid) =
        if cfg.full_trace { (GridKind::Full, full_grid(cfg.horizon)) } else { (GridKind::Log, log_grid(cfg.horizon)) };
    let env = sim.env();
    let canonical = cfg.canonical();
    Ok(RegretTrace {
        config_hash: super::config::canonical_hash(&canonical),
        config: canonical,
        algorithm: cfg.algorithm.to_string(),
        seed,
        repeat,
        clamp_events: sim.clamp_events(),
        histogram: env.action_histogram(),
        grid_kind,
        horizon: cfg.horizon,
        regret: RegretTrace::sample(env.regret_trace(), &grid),
        grid,
    })
}

/// All repeats of `cfg`, in repeat order.
pub fn simulate(cfg: &ExperimentConfig) -> Result<Vec<RegretTrace>, HarnessError> {
    cfg.validate()?;
    (0..cfg.repeats).into_par_iter().map(|r| simulate_repeat(cfg, r)).collect()
}

#[derive(Debug)]
pub struct ExperimentOutput {
    pub traces: Vec<RegretTrace>,
    pub summary: Summary,
    pub dir: PathBuf,
}

#[derive(Serialize)]
struct RunRecord<'a> {
    kind: &'static str,
    repeat: usize,
    seed: u64,
    final_regret: f64,
    clamp_events: u64,
    histogram: &'a [u64],
}

#[derive(Serialize)]
struct SummaryRecord<'a> {
    kind: &'static str,
    #[serde(flatten)]
    summary: &'a Summary,
}

fn write_file(path: &Path, contents: &str) -> Result<(), HarnessError> {
    std::fs::write(path, contents).map_err(|e| HarnessError::io(path, e))
}

/// Writes one CSV per repeat, `summary.jsonl` (a line per repeat and a
/// final aggregate line) and `curve.csv` into `dir`.
fn write_outputs(dir: &Path, traces: &[RegretTrace], summary: &Summary) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut jsonl = String::new();
    for tr in traces {
        tr.write(&dir.join(format!("run_{:03}.csv", tr.repeat)))?;
        let rec = RunRecord {
            kind: "run",
            repeat: tr.repeat,
            seed: tr.seed,
            final_regret: tr.final_regret(),
            clamp_events: tr.clamp_events,
            histogram: &tr.histogram,
        };
        jsonl.push_str(&serde_json::to_string(&rec).expect("record serializes"));
        jsonl.push('\n');
    }
    let rec = SummaryRecord { kind: "summary", summary };
    jsonl.push_str(&serde_json::to_string(&rec).expect("record serializes"));
    jsonl.push('\n');
    write_file(&dir.join("summary.jsonl"), &jsonl)?;
    write_file(&dir.join("curve.csv"), &summary.curve_csv())
}

/// Runs every repeat, writes the outputs into `cfg.output`, and returns
/// the traces with their summary.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput, HarnessError> {
    let traces = simulate(cfg)?;
    let summary = summarize(&traces)?;
    write_outputs(&cfg.output, &traces, &summary)?;
    Ok(ExperimentOutput { traces, summary, dir: cfg.output.clone() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Epsilon,
    Rho,
    Topology,
    Agents,
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParam::Epsilon => "epsilon",
            SweepParam::Rho => "rho",
            SweepParam::Topology => "topology",
            SweepParam::Agents => "agents",
        })
    }
}

impl FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "epsilon" | "eps" => Ok(SweepParam::Epsilon),
            "rho" => Ok(SweepParam::Rho),
            "topology" => Ok(SweepParam::Topology),
            "agents" | "m" | "M" => Ok(SweepParam::Agents),
            other => Err(format!("cannot sweep '{other}'; use epsilon, rho, topology or agents")),
        }
    }
}

impl SweepParam {
    /// A copy of `base` with this parameter set to `value`.
    pub fn apply(self, base: &ExperimentConfig, value: &str) -> Result<ExperimentConfig, HarnessError> {
        let invalid = |msg: String| HarnessError::Config(super::ConfigError::Invalid(vec![msg]));
        if base.algorithm == Algorithm::MasterWorker && matches!(self, SweepParam::Rho | SweepParam::Topology) {
            return Err(HarnessError::InapplicableParameter {
                param: self.to_string(),
                algorithm: base.algorithm.to_string(),
            });
        }
        let mut cfg = base.clone();
        match self {
            SweepParam::Epsilon => cfg.privacy = parse_privacy(value).map_err(invalid)?,
            SweepParam::Rho => cfg.rho = value.parse().map_err(|_| invalid(format!("bad rho '{value}'")))?,
            SweepParam::Topology => cfg.topology = TopologySpec::Named(value.parse().map_err(invalid)?),
            SweepParam::Agents => {
                cfg.agents = value.parse().map_err(|_| invalid(format!("bad agent count '{value}'")))?
            }
        }
        cfg.output = base.output.join(format!("{self}={value}"));
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug)]
pub struct SweepOutput {
    pub param: SweepParam,
    pub values: Vec<String>,
    pub summaries: Vec<Summary>,
    pub traces: Vec<Vec<RegretTrace>>,
    /// Remarks worth showing to the user alongside the results.
    pub notes: Vec<String>,
    /// The combined mean-regret CSV.
    pub plot_path: PathBuf,
}

/// Runs `base` once per value of `param` on shared seeds. Each value gets
/// its own output directory under `base.output`; the mean curves go to
/// `sweep_<param>.csv` there as well.
pub fn sweep(base: &ExperimentConfig, param: SweepParam, values: &[String]) -> Result<SweepOutput, HarnessError> {
    let configs: Vec<ExperimentConfig> = values.iter().map(|v| param.apply(base, v)).collect::<Result<_, _>>()?;
    let jobs: Vec<(usize, usize)> = (0..configs.len()).flat_map(|c| (0..base.repeats).map(move |r| (c, r))).collect();
    let flat: Vec<RegretTrace> =
        jobs.par_iter().map(|&(c, r)| simulate_repeat(&configs[c], r)).collect::<Result<_, _>>()?;

    let mut traces: Vec<Vec<RegretTrace>> = vec![Vec::with_capacity(base.repeats); configs.len()];
    for ((c, _), tr) in jobs.iter().zip(flat) {
        traces[*c].push(tr);
    }
    let mut summaries = Vec::with_capacity(configs.len());
    for (cfg, trs) in configs.iter().zip(&traces) {
        let s = summarize(trs)?;
        write_outputs(&cfg.output, trs, &s)?;
        summaries.push(s);
    }

    let grid = &summaries[0].grid;
    if summaries.iter().any(|s| &s.grid != grid) {
        return Err(HarnessError::GridMismatch);
    }
    let mut csv = String::from("t");
    for v in values {
        csv.push_str(&format!(",{param}={v}"));
    }
    csv.push('\n');
    for (i, t) in grid.iter().enumerate() {
        csv.push_str(&t.to_string());
        for s in &summaries {
            csv.push_str(&format!(",{}", s.per_point[i].mean));
        }
        csv.push('\n');
    }
    std::fs::create_dir_all(&base.output).map_err(|e| HarnessError::io(&base.output, e))?;
    let plot_path = base.output.join(format!("sweep_{param}.csv"));
    write_file(&plot_path, &csv)?;

    let mut notes = Vec::new();
    if param == SweepParam::Epsilon {
        notes.push(
            "every epsilon value reuses the same reward and noise streams per repeat; \
             differences in regret come from the privacy noise scale alone"
                .to_string(),
        );
    }
    Ok(SweepOutput { param, values: values.to_vec(), summaries, traces, notes, plot_path })
}
