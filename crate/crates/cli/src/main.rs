use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fedban::dp::Privacy;
use fedban::harness::{
    self, run_experiment, summarize, sweep, topology_exit_code, ExperimentConfig, HarnessError, RegretTrace, SweepParam,
};
use fedban::topology::{Graph, MixingMatrix, Topology};

#[derive(Parser)]
#[command(name = "fedban", version, about = "Differentially private federated bandit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every repeat of one configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Master seed; overrides FEDBAN_SEED and the config file.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; overrides the config file.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Pass `off` to disable privacy noise.
        #[arg(long, value_parser = ["off"])]
        noise: Option<String>,
        /// Record regret at every step instead of the log grid.
        #[arg(long)]
        full_trace: bool,
    },
    /// Run a configuration once per value of one parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// epsilon, rho, topology or agents.
        #[arg(long)]
        param: SweepParam,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Aggregate trace files produced by `run`.
    Summarize {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
    },
    /// Print the mixing matrix diagnostics of a topology.
    GraphInfo {
        #[arg(long)]
        topology: Topology,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0.5)]
        kappa: f64,
    },
}

fn load_config(path: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = ExperimentConfig::load(path)?;
    cfg.apply_env_seed()?;
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    if let Some(o) = out {
        cfg.output = o;
    }
    Ok(cfg)
}

fn print_summary(label: &str, s: &harness::Summary) {
    let f = &s.final_regret;
    println!(
        "{label:<24} R(T) mean {:>12.3}  std {:>10.3}  min {:>12.3}  max {:>12.3}  late/mid rate {:.3}",
        f.mean, f.std, f.min, f.max, s.sublinearity.ratio
    );
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Run { config, seed, out, noise, full_trace } => {
            let mut cfg = load_config(&config, seed, out)?;
            if noise.is_some() {
                cfg.privacy = Privacy::Off;
            }
            cfg.full_trace |= full_trace;
            cfg.validate()?;
            let res = run_experiment(&cfg)?;
            println!("config {}  ({} repeats, T = {})", res.summary.config_hash, cfg.repeats, cfg.horizon);
            print_summary(&cfg.algorithm.to_string(), &res.summary);
            println!("wrote {}", res.dir.display());
        }
        Command::Sweep { config, param, values, seed, out } => {
            let cfg = load_config(&config, seed, out)?;
            let res = sweep(&cfg, param, &values)?;
            for note in &res.notes {
                println!("note: {note}");
            }
            for (v, s) in res.values.iter().zip(&res.summaries) {
                print_summary(&format!("{param}={v}"), s);
            }
            println!("wrote {}", res.plot_path.display());
        }
        Command::Summarize { traces } => {
            let loaded = traces.iter().map(|p| RegretTrace::load(p)).collect::<Result<Vec<_>, _>>()?;
            let s = summarize(&loaded)?;
            print_summary(&s.algorithm, &s);
            println!("{}", s.to_json());
        }
        Command::GraphInfo { .. } => unreachable!("handled separately"),
    }
    Ok(())
}

fn graph_info(topology: Topology, m: usize, kappa: f64) -> Result<(), fedban::topology::TopologyError> {
    let graph = Graph::build(topology, m)?;
    let mm = MixingMatrix::new(&graph, kappa)?;
    println!("topology {topology}, M = {m}, kappa = {kappa}, max degree {}", graph.max_degree());
    let sums = mm.row_sums();
    let worst = sums.iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max);
    println!("row sums: max |sum - 1| = {worst:.3e}");
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(" ");
    println!("eigenvalues: {}", fmt(mm.eigenvalues()));
    let c = mm.spectral_constants()?;
    println!("c0 = {:.6}", c.c0);
    println!("c_i: {}", fmt(&c.ci));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Command::GraphInfo { topology, m, kappa } = cli.command {
        return match graph_info(topology, m, kappa) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(topology_exit_code(&e) as u8)
            }
        };
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
