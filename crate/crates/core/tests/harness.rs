mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use fedban::dp::Privacy;
use fedban::env::{ArmModel, ArmSet};
use fedban::harness::{
    run_experiment, simulate, summarize, sweep, ConfigError, ExperimentConfig, GridKind, HarnessError, RegretTrace,
    SweepParam,
};
use fedban::rng::run_seed;

fn config(text: &str, out: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::parse(text).unwrap();
    cfg.output = out.to_path_buf();
    cfg
}

fn read_dir(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in walk(dir) {
        let rel = entry.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
        out.insert(rel, fs::read(&entry).unwrap());
    }
    out
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut files = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            files.extend(walk(&p));
        } else {
            files.push(p);
        }
    }
    files
}

const SMALL: &str = "algorithm = decentralized\nagents = 4\narms = 4\nhorizon = 1500\ntopology = cycle\n\
                     epsilon = 2\nrepeats = 3\nseed = 5\n";

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_experiment(&config(SMALL, &a)).unwrap();
    run_experiment(&config(SMALL, &b)).unwrap();
    let (fa, fb) = (read_dir(&a), read_dir(&b));
    assert_eq!(fa.len(), 3 + 2);
    assert_eq!(fa, fb);
}

#[test]
fn trace_files_load_and_verify() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_experiment(&config(SMALL, dir.path())).unwrap();
    let path = dir.path().join("run_001.csv");
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().take_while(|l| l.starts_with('#')).count(), 4);
    let tr = RegretTrace::load(&path).unwrap();
    assert_eq!(tr, out.traces[1]);
    assert_eq!(tr.seed, run_seed(5, 1));
    assert_eq!(tr.grid_kind, GridKind::Log);
    assert!(tr.regret.windows(2).all(|w| w[1] >= w[0]));

    let tampered = text.replacen("epsilon=2", "epsilon=5", 1);
    fs::write(&path, tampered).unwrap();
    assert!(matches!(RegretTrace::load(&path), Err(HarnessError::HashMismatch { .. })));
}

#[test]
fn summary_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(SMALL, dir.path());
    let traces = simulate(&cfg).unwrap();
    let one = summarize(&traces[..1]).unwrap();
    assert_eq!(one.mean_curve(), traces[0].regret);
    assert!(one.per_point.iter().all(|s| s.std == 0.0));

    let mut a = traces[0].clone();
    let mut b = traces[0].clone();
    *a.regret.last_mut().unwrap() = 10.0;
    *b.regret.last_mut().unwrap() = 14.0;
    let s = summarize(&[a, b]).unwrap();
    assert_eq!((s.final_regret.mean, s.final_regret.std), (12.0, 2.0));

    let mut c = traces[1].clone();
    c.grid.pop();
    c.regret.pop();
    assert!(matches!(summarize(&[traces[0].clone(), c]), Err(HarnessError::GridMismatch)));
}

#[test]
fn full_trace_keeps_every_step() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(SMALL, dir.path());
    cfg.full_trace = true;
    cfg.repeats = 1;
    let tr = &simulate(&cfg).unwrap()[0];
    assert_eq!(tr.grid, (1..=1500).collect::<Vec<_>>());
}

#[test]
fn singleton_sweep_equals_run() {
    let dir = tempfile::tempdir().unwrap();
    let base = config(SMALL, &dir.path().join("sweep"));
    let sw = sweep(&base, SweepParam::Epsilon, &["2".to_string()]).unwrap();
    let direct = run_experiment(&config(SMALL, &dir.path().join("run"))).unwrap();
    assert_eq!(sw.traces[0], direct.traces);
    assert_eq!(
        fs::read(dir.path().join("sweep/epsilon=2/summary.jsonl")).unwrap(),
        fs::read(dir.path().join("run/summary.jsonl")).unwrap()
    );
    assert!(!sw.notes.is_empty());
}

#[test]
fn sweeps_share_seeds_and_write_plot_columns() {
    let dir = tempfile::tempdir().unwrap();
    let base = config(SMALL, dir.path());
    let values: Vec<String> = ["1.5", "2", "5"].map(String::from).to_vec();
    let sw = sweep(&base, SweepParam::Epsilon, &values).unwrap();
    for v in &sw.traces {
        let seeds: Vec<u64> = v.iter().map(|t| t.seed).collect();
        assert_eq!(seeds, (0..3).map(|r| run_seed(5, r)).collect::<Vec<_>>());
    }
    let plot = fs::read_to_string(&sw.plot_path).unwrap();
    assert_eq!(plot.lines().next().unwrap(), "t,epsilon=1.5,epsilon=2,epsilon=5");
    assert!(plot.lines().skip(1).all(|l| l.split(',').count() == 4));
}

#[test]
fn rho_sweep_needs_the_decentralized_algorithm() {
    let dir = tempfile::tempdir().unwrap();
    let base = config("algorithm = master_worker\narms = 3\nhorizon = 100\n", dir.path());
    let err = sweep(&base, SweepParam::Rho, &["2".into()]).unwrap_err();
    assert!(matches!(err, HarnessError::InapplicableParameter { .. }));
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn validation_lists_all_problems() {
    let err = ExperimentConfig::parse(
        "algorithm = decentralized\nagents = 0\narms = 1\nkappa = 2\nrepeats = 0\nmeans = 0.5\n",
    )
    .unwrap_err();
    let ConfigError::Invalid(list) = err else { panic!("expected validation report") };
    assert!(list.len() >= 4, "{list:?}");
    assert_eq!(HarnessError::from(ConfigError::Invalid(list)).exit_code(), 2);
}

#[test]
fn spectral_gap_failure_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg =
        config("algorithm = decentralized\nagents = 4\narms = 3\nhorizon = 100\nkappa = 1\nrepeats = 1\n", dir.path());
    let err = simulate(&cfg).unwrap_err();
    assert_eq!(err.exit_code(), 4, "{err}");
}

#[test]
fn noise_free_single_agent_matches_reference_regret() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        "algorithm = decentralized\nagents = 1\ntopology = complete\narms = 3\nmeans = 0.7,0.5,0.2\n\
         reward = bernoulli\nhorizon = 4000\nepsilon = off\nrho = 1\nrepeats = 1\nseed = 3\n",
        dir.path(),
    );
    assert_eq!(cfg.privacy, Privacy::Off);
    let tr = &simulate(&cfg).unwrap()[0];
    let arms = ArmSet::new([0.7, 0.5, 0.2].map(|mu| ArmModel::Bernoulli { mu }).to_vec()).unwrap();
    let actions = common::variance_aware_ucb_actions(&arms, run_seed(3, 0), 4000, 1.0, 0.5);
    let gaps = arms.gaps();
    let oracle: f64 = actions.iter().map(|&a| gaps[a]).sum();
    assert!((tr.final_regret() - oracle).abs() < 1e-9, "{} vs {oracle}", tr.final_regret());
}

#[test]
fn final_regret_is_stable_across_repeats() {
    // Pilot runs of this setup give std/mean around 0.1.
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(
        "algorithm = decentralized\nagents = 10\narms = 5\nhorizon = 5000\nepsilon = 2\nrepeats = 20\n",
        dir.path(),
    );
    cfg.master_seed = 11;
    let s = summarize(&simulate(&cfg).unwrap()).unwrap();
    assert!(s.final_regret.std / s.final_regret.mean < 0.5, "{:?}", s.final_regret);
}

#[test]
fn env_seed_override() {
    let mut cfg = ExperimentConfig::parse("algorithm = master_worker\nseed = 1\n").unwrap();
    std::env::set_var("FEDBAN_SEED", "99");
    cfg.apply_env_seed().unwrap();
    std::env::remove_var("FEDBAN_SEED");
    assert_eq!(cfg.master_seed, 99);
}
