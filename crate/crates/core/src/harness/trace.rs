//! Regret traces and their CSV form.
//!
//! A trace file starts with exactly four comment lines:
//!
//! ```text
//! # config_hash=<hex> config=<canonical config>
//! # seed=<run seed> repeat=<r>
//! # algorithm=<name> clamp_events=<n> histogram=<c0|c1|...>
//! # grid=<log|full> points=<n> horizon=<T>
//! t,regret
//! ```
//!
//! followed by one row per grid point. Loading recomputes the hash of the
//! embedded config and rejects files whose header was edited.

use std::fmt::Write as _;
use std::path::Path;

use super::config::canonical_hash;
use super::HarnessError;

/// Number of log-spaced points in the default grid.
pub const LOG_GRID_POINTS: usize = 200;

/// `LOG_GRID_POINTS` log-spaced steps in `[1, T]`, plus `T/10`, `T/2` and
/// `T`, deduplicated and sorted.
pub fn log_grid(horizon: u64) -> Vec<u64> {
    assert!(horizon >= 1);
    let ln_t = (horizon as f64).ln();
    let mut grid: Vec<u64> = (0..LOG_GRID_POINTS)
        .map(|i| {
            let x = (ln_t * i as f64 / (LOG_GRID_POINTS - 1) as f64).exp().round() as u64;
            x.clamp(1, horizon)
        })
        .collect();
    grid.extend([(horizon / 10).max(1), (horizon / 2).max(1), horizon]);
    grid.sort_unstable();
    grid.dedup();
    grid
}

pub fn full_grid(horizon: u64) -> Vec<u64> {
    (1..=horizon).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    Log,
    Full,
}

impl GridKind {
    fn as_str(self) -> &'static str {
        match self {
            GridKind::Log => "log",
            GridKind::Full => "full",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    pub config_hash: String,
    pub config: String,
    pub algorithm: String,
    pub seed: u64,
    pub repeat: usize,
    pub clamp_events: u64,
    /// Pulls per arm summed over agents and time.
    pub histogram: Vec<u64>,
    pub grid_kind: GridKind,
    pub horizon: u64,
    pub grid: Vec<u64>,
    pub regret: Vec<f64>,
}

impl RegretTrace {
    /// Samples a per-step cumulative regret series (entry `t - 1` is `R(t)`)
    /// on the grid.
    pub fn sample(full: &[f64], grid: &[u64]) -> Vec<f64> {
        grid.iter().map(|&t| full[t as usize - 1]).collect()
    }

    /// Regret at step `t`, which must be a grid point.
    pub fn at(&self, t: u64) -> Option<f64> {
        self.grid.binary_search(&t).ok().map(|i| self.regret[i])
    }

    pub fn final_regret(&self) -> f64 {
        *self.regret.last().expect("non-empty trace")
    }

    pub fn to_csv(&self) -> String {
        let hist = self.histogram.iter().map(u64::to_string).collect::<Vec<_>>().join("|");
        let mut out = String::with_capacity(32 * self.grid.len() + 256);
        let _ = writeln!(out, "# config_hash={} config={}", self.config_hash, self.config);
        let _ = writeln!(out, "# seed={} repeat={}", self.seed, self.repeat);
        let _ = writeln!(out, "# algorithm={} clamp_events={} histogram={}", self.algorithm, self.clamp_events, hist);
        let _ = writeln!(out, "# grid={} points={} horizon={}", self.grid_kind.as_str(), self.grid.len(), self.horizon);
        out.push_str("t,regret\n");
        for (t, r) in self.grid.iter().zip(&self.regret) {
            let _ = writeln!(out, "{t},{r}");
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<(), HarnessError> {
        std::fs::write(path, self.to_csv()).map_err(|e| HarnessError::io(path, e))
    }

    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let bad = |msg: &str| HarnessError::TraceFormat(msg.to_string());
        let mut lines = text.lines();
        let mut header = || lines.next().and_then(|l| l.strip_prefix("# ")).ok_or_else(|| bad("truncated header"));

        let h1 = header()?;
        let rest = h1.strip_prefix("config_hash=").ok_or_else(|| bad("missing config_hash"))?;
        let (hash, config) = rest.split_once(" config=").ok_or_else(|| bad("missing config"))?;
        let recomputed = canonical_hash(config);
        if recomputed != hash {
            return Err(HarnessError::HashMismatch { stored: hash.to_string(), recomputed });
        }

        let h2 = fields(header()?);
        let seed = field(&h2, "seed")?.parse().map_err(|_| bad("bad seed"))?;
        let repeat = field(&h2, "repeat")?.parse().map_err(|_| bad("bad repeat"))?;

        let h3 = fields(header()?);
        let algorithm = field(&h3, "algorithm")?.to_string();
        let clamp_events = field(&h3, "clamp_events")?.parse().map_err(|_| bad("bad clamp_events"))?;
        let hist = field(&h3, "histogram")?;
        let histogram = if hist.is_empty() {
            Vec::new()
        } else {
            hist.split('|').map(str::parse).collect::<Result<_, _>>().map_err(|_| bad("bad histogram"))?
        };

        let h4 = fields(header()?);
        let grid_kind = match field(&h4, "grid")? {
            "log" => GridKind::Log,
            "full" => GridKind::Full,
            _ => return Err(bad("unknown grid kind")),
        };
        let points: usize = field(&h4, "points")?.parse().map_err(|_| bad("bad points"))?;
        let horizon = field(&h4, "horizon")?.parse().map_err(|_| bad("bad horizon"))?;

        if lines.next() != Some("t,regret") {
            return Err(bad("missing column header"));
        }
        let mut grid = Vec::with_capacity(points);
        let mut regret = Vec::with_capacity(points);
        for line in lines.filter(|l| !l.is_empty()) {
            let (t, r) = line.split_once(',').ok_or_else(|| bad("bad row"))?;
            grid.push(t.parse::<u64>().map_err(|_| bad("bad step"))?);
            regret.push(r.parse::<f64>().map_err(|_| bad("bad regret"))?);
        }
        if grid.len() != points {
            return Err(bad("row count does not match header"));
        }
        if grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(bad("grid is not strictly increasing"));
        }
        Ok(Self {
            config_hash: hash.to_string(),
            config: config.to_string(),
            algorithm,
            seed,
            repeat,
            clamp_events,
            histogram,
            grid_kind,
            horizon,
            grid,
            regret,
        })
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::parse(&text)
    }
}

fn fields(line: &str) -> Vec<(&str, &str)> {
    line.split(' ').filter_map(|kv| kv.split_once('=')).collect()
}

fn field<'a>(fields: &[(&'a str, &'a str)], key: &str) -> Result<&'a str, HarnessError> {
    fields
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| HarnessError::TraceFormat(format!("missing field '{key}'")))
}
