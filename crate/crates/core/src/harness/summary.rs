//! Aggregation of regret traces across repeats.

use serde::Serialize;

use super::trace::RegretTrace;
use super::HarnessError;

/// Mean, population standard deviation, min and max of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stats {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Self {
        assert!(!values.is_empty());
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self {
            mean,
            std: var.sqrt(),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// Per-step regret rates of the mean curve. Sublinear growth shows up as
/// `late_rate` well below `early_rate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sublinearity {
    /// `R(T/10) / (T/10)`.
    pub early_rate: f64,
    /// `R(T/2) / (T/2)`.
    pub mid_rate: f64,
    /// `R(T) / T`.
    pub late_rate: f64,
    /// `late_rate / mid_rate`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub config_hash: String,
    pub algorithm: String,
    pub repeats: usize,
    pub horizon: u64,
    #[serde(rename = "final")]
    pub final_regret: Stats,
    pub sublinearity: Sublinearity,
    pub clamp_events: u64,
    #[serde(skip)]
    pub grid: Vec<u64>,
    #[serde(skip)]
    pub per_point: Vec<Stats>,
}

impl Summary {
    pub fn mean_curve(&self) -> Vec<f64> {
        self.per_point.iter().map(|s| s.mean).collect()
    }

    pub fn mean_at(&self, t: u64) -> Option<f64> {
        self.grid.binary_search(&t).ok().map(|i| self.per_point[i].mean)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("summary serializes")
    }

    /// `t,mean,std,min,max` rows.
    pub fn curve_csv(&self) -> String {
        let mut out = String::from("t,mean,std,min,max\n");
        for (t, s) in self.grid.iter().zip(&self.per_point) {
            out.push_str(&format!("{t},{},{},{},{}\n", s.mean, s.std, s.min, s.max));
        }
        out
    }
}

/// Summarizes traces that share a grid. Traces from different configs
/// are allowed (a sweep summary keys them separately), different grids are
/// not.
pub fn summarize(traces: &[RegretTrace]) -> Result<Summary, HarnessError> {
    let first = traces.first().ok_or(HarnessError::Empty)?;
    for tr in &traces[1..] {
        if tr.grid != first.grid {
            return Err(HarnessError::GridMismatch);
        }
    }
    let per_point: Vec<Stats> =
        (0..first.grid.len()).map(|i| Stats::of(&traces.iter().map(|tr| tr.regret[i]).collect::<Vec<_>>())).collect();
    let finals: Vec<f64> = traces.iter().map(RegretTrace::final_regret).collect();
    let horizon = first.horizon;
    let mean_at = |t: u64| -> f64 {
        // Both anchor points are on every grid; fall back to the nearest
        // earlier point for hand-built traces.
        let idx = match first.grid.binary_search(&t) {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        };
        per_point[idx].mean
    };
    let rate = |t: u64| mean_at(t) / t as f64;
    let (early, mid, late) = (rate((horizon / 10).max(1)), rate((horizon / 2).max(1)), rate(horizon));
    Ok(Summary {
        config_hash: first.config_hash.clone(),
        algorithm: first.algorithm.clone(),
        repeats: traces.len(),
        horizon,
        final_regret: Stats::of(&finals),
        sublinearity: Sublinearity {
            early_rate: early,
            mid_rate: mid,
            late_rate: late,
            ratio: if mid > 0.0 { late / mid } else { 0.0 },
        },
        clamp_events: traces.iter().map(|t| t.clamp_events).sum(),
        grid: first.grid.clone(),
        per_point,
    })
}
