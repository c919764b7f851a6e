//! Differentially private running sums.
//!
//! [`HybridMechanism`] releases a private prefix sum of a reward stream at
//! every step. Time is split into epochs `[2^k, 2^(k+1))`. Inside an epoch a
//! binary-counter tree is kept: inserting the `m`-th in-epoch element closes
//! exactly one dyadic node (at level `trailing_zeros(m)`), and that node draws
//! its Laplace noise once, at creation. A query sums the noisy nodes of the
//! dyadic cover of the in-epoch prefix plus the frozen noisy totals of all
//! completed epochs.
//!
//! Rewards are clamped to a configured range before insertion. Nodes store
//! clamped rewards in reward units and the per-node noise scale is
//! `width / epsilon`, which is the same distribution as rescaling every input
//! to `[0, 1]` and adding `Lap(1/epsilon)`.
//!
//! Raw node sums are private to this module. With the `audit` feature the
//! exact (non-private) running sum can be read for statistical tests.

use rand::distributions::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DpError {
    #[error("laplace scale must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("epsilon must be positive and finite, got {0}")]
    InvalidEpsilon(f64),
    #[error("delta must lie strictly between 0 and 1, got {0}")]
    InvalidDelta(f64),
    #[error("count must be at least 1, got {0}")]
    InvalidCount(f64),
    #[error("clamp range [{lo}, {hi}] is empty or not finite")]
    InvalidClamp { lo: f64, hi: f64 },
    #[error("private sum requested before any insert")]
    EmptyMechanism,
}

/// Privacy level of a mechanism. `Off` disables all noise and zeroes the
/// error certificate, reducing the algorithms to their non-private forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Privacy {
    Epsilon(f64),
    Off,
}

impl Privacy {
    pub fn epsilon(eps: f64) -> Result<Self, DpError> {
        if eps.is_finite() && eps > 0.0 {
            Ok(Privacy::Epsilon(eps))
        } else {
            Err(DpError::InvalidEpsilon(eps))
        }
    }

    pub fn is_off(&self) -> bool {
        matches!(self, Privacy::Off)
    }

    /// Error certificate for `n` samples; zero when noise is off.
    pub fn certificate(&self, n: f64, delta: f64) -> Result<f64, DpError> {
        match *self {
            Privacy::Epsilon(eps) => error_certificate(n, eps, delta),
            Privacy::Off => Ok(0.0),
        }
    }
}

/// Scale `b` of a zero-mean Laplace distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceScale(f64);

impl LaplaceScale {
    pub fn new(b: f64) -> Result<Self, DpError> {
        if b.is_finite() && b > 0.0 {
            Ok(Self(b))
        } else {
            Err(DpError::InvalidScale(b))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Inverse CDF of Laplace(0, b) at `u` in (0, 1).
pub fn laplace_from_uniform(scale: LaplaceScale, u: f64) -> f64 {
    let c = u - 0.5;
    if c == 0.0 {
        return 0.0;
    }
    -scale.0 * c.signum() * (1.0 - 2.0 * c.abs()).ln()
}

/// One Laplace(0, b) draw from one open-interval uniform.
pub fn sample_laplace<R: Rng + ?Sized>(scale: LaplaceScale, rng: &mut R) -> f64 {
    let u: f64 = rng.sample(Open01);
    laplace_from_uniform(scale, u)
}

/// `(1/eps) * ln^1.5(n) * ln(1/delta) / n`, natural logarithms.
///
/// `n` is real-valued so the consensus algorithm can evaluate it at estimated
/// counts. Values of `n` in `[1, e)` give a small positive result and `n = 1`
/// gives exactly zero.
pub fn error_certificate(n: f64, epsilon: f64, delta: f64) -> Result<f64, DpError> {
    if !(n.is_finite() && n >= 1.0) {
        return Err(DpError::InvalidCount(n));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(DpError::InvalidEpsilon(epsilon));
    }
    validate_delta(delta)?;
    let ln_n = n.ln();
    Ok(ln_n * ln_n.sqrt() * (1.0 / delta).ln() / (epsilon * n))
}

pub fn validate_delta(delta: f64) -> Result<f64, DpError> {
    if delta > 0.0 && delta < 1.0 {
        Ok(delta)
    } else {
        Err(DpError::InvalidDelta(delta))
    }
}

/// Inclusive reward bounds applied before insertion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClampRange {
    lo: f64,
    hi: f64,
}

impl ClampRange {
    pub fn new(lo: f64, hi: f64) -> Result<Self, DpError> {
        if lo.is_finite() && hi.is_finite() && lo < hi {
            Ok(Self { lo, hi })
        } else {
            Err(DpError::InvalidClamp { lo, hi })
        }
    }

    pub fn unit() -> Self {
        Self { lo: 0.0, hi: 1.0 }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Clamped value and whether clamping changed it.
    pub fn apply(&self, x: f64) -> (f64, bool) {
        if x < self.lo {
            (self.lo, true)
        } else if x > self.hi {
            (self.hi, true)
        } else {
            (x, false)
        }
    }
}

impl Default for ClampRange {
    fn default() -> Self {
        Self::unit()
    }
}

/// Snapshot handed to policy code.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivateSumReport {
    pub n: u64,
    pub s_private: f64,
    pub x_private: f64,
    pub h_n: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Copy)]
struct TreeNode {
    raw: f64,
    noise: f64,
}

impl TreeNode {
    fn noisy(&self) -> f64 {
        self.raw + self.noise
    }
}

/// Tree-aggregation state for one (agent, arm) reward stream.
#[derive(Debug, Clone)]
pub struct HybridMechanism {
    privacy: Privacy,
    delta: f64,
    clamp: ClampRange,
    noise_scale: Option<LaplaceScale>,
    epoch: u32,
    in_epoch: u64,
    // levels[l] is the latest closed node of size 2^l in the current epoch,
    // present exactly when bit l of `in_epoch` is set.
    levels: Vec<Option<TreeNode>>,
    completed_private: f64,
    completed_raw: f64,
    count: u64,
    clamp_events: u64,
}

impl HybridMechanism {
    pub fn new(privacy: Privacy, delta: f64, clamp: ClampRange) -> Result<Self, DpError> {
        validate_delta(delta)?;
        let noise_scale = match privacy {
            Privacy::Epsilon(eps) => {
                Privacy::epsilon(eps)?;
                Some(LaplaceScale::new(clamp.width() / eps)?)
            }
            Privacy::Off => None,
        };
        Ok(Self {
            privacy,
            delta,
            clamp,
            noise_scale,
            epoch: 0,
            in_epoch: 0,
            levels: vec![None],
            completed_private: 0.0,
            completed_raw: 0.0,
            count: 0,
            clamp_events: 0,
        })
    }

    pub fn privacy(&self) -> Privacy {
        self.privacy
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn clamp_range(&self) -> ClampRange {
        self.clamp
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn clamp_events(&self) -> u64 {
        self.clamp_events
    }

    /// Index `k` of the current epoch `[2^k, 2^(k+1))`.
    pub fn epoch(&self) -> u32 {
        self.epoch
    }

    /// Number of tree levels allocated for the current epoch.
    pub fn tree_depth(&self) -> usize {
        self.levels.len()
    }

    pub fn insert<R: Rng + ?Sized>(&mut self, reward: f64, rng: &mut R) {
        let (value, clamped) = self.clamp.apply(reward);
        if clamped {
            self.clamp_events += 1;
        }
        self.count += 1;
        self.in_epoch += 1;

        let level = self.in_epoch.trailing_zeros() as usize;
        let mut raw = value;
        for lower in self.levels[..level].iter_mut() {
            raw += lower.take().map_or(0.0, |n| n.raw);
        }
        let noise = match self.noise_scale {
            Some(scale) => sample_laplace(scale, rng),
            None => 0.0,
        };
        self.levels[level] = Some(TreeNode { raw, noise });

        if self.in_epoch == 1u64 << self.epoch {
            let root = self.levels[level].take().expect("root just created");
            self.completed_private += root.noisy();
            self.completed_raw += root.raw;
            self.epoch += 1;
            self.in_epoch = 0;
            self.levels = vec![None; self.epoch as usize + 1];
        }
    }

    /// Private running sum over every insert so far, in reward units.
    pub fn private_sum(&self) -> Result<f64, DpError> {
        if self.count == 0 {
            return Err(DpError::EmptyMechanism);
        }
        Ok(self.levels.iter().rev().flatten().fold(self.completed_private, |acc, n| acc + n.noisy()))
    }

    pub fn report(&self) -> Result<PrivateSumReport, DpError> {
        let s_private = self.private_sum()?;
        let n = self.count as f64;
        Ok(PrivateSumReport {
            n: self.count,
            s_private,
            x_private: s_private / n,
            h_n: self.privacy.certificate(n, self.delta)?,
            delta: self.delta,
        })
    }

    /// Number of noisy tree nodes in the current query's cover.
    pub fn cover_len(&self) -> usize {
        self.levels.iter().flatten().count()
    }

    /// In-epoch ranges `(first, last)`, 1-based, of the cover nodes in
    /// query order (largest first).
    pub fn cover_ranges(&self) -> Vec<(u64, u64)> {
        let mut out = Vec::new();
        let mut start = 1;
        for l in (0..self.levels.len()).rev() {
            if self.levels[l].is_some() {
                let end = start + (1u64 << l) - 1;
                out.push((start, end));
                start = end + 1;
            }
        }
        out
    }

    /// Exact running sum of clamped inputs.
    #[cfg(feature = "audit")]
    pub fn raw_sum(&self) -> f64 {
        self.levels.iter().rev().flatten().fold(self.completed_raw, |acc, n| acc + n.raw)
    }
}
