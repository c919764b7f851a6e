//! Closed-form regret envelopes of the two algorithms.
//!
//! Both are loose upper bounds used as sanity checks on simulated regret.
//! `epsilon = f64::INFINITY` stands for the noise-free case.

/// Master-worker bound:
/// `M K gap_max (4 + max[(8 ln T / (eps (1 - b) gap_min))^2.25, ceil(8 ln T / (gap_min^2 b^2))])`.
pub fn master_worker_bound(
    agents: usize,
    arms: usize,
    gap_max: f64,
    gap_min: f64,
    epsilon: f64,
    horizon: u64,
    beta0: f64,
) -> f64 {
    let ln_t = (horizon as f64).ln();
    let privacy = (8.0 * ln_t / (epsilon * (1.0 - beta0) * gap_min)).powf(2.25);
    let sampling = (8.0 * ln_t / (gap_min * gap_min * beta0 * beta0)).ceil();
    (agents * arms) as f64 * gap_max * (4.0 + privacy.max(sampling))
}

/// Decentralized bound, summed over agents `i` and suboptimal arms `j`:
///
/// ```text
/// 2 M K rho gap_max / (rho - 1)
///   + sum_i sum_{j>1} max[((2 + 2 rho ln T) / (eps (1 - b)))^2.25,
///                         ceil(c0 / b^2 + 8 sigma^2 rho (1 + c_i) ln T / (b^2 gap_j))]
/// ```
///
/// Infinite for `rho = 1`.
#[allow(clippy::too_many_arguments)]
pub fn decentralized_bound(
    gaps: &[f64],
    rho: f64,
    sigma: f64,
    epsilon: f64,
    horizon: u64,
    beta0: f64,
    c0: f64,
    ci: &[f64],
) -> f64 {
    let agents = ci.len() as f64;
    let arms = gaps.len() as f64;
    let gap_max = gaps.iter().copied().fold(0.0, f64::max);
    let ln_t = (horizon as f64).ln();
    let head = 2.0 * agents * arms * rho * gap_max / (rho - 1.0);
    let privacy = ((2.0 + 2.0 * rho * ln_t) / (epsilon * (1.0 - beta0))).powf(2.25);
    let b2 = beta0 * beta0;
    let mut tail = 0.0;
    for &c in ci {
        for &gap in gaps.iter().filter(|&&g| g > 0.0) {
            let sampling = (c0 / b2 + 8.0 * sigma * sigma * rho * (1.0 + c) * ln_t / (b2 * gap)).ceil();
            tail += privacy.max(sampling);
        }
    }
    head + tail
}
