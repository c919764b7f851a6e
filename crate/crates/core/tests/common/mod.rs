//! Independent reference policies shared by the integration and acceptance tests.

#![allow(dead_code)]

use fedban::env::ArmSet;
use fedban::rng::reward_stream;

fn argmax_low(v: &[f64]) -> usize {
    let mut best = 0;
    for j in 1..v.len() {
        if v[j] > v[best] {
            best = j;
        }
    }
    best
}

/// Single-agent UCB `mean + sqrt(2 ln t / n)` that only re-selects an arm
/// when the number of steps since the last switch is a power of two.
pub fn doubling_ucb_actions(arms: &ArmSet, seed: u64, horizon: u64) -> Vec<usize> {
    let k = arms.len();
    let mut rng = reward_stream(seed, 0);
    let mut sums = vec![0.0; k];
    let mut counts = vec![0.0; k];
    let mut since_switch = 1u64;
    let mut last = 0;
    let mut actions = Vec::with_capacity(horizon as usize);
    for t in 1..=horizon {
        let a = if t <= k as u64 {
            t as usize - 1
        } else if since_switch.is_power_of_two() {
            let ln_t = (t as f64).ln();
            let idx: Vec<f64> = (0..k).map(|j| sums[j] / counts[j] + (2.0 * ln_t / counts[j]).sqrt()).collect();
            let best = argmax_low(&idx);
            if best != last {
                since_switch = 1;
            }
            best
        } else {
            last
        };
        let r = arms.arms()[a].sample(&mut rng);
        sums[a] += r;
        counts[a] += 1.0;
        last = a;
        if t > k as u64 {
            since_switch += 1;
        }
        actions.push(a);
    }
    actions
}

/// Single-agent UCB `mean + sigma sqrt(2 rho ln t / n)` choosing at every step.
pub fn variance_aware_ucb_actions(arms: &ArmSet, seed: u64, horizon: u64, rho: f64, sigma: f64) -> Vec<usize> {
    let k = arms.len();
    let mut rng = reward_stream(seed, 0);
    let mut sums = vec![0.0; k];
    let mut counts = vec![0.0; k];
    let mut actions = Vec::with_capacity(horizon as usize);
    for t in 1..=horizon {
        let a = if t <= k as u64 {
            t as usize - 1
        } else {
            let ln_t = (t as f64).ln();
            let idx: Vec<f64> =
                (0..k).map(|j| sums[j] / counts[j] + sigma * (2.0 * rho * ln_t / counts[j]).sqrt()).collect();
            argmax_low(&idx)
        };
        let r = arms.arms()[a].sample(&mut rng);
        sums[a] += r;
        counts[a] += 1.0;
        actions.push(a);
    }
    actions
}

/// Population variance.
pub fn variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n
}

/// Unbiased sample variance.
pub fn sample_variance(xs: &[f64]) -> f64 {
    variance(xs) * xs.len() as f64 / (xs.len() as f64 - 1.0)
}
