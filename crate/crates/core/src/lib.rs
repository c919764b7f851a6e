//! Federated multi-armed bandits under differential privacy.
//!
//! Agents share a stochastic bandit and protect their reward sequences with
//! a tree-aggregation mechanism ([`dp`]). Two cooperation schemes are
//! provided: a master that averages private UCB indices on a doubling
//! schedule ([`master`]) and fully decentralized consensus over a
//! communication graph ([`decentralized`], [`topology`]). The [`harness`]
//! module runs seeded experiments and sweeps and writes regret traces.

pub mod bounds;
pub mod decentralized;
pub mod dp;
pub mod env;
pub mod harness;
pub mod master;
pub mod rng;
pub mod sim;
pub mod topology;

pub use sim::{SimError, Simulation};
