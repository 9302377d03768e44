//! A finite-MDP laboratory for studying how optimal policies respond to
//! changes in the reward.
//!
//! The hard-max optimal policy is a discontinuous function of the reward
//! whenever optimal actions tie: an arbitrarily small reward change can move
//! all probability mass to one action. This crate builds those perturbations
//! explicitly, certifies them, and contrasts them with the entropy-regularized
//! (Boltzmann) policy, whose dependence on the reward is Lipschitz.
//!
//! - [`mdp`]: MDPs, value iteration, exact policy evaluation, a brute-force oracle
//! - [`perturbation`]: bumps, the inverse Bellman map, action-switch certificates, tie-breakers
//! - [`soft`]: soft value iteration, Boltzmann policies, KL-regularized objective
//! - [`multi`]: reward tuples aggregated by per-state weights
//! - [`incomplete`]: suboptimality certificates for incomplete training rewards
//! - [`scenario`]: JSON scenario files, built-in experiments, JSON/CSV reports
//!
//! Runnable walkthroughs live under `examples/`.

pub mod error;
pub mod fixtures;
pub mod incomplete;
pub mod mdp;
pub mod multi;
pub mod perturbation;
pub mod scenario;
pub mod soft;

pub use error::{LabError, Result};
