//! Index policies for stochastic multi-armed bandits with exponential-family
//! rewards.
//!
//! The centerpiece is Hellinger-UCB: the upper confidence bound of an arm is
//! the largest mean whose distribution lies inside a squared-Hellinger ball of
//! radius `1 - exp(-c log(t) / N)` around the empirical distribution. For
//! Bernoulli and Poisson rewards that supremum has a closed form, which makes
//! the policy cheap enough to rank tens of thousands of arms per request.
//! KL-UCB and UCB1 are provided as baselines.
//!
//! The crate is `no_std` and only needs `alloc`. Everything that touches a
//! clock, a file or a thread pool lives in the companion CLI crate.
//!
//! Modules:
//! - [`reward`]: Bernoulli/Poisson families, sampling, and the squared
//!   Hellinger, KL and total-variation distances in the mean parametrization.
//! - [`index`]: per-arm upper-confidence indices.
//! - [`bandit`]: the sequential select/update loop.
//! - [`sim`]: seeded multi-epoch pseudo-regret experiments.
//! - [`bounds`]: finite-time pull/regret upper bounds and the asymptotic
//!   lower bound.
//! - [`ranker`]: batch top-k ranking for cold-start content, plus a synthetic
//!   traffic comparison between policies.
//! - [`concentration`]: Monte-Carlo estimate of the KL deviation tail.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod bandit;
pub mod bounds;
pub mod concentration;
mod error;
pub mod index;
mod math;
pub mod ranker;
pub mod reward;
pub mod seed;
pub mod sim;
pub mod stats;

pub use bandit::{select_arm, Agent, BanditRound};
pub use error::{Error, Result};
pub use index::{ArmState, IndexRule, PolicyConfig};
pub use reward::{MeanParam, RewardFamily};
pub use sim::{BanditInstance, Episode, EpisodeSummary, ExperimentResult, PolicySummary};

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
struct ReadmeDoctests;
