//! Seeded pseudo-regret experiments on synthetic instances.
//!
//! Rewards come from one ChaCha stream per arm, keyed by the epoch seed, so
//! the `n`-th pull of arm `i` yields the same reward under every policy in an
//! experiment (common random numbers). Policies never share state; the
//! experiment is a plain map over `(policy, epoch)` pairs followed by an
//! order-fixed aggregation, which lets callers run episodes in parallel and
//! still get bit-identical results through [`ExperimentResult::aggregate`].

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;

use crate::bandit::Agent;
use crate::index::PolicyConfig;
use crate::math;
use crate::reward::{sample_unchecked, MeanParam, RewardFamily};
use crate::seed;
use crate::stats::{mean, quantile_sorted};
use crate::{Error, Result};

/// Number of log-spaced checkpoints past the round-robin phase.
pub const CHECKPOINTS: usize = 200;

/// Bernoulli instance with nine sub-optimal arms and one optimal arm.
pub const BERNOULLI_REFERENCE_MEANS: [f64; 10] =
    [0.01, 0.01, 0.01, 0.02, 0.02, 0.02, 0.05, 0.05, 0.05, 0.1];
/// Poisson instance with six sub-optimal arms and one optimal arm.
pub const POISSON_REFERENCE_MEANS: [f64; 7] = [0.03, 0.03, 0.04, 0.04, 0.05, 0.05, 0.1];

/// Ground truth of a simulated environment.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BanditInstance {
    family: RewardFamily,
    means: Vec<MeanParam>,
}

impl BanditInstance {
    pub fn new(family: RewardFamily, means: &[f64]) -> Result<Self> {
        if means.len() < 2 {
            return Err(Error::TooFewArms {
                min: 2,
                found: means.len(),
            });
        }
        let means = means
            .iter()
            .map(|&m| family.mean(m))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { family, means })
    }

    pub fn bernoulli_reference() -> Self {
        Self::new(RewardFamily::Bernoulli, &BERNOULLI_REFERENCE_MEANS).expect("valid means")
    }

    pub fn poisson_reference() -> Self {
        Self::new(RewardFamily::Poisson, &POISSON_REFERENCE_MEANS).expect("valid means")
    }

    pub fn family(&self) -> RewardFamily {
        self.family
    }

    pub fn arms(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> Vec<f64> {
        self.means.iter().map(|m| m.get()).collect()
    }

    pub fn mean(&self, arm: usize) -> f64 {
        self.means[arm].get()
    }

    pub fn best_mean(&self) -> f64 {
        self.means
            .iter()
            .map(|m| m.get())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `Δ_i = μ* - μ_i` for every arm.
    pub fn gaps(&self) -> Vec<f64> {
        let best = self.best_mean();
        self.means.iter().map(|m| best - m.get()).collect()
    }
}

/// `Σ_i Δ_i N_i`.
pub fn pseudo_regret(instance: &BanditInstance, pulls: &[u64]) -> Result<f64> {
    if pulls.len() != instance.arms() {
        return Err(Error::LengthMismatch {
            expected: instance.arms(),
            found: pulls.len(),
        });
    }
    Ok(instance
        .gaps()
        .iter()
        .zip(pulls)
        .map(|(gap, &n)| gap * n as f64)
        .sum())
}

/// Outcome of one policy run.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    /// Cumulative pseudo-regret after each step; `regret[t - 1]` is the value at step `t`.
    pub regret: Vec<f64>,
    /// `N_i(T)` per arm.
    pub pulls: Vec<u64>,
}

impl Episode {
    pub fn final_regret(&self) -> f64 {
        self.regret.last().copied().unwrap_or(0.0)
    }

    /// Regret after step `t` (1-based).
    pub fn regret_at(&self, t: u64) -> f64 {
        self.regret[(t - 1) as usize]
    }
}

/// Per-arm reward streams shared by all policies of one epoch.
struct RewardSource {
    family: RewardFamily,
    means: Vec<f64>,
    streams: Vec<ChaCha8Rng>,
}

impl RewardSource {
    fn new(instance: &BanditInstance, seed: u64) -> Self {
        Self {
            family: instance.family(),
            means: instance.means(),
            streams: (0..instance.arms() as u64)
                .map(|arm| seed::stream(seed, arm))
                .collect(),
        }
    }

    fn pull(&mut self, arm: usize) -> f64 {
        sample_unchecked(self.family, self.means[arm], &mut self.streams[arm])
    }
}

/// Runs one policy for `horizon` steps with reward streams keyed by `seed`.
pub fn run_episode(
    instance: &BanditInstance,
    config: &PolicyConfig,
    horizon: u64,
    seed: u64,
) -> Result<Episode> {
    if horizon < instance.arms() as u64 {
        return Err(Error::HorizonTooShort {
            horizon,
            arms: instance.arms(),
        });
    }
    let mut agent = Agent::new(*config, instance.family(), instance.arms())?;
    let mut source = RewardSource::new(instance, seed);
    let gaps = instance.gaps();
    let mut regret = Vec::with_capacity(horizon as usize);
    let mut cumulative = 0.0;
    for _ in 0..horizon {
        let arm = agent.select();
        let reward = source.pull(arm);
        agent.observe(arm, reward)?;
        cumulative += gaps[arm];
        regret.push(cumulative);
    }
    let pulls = agent.round().states().iter().map(|s| s.pulls).collect();
    Ok(Episode { regret, pulls })
}

/// Checkpoint grid: the last round-robin step `K`, then [`CHECKPOINTS`]
/// log-spaced steps in `[K + 1, T]` (rounded, deduplicated, always ending at `T`).
pub fn checkpoints(arms: usize, horizon: u64) -> Vec<u64> {
    let k = arms as u64;
    let mut out = vec![k.min(horizon)];
    if horizon <= k {
        return out;
    }
    let first = (k + 1) as f64;
    let last = horizon as f64;
    let span = math::ln(last) - math::ln(first);
    for i in 0..CHECKPOINTS {
        let frac = i as f64 / (CHECKPOINTS - 1) as f64;
        let t = math::round(math::exp(math::ln(first) + span * frac)) as u64;
        let t = t.clamp(k + 1, horizon);
        if *out.last().unwrap() < t {
            out.push(t);
        }
    }
    if *out.last().unwrap() != horizon {
        out.push(horizon);
    }
    out
}

/// Aggregated regret of one policy across epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySummary {
    pub config: PolicyConfig,
    /// Mean cumulative regret at each checkpoint.
    pub mean_regret: Vec<f64>,
    pub q25_regret: Vec<f64>,
    pub q75_regret: Vec<f64>,
    /// Regret at `T`, one entry per epoch in epoch order.
    pub final_regrets: Vec<f64>,
    /// `E[N_i(T)]` estimated over epochs.
    pub mean_pulls: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub horizon: u64,
    pub epochs: u64,
    pub timesteps: Vec<u64>,
    pub policies: Vec<PolicySummary>,
}

/// What the aggregation keeps of an episode: regret at the checkpoints and
/// the final pull counts.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSummary {
    pub checkpoint_regret: Vec<f64>,
    pub final_regret: f64,
    pub pulls: Vec<u64>,
}

impl EpisodeSummary {
    pub fn new(episode: &Episode, timesteps: &[u64]) -> Self {
        Self {
            checkpoint_regret: timesteps.iter().map(|&t| episode.regret_at(t)).collect(),
            final_regret: episode.final_regret(),
            pulls: episode.pulls.clone(),
        }
    }
}

impl ExperimentResult {
    /// Aggregates `runs[p][e]` (policy `p`, epoch `e`), each summarized on
    /// `checkpoints(instance.arms(), horizon)`.
    pub fn aggregate(
        instance: &BanditInstance,
        configs: &[PolicyConfig],
        horizon: u64,
        runs: &[Vec<EpisodeSummary>],
    ) -> Result<Self> {
        if configs.len() != runs.len() {
            return Err(Error::LengthMismatch {
                expected: configs.len(),
                found: runs.len(),
            });
        }
        let epochs = runs.first().map_or(0, Vec::len);
        if epochs == 0 {
            return Err(Error::Empty("epoch"));
        }
        let timesteps = checkpoints(instance.arms(), horizon);
        let mut policies = Vec::with_capacity(configs.len());
        let mut column = vec![0.0; epochs];
        for (config, runs) in configs.iter().zip(runs) {
            if runs.len() != epochs {
                return Err(Error::LengthMismatch {
                    expected: epochs,
                    found: runs.len(),
                });
            }
            for run in runs {
                if run.checkpoint_regret.len() != timesteps.len() {
                    return Err(Error::LengthMismatch {
                        expected: timesteps.len(),
                        found: run.checkpoint_regret.len(),
                    });
                }
                if run.pulls.len() != instance.arms() {
                    return Err(Error::LengthMismatch {
                        expected: instance.arms(),
                        found: run.pulls.len(),
                    });
                }
            }
            let mut mean_regret = Vec::with_capacity(timesteps.len());
            let mut q25_regret = Vec::with_capacity(timesteps.len());
            let mut q75_regret = Vec::with_capacity(timesteps.len());
            for i in 0..timesteps.len() {
                for (slot, run) in column.iter_mut().zip(runs) {
                    *slot = run.checkpoint_regret[i];
                }
                mean_regret.push(mean(&column));
                column.sort_by(f64::total_cmp);
                q25_regret.push(quantile_sorted(&column, 0.25));
                q75_regret.push(quantile_sorted(&column, 0.75));
            }
            let mut mean_pulls = vec![0.0; instance.arms()];
            for run in runs {
                for (acc, &n) in mean_pulls.iter_mut().zip(&run.pulls) {
                    *acc += n as f64;
                }
            }
            for acc in &mut mean_pulls {
                *acc /= epochs as f64;
            }
            policies.push(PolicySummary {
                config: *config,
                mean_regret,
                q25_regret,
                q75_regret,
                final_regrets: runs.iter().map(|r| r.final_regret).collect(),
                mean_pulls,
            });
        }
        Ok(Self {
            horizon,
            epochs: epochs as u64,
            timesteps,
            policies,
        })
    }
}

/// Validates the inputs shared by [`run_experiment`] and parallel drivers.
pub fn check_experiment(
    instance: &BanditInstance,
    configs: &[PolicyConfig],
    horizon: u64,
    epochs: u64,
) -> Result<()> {
    if configs.is_empty() {
        return Err(Error::Empty("policy"));
    }
    if epochs == 0 {
        return Err(Error::Empty("epoch"));
    }
    if horizon < instance.arms() as u64 {
        return Err(Error::HorizonTooShort {
            horizon,
            arms: instance.arms(),
        });
    }
    configs.iter().try_for_each(PolicyConfig::validate)
}

/// Runs `epochs` episodes of every policy sequentially and aggregates them.
pub fn run_experiment(
    instance: &BanditInstance,
    configs: &[PolicyConfig],
    horizon: u64,
    epochs: u64,
    master_seed: u64,
) -> Result<ExperimentResult> {
    check_experiment(instance, configs, horizon, epochs)?;
    let timesteps = checkpoints(instance.arms(), horizon);
    let runs = configs
        .iter()
        .map(|config| {
            (0..epochs)
                .map(|epoch| {
                    let seed = seed::epoch_seed(master_seed, epoch);
                    run_episode(instance, config, horizon, seed)
                        .map(|episode| EpisodeSummary::new(&episode, &timesteps))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    ExperimentResult::aggregate(instance, configs, horizon, &runs)
}
