//! Parallel driver for simulation experiments.
//!
//! Episodes are independent, so they are computed on a rayon pool and then
//! handed, in `(policy, epoch)` order, to the same aggregation the sequential
//! driver uses. Results do not depend on the number of threads.

use std::env;

use hellinger_ucb::seed::epoch_seed;
use hellinger_ucb::sim::{check_experiment, checkpoints, run_episode};
use hellinger_ucb::{BanditInstance, EpisodeSummary, ExperimentResult, PolicyConfig};
use rayon::prelude::*;
use rayon::ThreadPool;

use crate::error::{CliError, Result};

/// Caps the worker count; `0` or unset means one worker per core.
pub const THREADS_ENV: &str = "HB_THREADS";

pub fn threads_from_env() -> Result<usize> {
    match env::var(THREADS_ENV) {
        Ok(value) if !value.trim().is_empty() => value.trim().parse().map_err(|_| {
            CliError::input(format!(
                "{THREADS_ENV} must be a non-negative integer, got `{value}`"
            ))
        }),
        _ => Ok(0),
    }
}

pub fn pool(threads: usize) -> Result<ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()?)
}

pub fn run_experiment_parallel(
    pool: &ThreadPool,
    instance: &BanditInstance,
    configs: &[PolicyConfig],
    horizon: u64,
    epochs: u64,
    master_seed: u64,
) -> Result<ExperimentResult> {
    check_experiment(instance, configs, horizon, epochs)?;
    let timesteps = checkpoints(instance.arms(), horizon);
    let jobs: Vec<(usize, u64)> = (0..configs.len())
        .flat_map(|p| (0..epochs).map(move |e| (p, e)))
        .collect();
    let summaries = pool.install(|| {
        jobs.par_iter()
            .map(|&(p, e)| {
                run_episode(instance, &configs[p], horizon, epoch_seed(master_seed, e))
                    .map(|episode| EpisodeSummary::new(&episode, &timesteps))
            })
            .collect::<hellinger_ucb::Result<Vec<_>>>()
    })?;
    let mut summaries = summaries.into_iter();
    let runs: Vec<Vec<EpisodeSummary>> = configs
        .iter()
        .map(|_| summaries.by_ref().take(epochs as usize).collect())
        .collect();
    Ok(ExperimentResult::aggregate(
        instance, configs, horizon, &runs,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use hellinger_ucb::sim::run_experiment;
    use hellinger_ucb::RewardFamily;

    #[test]
    fn matches_sequential_driver_for_any_thread_count() {
        let instance = BanditInstance::new(RewardFamily::Bernoulli, &[0.1, 0.2, 0.3]).unwrap();
        let configs = [
            PolicyConfig::hellinger_ucb(),
            PolicyConfig::kl_ucb(),
            PolicyConfig::ucb1(),
        ];
        let sequential = run_experiment(&instance, &configs, 400, 5, 9).unwrap();
        for threads in [1, 3] {
            let parallel =
                run_experiment_parallel(&pool(threads).unwrap(), &instance, &configs, 400, 5, 9)
                    .unwrap();
            assert_eq!(parallel, sequential);
        }
    }
}
