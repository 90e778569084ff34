//! Wall-clock latency of the cold-start ranker.

use std::hint::black_box;
use std::time::Instant;

use hellinger_ucb::ranker::{rank_top_k, score_all, synthetic_stats, ContentStats};
use hellinger_ucb::stats::quantile_sorted;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LatencyStats {
    pub num_arms: usize,
    pub k: usize,
    /// Logical clock passed to the ranker: total impressions plus one.
    pub t: u64,
    /// Per-call wall-clock time in milliseconds, in call order.
    pub samples_ms: Vec<f64>,
    pub min_ms: f64,
    pub median_ms: f64,
    pub p99_ms: f64,
    /// The ranked ids from the first call.
    pub top: Vec<u64>,
}

/// Logical clock for a snapshot: one more than the impressions served so far.
pub fn clock<I>(stats: &[ContentStats<I>]) -> u64 {
    stats.iter().map(|s| s.impressions).sum::<u64>() + 1
}

/// Times `repetitions` calls of `rank_top_k` on a synthetic snapshot. Only
/// scoring and selection are inside the timed region.
pub fn latency_bench(
    num_arms: usize,
    k: usize,
    repetitions: usize,
    seed: u64,
    c: f64,
) -> Result<LatencyStats> {
    if k == 0 || num_arms < k {
        return Err(CliError::input(format!(
            "need 1 <= k <= num_arms, got k = {k}, num_arms = {num_arms}"
        )));
    }
    if repetitions == 0 {
        return Err(CliError::input("repetitions must be at least 1"));
    }
    let stats = synthetic_stats(num_arms, seed);
    let t = clock(&stats);
    let mut samples_ms = Vec::with_capacity(repetitions);
    let mut top = Vec::new();
    for rep in 0..repetitions {
        let start = Instant::now();
        let ranked = rank_top_k(black_box(&stats), black_box(t), c, k)?;
        samples_ms.push(start.elapsed().as_secs_f64() * 1e3);
        if rep == 0 {
            top = ranked;
        } else {
            black_box(ranked);
        }
    }
    let mut sorted = samples_ms.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(LatencyStats {
        num_arms,
        k,
        t,
        min_ms: sorted[0],
        median_ms: quantile_sorted(&sorted, 0.5),
        p99_ms: quantile_sorted(&sorted, 0.99),
        samples_ms,
        top,
    })
}

/// Reference ranking by sorting every item; used to confirm the partial
/// selection in the benchmark report.
pub fn full_sort_top_k<I: Ord + Clone>(
    stats: &[ContentStats<I>],
    t: u64,
    c: f64,
    k: usize,
) -> Result<Vec<I>> {
    let scores = score_all(stats, t, c)?;
    let mut order: Vec<usize> = (0..stats.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .total_cmp(&scores[a])
            .then_with(|| stats[a].id.cmp(&stats[b].id))
    });
    Ok(order
        .into_iter()
        .take(k)
        .map(|i| stats[i].id.clone())
        .collect())
}
