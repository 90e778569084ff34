//! Batch ranking of cold-start content by closed-form Hellinger-UCB index.
//!
//! Each item is treated as a run of Bernoulli trials (impressions, clicks).
//! Its score is the Bernoulli Hellinger-UCB index of the observed CTR with
//! radius `1 - exp(-c log t / impressions)`, where `t` is a logical clock
//! supplied by the caller. Items without impressions score `+∞`.

use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::bandit::Agent;
use crate::index::{hellinger_index_bernoulli, hellinger_radius, PolicyConfig};
use crate::math;
use crate::reward::{sample_unchecked, RewardFamily};
use crate::seed;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ContentStats<I> {
    pub id: I,
    pub impressions: u64,
    pub clicks: u64,
}

impl<I> ContentStats<I> {
    pub fn new(id: I, impressions: u64, clicks: u64) -> Self {
        Self {
            id,
            impressions,
            clicks,
        }
    }
}

/// Hellinger-UCB score of one item.
#[inline]
pub fn score(impressions: u64, clicks: u64, t: u64, c: f64) -> f64 {
    if impressions == 0 {
        return f64::INFINITY;
    }
    let ctr = clicks as f64 / impressions as f64;
    hellinger_index_bernoulli(ctr, hellinger_radius(t.max(1), impressions, c))
}

fn check_records<I>(stats: &[ContentStats<I>]) -> Result<()> {
    if stats.is_empty() {
        return Err(Error::Empty("content record"));
    }
    for (index, s) in stats.iter().enumerate() {
        if s.clicks > s.impressions {
            return Err(Error::InvalidRecord {
                index,
                clicks: s.clicks,
                impressions: s.impressions,
            });
        }
    }
    Ok(())
}

/// Scores every record (`+∞` for records without impressions).
pub fn score_all<I>(stats: &[ContentStats<I>], t: u64, c: f64) -> Result<Vec<f64>> {
    check_records(stats)?;
    Ok(stats
        .iter()
        .map(|s| score(s.impressions, s.clicks, t, c))
        .collect())
}

/// Ids of the `k` highest-scoring records, best first. Equal scores are
/// ordered by ascending id.
pub fn rank_top_k<I: Ord + Clone>(
    stats: &[ContentStats<I>],
    t: u64,
    c: f64,
    k: usize,
) -> Result<Vec<I>> {
    if k == 0 {
        return Err(Error::Empty("ranked slot (k)"));
    }
    let scores = score_all(stats, t, c)?;
    let mut order: Vec<usize> = (0..stats.len()).collect();
    let by_rank = |&a: &usize, &b: &usize| -> Ordering {
        scores[b]
            .total_cmp(&scores[a])
            .then_with(|| stats[a].id.cmp(&stats[b].id))
    };
    let k = k.min(order.len());
    if k < order.len() {
        order.select_nth_unstable_by(k - 1, by_rank);
        order.truncate(k);
    }
    order.sort_unstable_by(by_rank);
    Ok(order.into_iter().map(|i| stats[i].id.clone()).collect())
}

/// Reproducible synthetic snapshot: about 5% of items are cold, the rest have
/// up to 5000 impressions and clicks drawn at a hidden CTR in `[0.005, 0.1]`.
pub fn synthetic_stats(num_arms: usize, seed: u64) -> Vec<ContentStats<u64>> {
    let mut rng = seed::stream(seed, 0);
    (0..num_arms as u64)
        .map(|id| {
            let impressions = if rng.random::<f64>() < 0.05 {
                0
            } else {
                rng.random_range(1..=5000)
            };
            let ctr = log_uniform(&mut rng, 0.005, 0.1);
            let clicks = Binomial::new(impressions, ctr)
                .map(|b| b.sample(&mut rng))
                .unwrap_or(0);
            ContentStats::new(id, impressions, clicks)
        })
        .collect()
}

fn log_uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    let u: f64 = rng.random();
    math::exp(math::ln(lo) + u * (math::ln(hi) - math::ln(lo)))
}

/// Hidden CTRs for [`synthetic_traffic_compare`]: log-uniform in `[0.005, 0.1]`.
pub fn synthetic_ctrs(arms: usize, seed: u64) -> Vec<f64> {
    let mut rng = seed::stream(seed, u64::MAX);
    (0..arms)
        .map(|_| log_uniform(&mut rng, 0.005, 0.1))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrafficResult {
    pub ctrs: Vec<f64>,
    pub policies: Vec<PolicyConfig>,
    /// `cumulative[p][s]`: reward collected by policy `p` after global step `s + 1`.
    pub cumulative: Vec<Vec<f64>>,
    /// Requests served by each policy.
    pub served: Vec<u64>,
}

impl TrafficResult {
    pub fn final_rewards(&self) -> Vec<f64> {
        self.cumulative
            .iter()
            .map(|c| c.last().copied().unwrap_or(0.0))
            .collect()
    }
}

/// Shared-traffic comparison on synthetic CTRs drawn from `seed`.
pub fn synthetic_traffic_compare(
    arms: usize,
    horizon: u64,
    policies: &[PolicyConfig],
    seed: u64,
) -> Result<TrafficResult> {
    traffic_compare_with_ctrs(&synthetic_ctrs(arms, seed), horizon, policies, seed)
}

/// Each request goes to one policy chosen uniformly at random. That policy
/// picks an item with its own statistics and is credited with a click drawn
/// from the item's hidden CTR. Every policy keeps a separate click stream per
/// item, so the `n`-th impression of item `j` gets the same outcome whichever
/// policy serves it.
pub fn traffic_compare_with_ctrs(
    ctrs: &[f64],
    horizon: u64,
    policies: &[PolicyConfig],
    seed: u64,
) -> Result<TrafficResult> {
    if policies.is_empty() {
        return Err(Error::Empty("policy"));
    }
    if horizon < ctrs.len() as u64 {
        return Err(Error::HorizonTooShort {
            horizon,
            arms: ctrs.len(),
        });
    }
    for &ctr in ctrs {
        RewardFamily::Bernoulli.mean(ctr)?;
    }
    let mut agents = policies
        .iter()
        .map(|p| Agent::new(*p, RewardFamily::Bernoulli, ctrs.len()))
        .collect::<Result<Vec<_>>>()?;
    let mut router = seed::stream(seed::derive_seed(&[seed, 0x7261_6666_6963]), 0);
    let click_seed = seed::derive_seed(&[seed, 0x636c_6963_6b73]);
    let mut clicks: Vec<Vec<_>> = (0..policies.len())
        .map(|_| {
            (0..ctrs.len() as u64)
                .map(|arm| seed::stream(click_seed, arm))
                .collect()
        })
        .collect();
    let mut cumulative = alloc::vec![Vec::with_capacity(horizon as usize); policies.len()];
    let mut totals = alloc::vec![0.0; policies.len()];
    let mut served = alloc::vec![0u64; policies.len()];
    for _ in 0..horizon {
        let p = if policies.len() == 1 {
            0
        } else {
            router.random_range(0..policies.len())
        };
        let arm = agents[p].select();
        let reward = sample_unchecked(RewardFamily::Bernoulli, ctrs[arm], &mut clicks[p][arm]);
        agents[p].observe(arm, reward)?;
        totals[p] += reward;
        served[p] += 1;
        for (series, &total) in cumulative.iter_mut().zip(&totals) {
            series.push(total);
        }
    }
    Ok(TrafficResult {
        ctrs: ctrs.to_vec(),
        policies: policies.to_vec(),
        cumulative,
        served,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force<I: Ord + Clone>(stats: &[ContentStats<I>], t: u64, c: f64, k: usize) -> Vec<I> {
        let mut scored: Vec<(f64, I)> = stats
            .iter()
            .map(|s| (score(s.impressions, s.clicks, t, c), s.id.clone()))
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
        scored.into_iter().take(k).map(|(_, id)| id).collect()
    }

    #[test]
    fn top_one_is_argmax() {
        let stats = vec![
            ContentStats::new(0u32, 1000, 10),
            ContentStats::new(1, 1000, 80),
            ContentStats::new(2, 1000, 40),
        ];
        assert_eq!(rank_top_k(&stats, 5000, 0.26, 1).unwrap(), vec![1]);
        assert_eq!(rank_top_k(&stats, 5000, 0.26, 10).unwrap(), vec![1, 2, 0]);
    }

    #[test]
    fn identical_stats_follow_id_order() {
        let stats: Vec<_> = [5u32, 3, 9, 1, 7]
            .iter()
            .map(|&id| ContentStats::new(id, 100, 4))
            .collect();
        assert_eq!(rank_top_k(&stats, 600, 0.26, 3).unwrap(), vec![1, 3, 5]);
    }

    #[test]
    fn cold_items_first() {
        let stats = vec![
            ContentStats::new("warm", 10, 10),
            ContentStats::new("cold-b", 0, 0),
            ContentStats::new("cold-a", 0, 0),
        ];
        assert_eq!(
            rank_top_k(&stats, 30, 0.26, 2).unwrap(),
            vec!["cold-a", "cold-b"]
        );
    }

    #[test]
    fn invalid_records() {
        let stats = vec![ContentStats::new(0u8, 5, 2), ContentStats::new(1, 5, 6)];
        assert_eq!(
            rank_top_k(&stats, 10, 0.26, 1),
            Err(Error::InvalidRecord {
                index: 1,
                clicks: 6,
                impressions: 5
            })
        );
        let empty: Vec<ContentStats<u8>> = Vec::new();
        assert!(rank_top_k(&empty, 10, 0.26, 1).is_err());
        assert!(rank_top_k(&stats[..1], 10, 0.26, 0).is_err());
    }

    #[test]
    fn matches_full_sort_oracle() {
        let stats = synthetic_stats(1000, 17);
        for &(t, k) in &[
            (1u64, 50usize),
            (10_000, 50),
            (2_500_000, 1),
            (2_500_000, 1000),
        ] {
            assert_eq!(
                rank_top_k(&stats, t, 0.26, k).unwrap(),
                brute_force(&stats, t, 0.26, k)
            );
        }
    }

    #[test]
    fn synthetic_stats_are_valid_and_reproducible() {
        let a = synthetic_stats(500, 3);
        assert_eq!(a, synthetic_stats(500, 3));
        assert!(a.iter().all(|s| s.clicks <= s.impressions));
        assert!(a.iter().any(|s| s.impressions == 0));
    }

    #[test]
    fn single_policy_gets_all_traffic() {
        let res = synthetic_traffic_compare(5, 300, &[PolicyConfig::hellinger_ucb()], 1).unwrap();
        assert_eq!(res.served, vec![300]);
        assert_eq!(res.cumulative[0].len(), 300);
    }

    #[test]
    fn traffic_is_deterministic_and_split() {
        let policies = [
            PolicyConfig::hellinger_ucb(),
            PolicyConfig::kl_ucb(),
            PolicyConfig::ucb1(),
        ];
        let a = synthetic_traffic_compare(10, 3000, &policies, 5).unwrap();
        let b = synthetic_traffic_compare(10, 3000, &policies, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.served.iter().sum::<u64>(), 3000);
        assert!(a.served.iter().all(|&n| n > 900 && n < 1100));
        for series in &a.cumulative {
            assert!(series.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn equal_ctrs_give_similar_rewards() {
        let policies = [PolicyConfig::hellinger_ucb(), PolicyConfig::ucb1()];
        let mut diff = 0.0;
        let mut total = 0.0;
        for seed in 0..20 {
            let res = traffic_compare_with_ctrs(&[0.05; 8], 4000, &policies, seed).unwrap();
            let f = res.final_rewards();
            diff += f[0] - f[1];
            total += f[0] + f[1];
        }
        // 20 seeds x ~4000 draws at 5%: totals near 4000, noise ~ a few %.
        assert!(diff.abs() / total < 0.05, "{diff} / {total}");
    }

    #[test]
    fn traffic_input_errors() {
        assert!(traffic_compare_with_ctrs(&[0.1, 0.2], 1, &[PolicyConfig::ucb1()], 0).is_err());
        assert!(traffic_compare_with_ctrs(&[0.1, 1.2], 10, &[PolicyConfig::ucb1()], 0).is_err());
        assert!(traffic_compare_with_ctrs(&[0.1, 0.2], 10, &[], 0).is_err());
    }

    fn arb_stats() -> impl Strategy<Value = Vec<ContentStats<u32>>> {
        prop::collection::vec((0u64..2000, 0.0f64..=1.0), 1..80).prop_map(|v| {
            v.into_iter()
                .enumerate()
                .map(|(i, (n, f))| ContentStats::new(i as u32, n, (n as f64 * f * 0.2) as u64))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn equals_oracle(stats in arb_stats(), t in 1u64..1_000_000, k in 1usize..100) {
            prop_assert_eq!(rank_top_k(&stats, t, 0.26, k).unwrap(), brute_force(&stats, t, 0.26, k));
        }

        #[test]
        fn permutation_invariant(stats in arb_stats(), t in 1u64..100_000, rot in 0usize..80) {
            let mut shuffled = stats.clone();
            let len = shuffled.len();
            shuffled.rotate_left(rot % len);
            shuffled.reverse();
            let k = len.min(10);
            prop_assert_eq!(rank_top_k(&stats, t, 0.26, k).unwrap(), rank_top_k(&shuffled, t, 0.26, k).unwrap());
        }

        #[test]
        fn more_clicks_never_hurt(stats in arb_stats(), t in 1u64..100_000, pick in 0usize..80) {
            let pick = pick % stats.len();
            if stats[pick].clicks < stats[pick].impressions {
                let all = stats.len();
                let before = rank_top_k(&stats, t, 0.26, all).unwrap();
                let mut boosted = stats.clone();
                boosted[pick].clicks += 1;
                let after = rank_top_k(&boosted, t, 0.26, all).unwrap();
                let id = stats[pick].id;
                let pos_before = before.iter().position(|&x| x == id).unwrap();
                let pos_after = after.iter().position(|&x| x == id).unwrap();
                prop_assert!(pos_after <= pos_before);
            }
        }
    }
}
