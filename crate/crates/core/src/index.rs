//! Upper-confidence indices: Hellinger-UCB (closed forms and a generic
//! bisection solver), KL-UCB and UCB1.

use core::fmt;

use crate::math;
use crate::reward::{hellinger_sq_unchecked, kl_div_unchecked, RewardFamily};
use crate::{Error, Result};

/// Largest final bracket width of the bisection solvers. They keep halving
/// down to adjacent floats when the iteration cap allows, since the KL
/// constraint is steep near the top of the Bernoulli domain.
pub const BISECTION_TOLERANCE: f64 = 1e-12;
/// Iteration cap of the bisection solvers.
pub const BISECTION_MAX_ITER: usize = 200;

pub const DEFAULT_C_HELLINGER: f64 = 0.26;
pub const DEFAULT_C_KL_LOGLOG: f64 = 0.0;

/// Sufficient statistics of one arm.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ArmState {
    pub pulls: u64,
    pub reward_sum: f64,
}

impl ArmState {
    pub fn new(pulls: u64, reward_sum: f64) -> Self {
        Self { pulls, reward_sum }
    }

    /// Empirical mean, or `None` before the first pull.
    pub fn mean(&self) -> Option<f64> {
        (self.pulls > 0).then(|| self.reward_sum / self.pulls as f64)
    }

    pub fn record(&mut self, reward: f64) {
        self.pulls += 1;
        self.reward_sum += reward;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum IndexRule {
    #[cfg_attr(
        feature = "serde",
        serde(rename = "hellinger_ucb", alias = "hellinger")
    )]
    HellingerUcb,
    #[cfg_attr(feature = "serde", serde(rename = "kl_ucb", alias = "klucb"))]
    KlUcb,
    #[cfg_attr(feature = "serde", serde(rename = "ucb1"))]
    Ucb1,
}

impl IndexRule {
    pub fn name(self) -> &'static str {
        match self {
            IndexRule::HellingerUcb => "hellinger_ucb",
            IndexRule::KlUcb => "kl_ucb",
            IndexRule::Ucb1 => "ucb1",
        }
    }
}

impl fmt::Display for IndexRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for IndexRule {
    type Err = UnknownRule;

    fn from_str(s: &str) -> core::result::Result<Self, Self::Err> {
        let normalized: alloc::string::String = s
            .chars()
            .filter(|c| !matches!(c, '-' | '_' | ' '))
            .map(|c| c.to_ascii_lowercase())
            .collect();
        match normalized.as_str() {
            "hellinger" | "hellingerucb" => Ok(IndexRule::HellingerUcb),
            "kl" | "klucb" => Ok(IndexRule::KlUcb),
            "ucb1" | "ucb" => Ok(IndexRule::Ucb1),
            _ => Err(UnknownRule),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("unknown index rule (expected `hellinger_ucb`, `kl_ucb` or `ucb1`)")]
pub struct UnknownRule;

/// Which index rule to use, plus its exploration constants.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PolicyConfig {
    pub rule: IndexRule,
    /// `c` in the Hellinger radius `1 - exp(-c log t / N)`; must lie in `(1/4, 1/2]`.
    pub c_hellinger: f64,
    /// Weight of the `log log t` term in the KL-UCB exploration bound.
    pub c_kl_loglog: f64,
}

impl PolicyConfig {
    pub fn new(rule: IndexRule) -> Self {
        Self {
            rule,
            c_hellinger: DEFAULT_C_HELLINGER,
            c_kl_loglog: DEFAULT_C_KL_LOGLOG,
        }
    }

    pub fn hellinger_ucb() -> Self {
        Self::new(IndexRule::HellingerUcb)
    }

    pub fn kl_ucb() -> Self {
        Self::new(IndexRule::KlUcb)
    }

    pub fn ucb1() -> Self {
        Self::new(IndexRule::Ucb1)
    }

    pub fn with_c_hellinger(mut self, c: f64) -> Self {
        self.c_hellinger = c;
        self
    }

    pub fn with_c_kl_loglog(mut self, c: f64) -> Self {
        self.c_kl_loglog = c;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c_hellinger > 0.25 && self.c_hellinger <= 0.5) {
            return Err(Error::InvalidParameter {
                name: "c_hellinger (must lie in (0.25, 0.5])",
                value: self.c_hellinger,
            });
        }
        if !(self.c_kl_loglog >= 0.0 && self.c_kl_loglog.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "c_kl_loglog (must be finite and >= 0)",
                value: self.c_kl_loglog,
            });
        }
        Ok(())
    }
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self::hellinger_ucb()
    }
}

/// Radius of the squared-Hellinger ball: `1 - exp(-c log(t) / n)`.
#[inline]
pub fn hellinger_radius(t: u64, n: u64, c: f64) -> f64 {
    debug_assert!(t >= 1 && n >= 1);
    radius_from_exploration(c * math::ln(t as f64) / n as f64)
}

/// `1 - exp(-x)` for an exploration level `x = c log(t) / n`.
#[inline]
pub fn radius_from_exploration(exploration: f64) -> f64 {
    -math::exp_m1(-exploration)
}

/// Closed-form Hellinger-UCB index for Bernoulli rewards: the largest
/// `q ∈ [p̂, 1]` with `H²(p̂, q) ≤ radius`.
///
/// Dividing `R = 1 - √((1-p)(1-q)) - √(pq)` by `√p` and squaring twice
/// leaves the quadratic `a q² + b q + c = 0` with `m1 = √((1-p)/p)`,
/// `m2 = (1-R)/√p`:
///
/// ```text
/// a = (m1² + 1)²
/// b = 2 (m1² m2² - m1⁴ - m1² - m2²)
/// c = (m2² - m1²)²
/// ```
///
/// whose larger root is the index. When the ball already contains `q = 1`
/// (`R ≥ 1 - √p`) the larger root is not a solution and the index is 1.
#[inline]
pub fn hellinger_index_bernoulli(p_hat: f64, radius: f64) -> f64 {
    bernoulli_quadratic_index(p_hat, radius, 0.0)
}

/// Same as [`hellinger_index_bernoulli`] with the linear coefficient scaled by
/// `1 + perturbation`. Only meant for negative-control checks.
#[doc(hidden)]
pub fn hellinger_index_bernoulli_perturbed(p_hat: f64, radius: f64, perturbation: f64) -> f64 {
    bernoulli_quadratic_index(p_hat, radius, perturbation)
}

#[inline]
fn bernoulli_quadratic_index(p: f64, radius: f64, perturbation: f64) -> f64 {
    let p = p.clamp(0.0, 1.0);
    if radius <= 0.0 {
        return p;
    }
    if p == 0.0 {
        let s = 1.0 - radius;
        return 1.0 - s * s;
    }
    if p == 1.0 || radius >= 1.0 - math::sqrt(p) {
        return 1.0;
    }
    let m1_sq = (1.0 - p) / p;
    let m2 = (1.0 - radius) / math::sqrt(p);
    let m2_sq = m2 * m2;
    let a = (m1_sq + 1.0) * (m1_sq + 1.0);
    let b = 2.0 * (m1_sq * m2_sq - m1_sq * m1_sq - m1_sq - m2_sq) * (1.0 + perturbation);
    let c = (m2_sq - m1_sq) * (m2_sq - m1_sq);
    let disc = (b * b - 4.0 * a * c).max(0.0);
    let root = if b < 0.0 {
        (-b + math::sqrt(disc)) / (2.0 * a)
    } else {
        let denom = -b - math::sqrt(disc);
        if denom == 0.0 {
            return p;
        }
        2.0 * c / denom
    };
    root.clamp(p, 1.0)
}

/// Closed-form Hellinger-UCB index for Poisson rewards, `(√λ̂ + √(2x))²`
/// where `x = c log(t) / n`.
#[inline]
pub fn hellinger_index_poisson(lambda_hat: f64, exploration: f64) -> f64 {
    let root = math::sqrt(lambda_hat.max(0.0)) + math::sqrt(2.0 * exploration.max(0.0));
    root * root
}

/// `sup {μ ≥ μ̂ : H²(μ̂, μ) ≤ radius}` by bisection, for any family.
pub fn hellinger_index_generic(family: RewardFamily, mu_hat: f64, radius: f64) -> f64 {
    if radius <= 0.0 {
        return mu_hat;
    }
    sup_within(family, mu_hat, |mu| {
        hellinger_sq_unchecked(family, mu_hat, mu) <= radius
    })
}

/// KL-UCB index: `sup {μ ≥ μ̂ : KL(μ̂, μ) ≤ bound}` by bisection.
pub fn kl_ucb_index(family: RewardFamily, mu_hat: f64, bound: f64) -> f64 {
    if bound <= 0.0 {
        return mu_hat;
    }
    match family {
        RewardFamily::Bernoulli if mu_hat <= 0.0 => return -math::exp_m1(-bound),
        RewardFamily::Poisson if mu_hat <= 0.0 => return bound,
        _ => {}
    }
    sup_within(family, mu_hat, |mu| {
        kl_div_unchecked(family, mu_hat, mu) <= bound
    })
}

/// Largest `μ ≥ μ̂` in the family domain that satisfies `feasible`, assuming
/// the feasible set is an interval starting at `μ̂`.
fn sup_within(family: RewardFamily, mu_hat: f64, feasible: impl Fn(f64) -> bool) -> f64 {
    let (lo, hi) = match family.upper_limit() {
        Some(top) => {
            if mu_hat >= top || feasible(top) {
                return top;
            }
            (mu_hat, top)
        }
        None => {
            let mut lo = mu_hat;
            let mut hi = mu_hat.max(1.0);
            // 1100 doublings exhaust the f64 range.
            for _ in 0..1100 {
                if !feasible(hi) {
                    break;
                }
                lo = hi;
                hi *= 2.0;
                if !hi.is_finite() {
                    return lo;
                }
            }
            (lo, hi)
        }
    };
    bisect(lo, hi, feasible)
}

/// `lo` feasible, `hi` infeasible; returns the feasible end of the final bracket.
fn bisect(mut lo: f64, mut hi: f64, feasible: impl Fn(f64) -> bool) -> f64 {
    for _ in 0..BISECTION_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// UCB1 index `μ̂ + √(2 log(t) / n)`, left unclamped.
#[inline]
pub fn ucb1_index(mu_hat: f64, t: u64, n: u64) -> f64 {
    debug_assert!(n >= 1);
    mu_hat + math::sqrt(2.0 * math::ln(t as f64) / n as f64)
}

/// KL-UCB exploration bound `(log t + c log log t) / n`, with `log log t`
/// floored at zero.
#[inline]
pub fn kl_ucb_bound(t: u64, n: u64, c_loglog: f64) -> f64 {
    let log_t = math::ln(t as f64);
    let loglog = if log_t > 1.0 { math::ln(log_t) } else { 0.0 };
    (log_t + c_loglog * loglog) / n as f64
}

/// Index of one arm under `config` at global step `t`.
pub fn index(config: &PolicyConfig, family: RewardFamily, state: &ArmState, t: u64) -> Result<f64> {
    let mu_hat = state.mean().ok_or(Error::NoPulls)?;
    let t = t.max(1);
    let n = state.pulls;
    Ok(match config.rule {
        IndexRule::HellingerUcb => {
            let exploration = config.c_hellinger * math::ln(t as f64) / n as f64;
            match family {
                RewardFamily::Bernoulli => {
                    hellinger_index_bernoulli(mu_hat, radius_from_exploration(exploration))
                }
                RewardFamily::Poisson => hellinger_index_poisson(mu_hat, exploration),
            }
        }
        IndexRule::KlUcb => kl_ucb_index(family, mu_hat, kl_ucb_bound(t, n, config.c_kl_loglog)),
        IndexRule::Ucb1 => ucb1_index(mu_hat, t, n),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reward::{hellinger_sq, kl_div};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    use RewardFamily::{Bernoulli, Poisson};

    /// Independent oracle: with `√p = sin α` and `√q = sin φ`,
    /// `√(pq) + √((1-p)(1-q)) = cos(φ - α)`, so the ball boundary is at
    /// `φ = α + acos(1 - R)`, capped at `π/2`.
    fn angle_oracle(p: f64, radius: f64) -> f64 {
        let alpha = p.sqrt().asin();
        let phi = (alpha + (1.0 - radius).acos()).min(core::f64::consts::FRAC_PI_2);
        phi.sin().powi(2).max(p)
    }

    fn bisection_oracle(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            if f(mid) <= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    #[test]
    fn radius_examples() {
        assert_eq!(hellinger_radius(1, 5, 0.5), 0.0);
        assert_abs_diff_eq!(
            radius_from_exploration(0.5),
            0.393_469_340_287_366_6,
            epsilon = 1e-15
        );
        let r = hellinger_radius(1_000_000, 1_000_000_000, 0.5);
        assert_abs_diff_eq!(r, 6.907755255123596e-9, epsilon = 1e-20);
        assert!(hellinger_radius(100, 5, 0.3) < hellinger_radius(101, 5, 0.3));
        assert!(hellinger_radius(100, 6, 0.3) < hellinger_radius(100, 5, 0.3));
    }

    #[test]
    fn bernoulli_index_examples() {
        assert_eq!(hellinger_index_bernoulli(0.3, 0.0), 0.3);
        for r in [0.01, 0.2, 0.7] {
            assert_abs_diff_eq!(
                hellinger_index_bernoulli(0.0, r),
                1.0 - (1.0 - r) * (1.0 - r),
                epsilon = 1e-15
            );
        }
        let oracle = bisection_oracle(
            |q| hellinger_sq(Bernoulli, 0.5, q).unwrap() - 0.05,
            0.5,
            1.0,
        );
        let q = hellinger_index_bernoulli(0.5, 0.05);
        assert_abs_diff_eq!(q, oracle, epsilon = 1e-9);
        assert_abs_diff_eq!(q, 0.796_637_404_923_923_9, epsilon = 1e-9);
    }

    #[test]
    fn bernoulli_index_saturates() {
        // H²(p, 1) = 1 - √p
        assert_eq!(hellinger_index_bernoulli(0.25, 0.5), 1.0);
        assert_eq!(hellinger_index_bernoulli(1.0, 0.1), 1.0);
        assert_eq!(hellinger_index_bernoulli(0.3, 1.0 - 1e-9), 1.0);
    }

    #[test]
    fn bernoulli_closed_form_matches_angle_oracle() {
        for i in 0..=100 {
            for j in 0..=100 {
                let p = i as f64 / 100.0;
                let r = j as f64 / 100.0 * 0.999;
                let q = hellinger_index_bernoulli(p, r);
                assert_abs_diff_eq!(q, angle_oracle(p, r), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn poisson_index_examples() {
        assert_eq!(hellinger_index_poisson(3.3, 0.0), 3.3);
        assert_eq!(hellinger_index_poisson(0.0, 0.5), 1.0);
        assert_abs_diff_eq!(hellinger_index_poisson(4.0, 0.125), 6.25, epsilon = 1e-15);
        let generic = hellinger_index_generic(Poisson, 4.0, radius_from_exploration(0.125));
        assert_abs_diff_eq!(generic, 6.25, epsilon = 1e-9);
    }

    #[test]
    fn generic_examples() {
        assert_eq!(hellinger_index_generic(Bernoulli, 0.3, 0.0), 0.3);
        assert_eq!(hellinger_index_generic(Bernoulli, 0.25, 0.6), 1.0);
        for &(p, r) in &[(0.02, 0.001), (0.5, 0.05), (0.9, 0.01), (0.0, 0.3)] {
            assert_abs_diff_eq!(
                hellinger_index_generic(Bernoulli, p, r),
                hellinger_index_bernoulli(p, r),
                epsilon = 1e-9
            );
        }
        for &(l, x) in &[(0.0, 0.2), (0.05, 0.01), (12.0, 3.0), (500.0, 0.001)] {
            assert_abs_diff_eq!(
                hellinger_index_generic(Poisson, l, radius_from_exploration(x)),
                hellinger_index_poisson(l, x),
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn kl_ucb_examples() {
        assert_eq!(kl_ucb_index(Bernoulli, 0.4, 0.0), 0.4);
        assert_abs_diff_eq!(
            kl_ucb_index(Bernoulli, 0.0, 0.7),
            1.0 - (-0.7f64).exp(),
            epsilon = 1e-15
        );
        let q = kl_ucb_index(Bernoulli, 0.5, 0.2);
        assert_abs_diff_eq!(kl_div(Bernoulli, 0.5, q).unwrap(), 0.2, epsilon = 1e-10);
        assert_abs_diff_eq!(q, 0.787_088_816_381_081_2, epsilon = 1e-10);
        assert_eq!(kl_ucb_index(Bernoulli, 1.0, 0.3), 1.0);
        // Values from an established KL-UCB implementation.
        assert_abs_diff_eq!(kl_ucb_index(Bernoulli, 0.1, 0.2), 0.378391, epsilon = 1e-6);
        assert_abs_diff_eq!(kl_ucb_index(Bernoulli, 0.9, 0.2), 0.994489, epsilon = 1e-6);
    }

    #[test]
    fn kl_ucb_poisson() {
        assert_eq!(kl_ucb_index(Poisson, 0.0, 0.4), 0.4);
        let q = kl_ucb_index(Poisson, 2.0, 0.3);
        assert!(q > 2.0);
        assert_abs_diff_eq!(kl_div(Poisson, 2.0, q).unwrap(), 0.3, epsilon = 1e-10);
    }

    #[test]
    fn ucb1_examples() {
        assert_eq!(ucb1_index(0.5, 1, 7), 0.5);
        assert_abs_diff_eq!(
            ucb1_index(0.5, 3, 2),
            0.5 + 3f64.ln().sqrt(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            ucb1_index(0.0, 1_000_000, 1_000_000),
            0.005_256_521_769_756_932,
            epsilon = 1e-15
        );
        assert!(ucb1_index(0.9, 10, 1) > 1.0);
    }

    #[test]
    fn dispatch() {
        let h = PolicyConfig::hellinger_ucb();
        assert_eq!(
            index(&h, Bernoulli, &ArmState::new(1, 0.0), 1).unwrap(),
            0.0
        );

        let u = PolicyConfig::ucb1();
        let s = ArmState::new(8, 3.0);
        assert_eq!(
            index(&u, Bernoulli, &s, 50).unwrap(),
            ucb1_index(3.0 / 8.0, 50, 8)
        );

        let k = PolicyConfig::kl_ucb();
        let s = ArmState::new(10, 1.0);
        assert_eq!(
            index(&k, Bernoulli, &s, 100).unwrap(),
            kl_ucb_index(Bernoulli, 0.1, 100f64.ln() / 10.0)
        );

        let hp = index(&h, Poisson, &ArmState::new(4, 2.0), 20).unwrap();
        assert_eq!(hp, hellinger_index_poisson(0.5, 0.26 * 20f64.ln() / 4.0));

        assert_eq!(
            index(&h, Bernoulli, &ArmState::default(), 5),
            Err(Error::NoPulls)
        );
    }

    #[test]
    fn kl_bound_loglog_floor() {
        assert_eq!(kl_ucb_bound(2, 1, 3.0), 2f64.ln());
        let t = 1000u64;
        let expected = ((t as f64).ln() + 3.0 * (t as f64).ln().ln()) / 4.0;
        assert_abs_diff_eq!(kl_ucb_bound(t, 4, 3.0), expected, epsilon = 1e-15);
    }

    #[test]
    fn config_validation() {
        assert!(PolicyConfig::default().validate().is_ok());
        assert_eq!(PolicyConfig::default().c_hellinger, 0.26);
        assert!(PolicyConfig::hellinger_ucb()
            .with_c_hellinger(0.25)
            .validate()
            .is_err());
        assert!(PolicyConfig::hellinger_ucb()
            .with_c_hellinger(0.5)
            .validate()
            .is_ok());
        assert!(PolicyConfig::kl_ucb()
            .with_c_kl_loglog(-1.0)
            .validate()
            .is_err());
        assert_eq!(
            "Hellinger-UCB".parse::<IndexRule>(),
            Ok(IndexRule::HellingerUcb)
        );
        assert_eq!("kl_ucb".parse::<IndexRule>(), Ok(IndexRule::KlUcb));
    }

    #[test]
    fn perturbation_changes_result() {
        let clean = hellinger_index_bernoulli(0.3, 0.05);
        let bent = hellinger_index_bernoulli_perturbed(0.3, 0.05, 1e-3);
        assert!((clean - bent).abs() > 1e-6);
    }

    proptest! {
        #[test]
        fn indices_are_optimistic(p in 0.0f64..=1.0, n in 1u64..10_000, t in 1u64..1_000_000) {
            let state = ArmState::new(n, p * n as f64);
            let mu = state.mean().unwrap();
            for cfg in [PolicyConfig::hellinger_ucb(), PolicyConfig::kl_ucb(), PolicyConfig::ucb1()] {
                for family in [Bernoulli, Poisson] {
                    prop_assert!(index(&cfg, family, &state, t).unwrap() >= mu);
                }
            }
        }

        #[test]
        fn hellinger_index_monotone(p in 0.0f64..=1.0, r1 in 0.0f64..1.0, r2 in 0.0f64..1.0) {
            let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
            prop_assert!(hellinger_index_bernoulli(p, lo) <= hellinger_index_bernoulli(p, hi) + 1e-12);
            prop_assert!(hellinger_index_poisson(p * 10.0, lo) <= hellinger_index_poisson(p * 10.0, hi));
        }

        #[test]
        fn hellinger_index_shrinks_with_pulls(p in 0.0f64..=1.0, n in 1u64..100_000, t in 2u64..1_000_000) {
            let wide = hellinger_index_bernoulli(p, hellinger_radius(t, n, 0.3));
            let narrow = hellinger_index_bernoulli(p, hellinger_radius(t, n + 1, 0.3));
            prop_assert!(narrow <= wide + 1e-12);
        }

        #[test]
        fn bisection_hits_the_constraint(p in 0.001f64..0.999, r in 1e-6f64..0.5) {
            let q = hellinger_index_generic(Bernoulli, p, r);
            if q < 1.0 {
                prop_assert!((hellinger_sq(Bernoulli, p, q).unwrap() - r).abs() <= 1e-9);
            }
            let k = kl_ucb_index(Bernoulli, p, r);
            if k < 1.0 - 1e-6 {
                prop_assert!((kl_div(Bernoulli, p, k).unwrap() - r).abs() <= 1e-9);
            }
        }

        #[test]
        fn closed_form_never_nan(p in 0.0f64..=1.0, r in 0.0f64..=1.0) {
            let q = hellinger_index_bernoulli(p, r);
            prop_assert!(q.is_finite() && (p..=1.0).contains(&q));
        }
    }
}
