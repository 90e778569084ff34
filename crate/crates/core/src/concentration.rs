//! Monte-Carlo check of the one-sided KL deviation inequality
//!
//! ```text
//! P{ μ̂(n) > μ, KL(μ̂(n), μ) > f(n) / n } ≤ e^(-f(n))
//! ```
//!
//! where `μ̂(n)` is the mean of `n` i.i.d. rewards with mean `μ`.

use rand_distr::{Binomial, Distribution, Poisson};

use crate::math;
use crate::reward::{kl_div_unchecked, RewardFamily};
use crate::seed;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEstimate {
    pub trials: u64,
    pub exceedances: u64,
    /// `exceedances / trials`
    pub frequency: f64,
    /// `e^(-f(n))`
    pub bound: f64,
    /// `bound + 3 · √(bound / trials)`: the bound plus three binomial standard errors.
    pub allowance: f64,
}

impl TailEstimate {
    pub fn holds(&self) -> bool {
        self.frequency <= self.allowance
    }

    pub fn margin(&self) -> f64 {
        self.allowance - self.frequency
    }
}

pub fn tail_frequency(
    family: RewardFamily,
    mu: f64,
    n: u64,
    f_n: f64,
    trials: u64,
    seed: u64,
) -> Result<TailEstimate> {
    family.mean(mu)?;
    if n == 0 {
        return Err(Error::Empty("sample per trial"));
    }
    if trials == 0 {
        return Err(Error::Empty("trial"));
    }
    let threshold = f_n / n as f64;
    let mut rng = seed::stream(seed, 0);
    let mut draw_sum = || -> f64 {
        match family {
            RewardFamily::Bernoulli => {
                Binomial::new(n, mu).map_or(0.0, |b| b.sample(&mut rng) as f64)
            }
            RewardFamily::Poisson => {
                let rate = mu * n as f64;
                if rate == 0.0 {
                    0.0
                } else {
                    Poisson::new(rate).map_or(rate, |p| p.sample(&mut rng))
                }
            }
        }
    };
    let mut exceedances = 0;
    for _ in 0..trials {
        let mu_hat = draw_sum() / n as f64;
        if mu_hat > mu && kl_div_unchecked(family, mu_hat, mu) > threshold {
            exceedances += 1;
        }
    }
    let bound = math::exp(-f_n);
    Ok(TailEstimate {
        trials,
        exceedances,
        frequency: exceedances as f64 / trials as f64,
        bound,
        allowance: bound + 3.0 * math::sqrt(bound / trials as f64),
    })
}
