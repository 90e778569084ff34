//! One-parameter exponential-family reward models and the distances between
//! their members.
//!
//! Everything public is expressed in the mean parametrization: a Bernoulli
//! member is identified by its success probability, a Poisson member by its
//! rate. Natural parameters and the cumulant function only appear inside
//! [`hellinger_sq_from_cumulant`], which exists to cross-check the closed
//! forms.

use core::fmt;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::math;
use crate::{Error, Result};

/// Stop summing a Poisson pmf once both remaining tails are provably below this.
pub const TVD_TAIL_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum RewardFamily {
    /// Rewards in `{0, 1}`; mean domain `[0, 1]`.
    Bernoulli,
    /// Rewards in `{0, 1, 2, ...}`; mean domain `[0, ∞)`.
    Poisson,
}

impl RewardFamily {
    pub fn name(self) -> &'static str {
        match self {
            RewardFamily::Bernoulli => "bernoulli",
            RewardFamily::Poisson => "poisson",
        }
    }

    /// Whether `mu` is a valid mean for this family.
    pub fn contains(self, mu: f64) -> bool {
        match self {
            RewardFamily::Bernoulli => (0.0..=1.0).contains(&mu),
            RewardFamily::Poisson => mu >= 0.0 && mu.is_finite(),
        }
    }

    pub fn mean(self, value: f64) -> Result<MeanParam> {
        if self.contains(value) {
            Ok(MeanParam(value))
        } else {
            Err(Error::MeanOutOfDomain {
                family: self,
                value,
            })
        }
    }

    /// Largest mean in the domain, if bounded.
    pub fn upper_limit(self) -> Option<f64> {
        match self {
            RewardFamily::Bernoulli => Some(1.0),
            RewardFamily::Poisson => None,
        }
    }

    /// Whether `reward` lies in the support of the family.
    pub fn in_support(self, reward: f64) -> bool {
        match self {
            RewardFamily::Bernoulli => reward == 0.0 || reward == 1.0,
            RewardFamily::Poisson => {
                reward >= 0.0 && reward.is_finite() && math::floor(reward) == reward
            }
        }
    }

    fn check(self, mu: f64) -> Result<f64> {
        self.mean(mu).map(MeanParam::get)
    }
}

impl fmt::Display for RewardFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for RewardFamily {
    type Err = UnknownFamily;

    fn from_str(s: &str) -> core::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bernoulli" => Ok(RewardFamily::Bernoulli),
            "poisson" => Ok(RewardFamily::Poisson),
            _ => Err(UnknownFamily),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("unknown reward family (expected `bernoulli` or `poisson`)")]
pub struct UnknownFamily;

/// A mean that has been checked against a family's domain.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct MeanParam(f64);

impl MeanParam {
    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl From<MeanParam> for f64 {
    fn from(m: MeanParam) -> f64 {
        m.0
    }
}

/// Squared Hellinger distance `1 - ∫√(p q)` between two members of `family`.
///
/// Bernoulli: `1 - √((1-p)(1-q)) - √(pq)`. Poisson: `1 - exp(-(√λ0 - √λ1)² / 2)`.
pub fn hellinger_sq(family: RewardFamily, mu0: f64, mu1: f64) -> Result<f64> {
    let mu0 = family.check(mu0)?;
    let mu1 = family.check(mu1)?;
    Ok(hellinger_sq_unchecked(family, mu0, mu1))
}

#[inline]
pub(crate) fn hellinger_sq_unchecked(family: RewardFamily, mu0: f64, mu1: f64) -> f64 {
    if mu0 == mu1 {
        return 0.0;
    }
    match family {
        RewardFamily::Bernoulli => bernoulli_hellinger_sq(mu0, mu1),
        RewardFamily::Poisson => {
            let d = math::sqrt(mu0) - math::sqrt(mu1);
            -math::exp_m1(-0.5 * d * d)
        }
    }
}

// 1 - √(pq) - √((1-p)(1-q)) rewritten as half the squared distance between
// root-densities, which has no cancellation when p and q are close.
#[inline]
fn bernoulli_hellinger_sq(p: f64, q: f64) -> f64 {
    let on = math::sqrt(p) - math::sqrt(q);
    let off = math::sqrt(1.0 - p) - math::sqrt(1.0 - q);
    (0.5 * (on * on + off * off)).min(1.0)
}

/// Squared Hellinger distance through the cumulant function:
/// `1 - exp(ψ((θ0+θ1)/2) - (ψ(θ0)+ψ(θ1))/2)` with `θ` the natural parameter of
/// each mean. Bernoulli means must be strictly inside `(0, 1)`.
pub fn hellinger_sq_from_cumulant(family: RewardFamily, mu0: f64, mu1: f64) -> Result<f64> {
    let mu0 = family.check(mu0)?;
    let mu1 = family.check(mu1)?;
    let (theta0, theta1) = match family {
        RewardFamily::Bernoulli => {
            for mu in [mu0, mu1] {
                if mu <= 0.0 || mu >= 1.0 {
                    return Err(Error::InvalidParameter {
                        name: "interior bernoulli mean",
                        value: mu,
                    });
                }
            }
            (logit(mu0), logit(mu1))
        }
        RewardFamily::Poisson => (math::ln(mu0), math::ln(mu1)),
    };
    let psi = |theta: f64| match family {
        RewardFamily::Bernoulli => math::softplus(theta),
        RewardFamily::Poisson => math::exp(theta),
    };
    let gap = psi(0.5 * (theta0 + theta1)) - 0.5 * (psi(theta0) + psi(theta1));
    Ok(-math::exp_m1(gap))
}

fn logit(p: f64) -> f64 {
    math::ln(p) - math::ln_1p(-p)
}

/// Kullback-Leibler divergence `KL(P_mu0 ‖ P_mu1)`; `+∞` when `P_mu0` is not
/// absolutely continuous with respect to `P_mu1`.
pub fn kl_div(family: RewardFamily, mu0: f64, mu1: f64) -> Result<f64> {
    let mu0 = family.check(mu0)?;
    let mu1 = family.check(mu1)?;
    Ok(kl_div_unchecked(family, mu0, mu1))
}

#[inline]
pub(crate) fn kl_div_unchecked(family: RewardFamily, mu0: f64, mu1: f64) -> f64 {
    if mu0 == mu1 {
        return 0.0;
    }
    match family {
        RewardFamily::Bernoulli => {
            let mut kl = 0.0;
            if mu0 > 0.0 {
                if mu1 == 0.0 {
                    return f64::INFINITY;
                }
                kl += mu0 * math::ln(mu0 / mu1);
            }
            if mu0 < 1.0 {
                if mu1 == 1.0 {
                    return f64::INFINITY;
                }
                kl += (1.0 - mu0) * math::ln((1.0 - mu0) / (1.0 - mu1));
            }
            kl.max(0.0)
        }
        RewardFamily::Poisson => {
            if mu0 == 0.0 {
                return mu1;
            }
            if mu1 == 0.0 {
                return f64::INFINITY;
            }
            (mu0 * math::ln(mu0 / mu1) - mu0 + mu1).max(0.0)
        }
    }
}

/// Total variation distance `½ Σ |p(x) - q(x)|`.
///
/// The Poisson sum runs until both remaining tails are bounded by
/// [`TVD_TAIL_TOLERANCE`].
pub fn tvd(family: RewardFamily, mu0: f64, mu1: f64) -> Result<f64> {
    let mu0 = family.check(mu0)?;
    let mu1 = family.check(mu1)?;
    if mu0 == mu1 {
        return Ok(0.0);
    }
    Ok(match family {
        RewardFamily::Bernoulli => (mu0 - mu1).abs(),
        RewardFamily::Poisson => poisson_tvd(mu0, mu1),
    })
}

fn poisson_log_pmf(lambda: f64, x: f64) -> f64 {
    if lambda == 0.0 {
        return if x == 0.0 { 0.0 } else { f64::NEG_INFINITY };
    }
    x * math::ln(lambda) - lambda - math::ln_gamma(x + 1.0)
}

/// Upper bound on `Σ_{y > x} pmf(y)` given `pmf(x)`, valid once `x + 2 > λ`.
fn poisson_tail_after(lambda: f64, x: f64, pmf_x: f64) -> f64 {
    let ratio = lambda / (x + 2.0);
    if ratio >= 1.0 {
        return f64::INFINITY;
    }
    pmf_x * (lambda / (x + 1.0)) / (1.0 - ratio)
}

fn poisson_tvd(a: f64, b: f64) -> f64 {
    let mut total = 0.0;
    let mut x = 0.0_f64;
    loop {
        let pa = math::exp(poisson_log_pmf(a, x));
        let pb = math::exp(poisson_log_pmf(b, x));
        total += (pa - pb).abs();
        if poisson_tail_after(a, x, pa) < TVD_TAIL_TOLERANCE
            && poisson_tail_after(b, x, pb) < TVD_TAIL_TOLERANCE
        {
            break;
        }
        x += 1.0;
    }
    (0.5 * total).min(1.0)
}

/// Draws one reward with mean `mu`.
pub fn sample<R: Rng + ?Sized>(family: RewardFamily, mu: f64, rng: &mut R) -> Result<f64> {
    let mu = family.check(mu)?;
    Ok(sample_unchecked(family, mu, rng))
}

#[inline]
pub(crate) fn sample_unchecked<R: Rng + ?Sized>(family: RewardFamily, mu: f64, rng: &mut R) -> f64 {
    match family {
        RewardFamily::Bernoulli => {
            if rng.random::<f64>() < mu {
                1.0
            } else {
                0.0
            }
        }
        RewardFamily::Poisson => {
            if mu == 0.0 {
                return 0.0;
            }
            match Poisson::new(mu) {
                Ok(dist) => dist.sample(rng),
                // Rates beyond what the sampler accepts are far outside any
                // bandit workload; fall back to the mean.
                Err(_) => math::round(mu),
            }
        }
    }
}
