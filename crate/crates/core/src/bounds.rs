//! Finite-time upper bounds on Hellinger-UCB pull counts and regret, and the
//! asymptotic regret lower bound every consistent policy must respect.
//!
//! For a sub-optimal arm `i` and any `ε > 0`:
//!
//! ```text
//! E[N_i(T)] ≤ C1 log T + C1 / T^C2 + Σ_{t≤T} t^(-2c) + e^(-2H²) / (1 - e^(-2H²))
//! C1(ε) = -c / log(1 - H²(μ*, μ_i) / (1 + ε))
//! C2(ε) = (√(1+ε) - 1)² / (1 + ε)
//! ```
//!
//! [`BoundForm::Derived`] swaps the second term for the form that comes out
//! of the proof, `(C2 H²)^-1 / T^(2 C1 C2 H²)`.

use alloc::vec::Vec;

use crate::math;
use crate::reward::{hellinger_sq, kl_div, RewardFamily};
use crate::{Error, Result};

/// Horizons up to this size sum the p-series term exactly.
pub const EXACT_P_SERIES_LIMIT: u64 = 1_000_000;
pub const EPSILON_GRID_POINTS: usize = 100;
pub const EPSILON_GRID_MIN: f64 = 1e-3;
pub const EPSILON_GRID_MAX: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundForm {
    /// Second term `C1 / T^C2`.
    #[default]
    Simplified,
    /// Second term `(C2 H²)^-1 / T^(2 C1 C2 H²)`.
    Derived,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants {
    pub c: f64,
    pub epsilon: f64,
    pub c1: f64,
    pub c2: f64,
    /// `H²(μ*, μ_i)`
    pub hellinger_sq: f64,
}

impl BoundConstants {
    pub fn new(
        family: RewardFamily,
        mu_star: f64,
        mu_i: f64,
        c: f64,
        epsilon: f64,
    ) -> Result<Self> {
        let h2 = check_arm(family, mu_star, mu_i, c)?;
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "epsilon",
                value: epsilon,
            });
        }
        Ok(Self::from_parts(h2, c, epsilon))
    }

    fn from_parts(h2: f64, c: f64, epsilon: f64) -> Self {
        let c1 = -c / math::ln_1p(-h2 / (1.0 + epsilon));
        let root = math::sqrt(1.0 + epsilon) - 1.0;
        let c2 = root * root / (1.0 + epsilon);
        Self {
            c,
            epsilon,
            c1,
            c2,
            hellinger_sq: h2,
        }
    }
}

fn check_arm(family: RewardFamily, mu_star: f64, mu_i: f64, c: f64) -> Result<f64> {
    let h2 = hellinger_sq(family, mu_star, mu_i)?;
    if mu_i >= mu_star {
        return Err(Error::NotSuboptimal { mu_i, mu_star });
    }
    check_c(c)?;
    Ok(h2)
}

fn check_c(c: f64) -> Result<()> {
    if !(c > 0.25 && c <= 0.5) {
        return Err(Error::InvalidParameter {
            name: "c (must lie in (0.25, 0.5])",
            value: c,
        });
    }
    Ok(())
}

/// `Σ_{t=1}^{T} t^(-exponent)`, bracketed when not summed exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PSeries {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

impl PSeries {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

pub fn p_series(exponent: f64, horizon: u64) -> PSeries {
    let exact_to = horizon.min(EXACT_P_SERIES_LIMIT);
    let head: f64 = (1..=exact_to)
        .rev()
        .map(|t| math::powf(t as f64, -exponent))
        .sum();
    if horizon <= EXACT_P_SERIES_LIMIT {
        return PSeries {
            value: head,
            lower: head,
            upper: head,
        };
    }
    // Σ_{t=N+1}^{T} t^-s lies between ∫_{N+1}^{T+1} and ∫_{N}^{T} of x^-s.
    let integral = |a: f64, b: f64| {
        if (exponent - 1.0).abs() < 1e-15 {
            math::ln(b) - math::ln(a)
        } else {
            let e = 1.0 - exponent;
            (math::powf(b, e) - math::powf(a, e)) / e
        }
    };
    let n = exact_to as f64;
    let t = horizon as f64;
    let lower = head + integral(n + 1.0, t + 1.0);
    let upper = head + integral(n, t);
    PSeries {
        value: 0.5 * (lower + upper),
        lower,
        upper,
    }
}

/// The four terms of the pull-count bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PullBound {
    pub constants: BoundConstants,
    /// `C1 log T`
    pub leading: f64,
    /// `C1 / T^C2` (or the derived variant)
    pub transient: f64,
    /// `Σ t^(-2c)`
    pub p_series: PSeries,
    /// `e^(-2H²) / (1 - e^(-2H²))`
    pub tail: f64,
}

impl PullBound {
    pub fn total(&self) -> f64 {
        self.leading + self.transient + self.p_series.value + self.tail
    }

    fn evaluate(
        constants: BoundConstants,
        form: BoundForm,
        horizon: u64,
        p_series: PSeries,
    ) -> Self {
        let BoundConstants {
            c1,
            c2,
            hellinger_sq: h2,
            ..
        } = constants;
        let t = horizon as f64;
        let leading = c1 * math::ln(t);
        let transient = match form {
            BoundForm::Simplified => c1 / math::powf(t, c2),
            BoundForm::Derived => 1.0 / (c2 * h2) / math::powf(t, 2.0 * c1 * c2 * h2),
        };
        let tail = 1.0 / math::exp_m1(2.0 * h2);
        Self {
            constants,
            leading,
            transient,
            p_series,
            tail,
        }
    }
}

fn check_horizon(horizon: u64) -> Result<()> {
    if horizon == 0 {
        return Err(Error::InvalidParameter {
            name: "horizon",
            value: 0.0,
        });
    }
    Ok(())
}

/// Upper bound on `E[N_i(T)]` for sub-optimal arm `i` under Hellinger-UCB.
pub fn expected_pulls_bound(
    family: RewardFamily,
    mu_star: f64,
    mu_i: f64,
    c: f64,
    epsilon: f64,
    horizon: u64,
) -> Result<PullBound> {
    expected_pulls_bound_with(
        BoundForm::Simplified,
        family,
        mu_star,
        mu_i,
        c,
        epsilon,
        horizon,
    )
}

pub fn expected_pulls_bound_with(
    form: BoundForm,
    family: RewardFamily,
    mu_star: f64,
    mu_i: f64,
    c: f64,
    epsilon: f64,
    horizon: u64,
) -> Result<PullBound> {
    check_horizon(horizon)?;
    let constants = BoundConstants::new(family, mu_star, mu_i, c, epsilon)?;
    Ok(PullBound::evaluate(
        constants,
        form,
        horizon,
        p_series(2.0 * c, horizon),
    ))
}

/// `points` log-spaced values of ε in `[1e-3, 10]`.
pub fn epsilon_grid(points: usize) -> Vec<f64> {
    let (lo, hi) = (math::ln(EPSILON_GRID_MIN), math::ln(EPSILON_GRID_MAX));
    match points {
        0 => Vec::new(),
        1 => alloc::vec![EPSILON_GRID_MIN],
        n => (0..n)
            .map(|i| math::exp(lo + (hi - lo) * i as f64 / (n - 1) as f64))
            .collect(),
    }
}

/// Minimizes the pull bound over the default ε grid.
pub fn best_epsilon(
    family: RewardFamily,
    mu_star: f64,
    mu_i: f64,
    c: f64,
    horizon: u64,
) -> Result<(f64, PullBound)> {
    best_epsilon_on(
        BoundForm::Simplified,
        &epsilon_grid(EPSILON_GRID_POINTS),
        family,
        mu_star,
        mu_i,
        c,
        horizon,
    )
}

/// Minimizes the pull bound over an explicit ε grid.
pub fn best_epsilon_on(
    form: BoundForm,
    grid: &[f64],
    family: RewardFamily,
    mu_star: f64,
    mu_i: f64,
    c: f64,
    horizon: u64,
) -> Result<(f64, PullBound)> {
    check_horizon(horizon)?;
    let h2 = check_arm(family, mu_star, mu_i, c)?;
    minimize_over_grid(form, grid, h2, c, horizon, p_series(2.0 * c, horizon))
}

fn minimize_over_grid(
    form: BoundForm,
    grid: &[f64],
    h2: f64,
    c: f64,
    horizon: u64,
    series: PSeries,
) -> Result<(f64, PullBound)> {
    let mut best: Option<(f64, PullBound)> = None;
    for &epsilon in grid {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "epsilon",
                value: epsilon,
            });
        }
        let bound = PullBound::evaluate(
            BoundConstants::from_parts(h2, c, epsilon),
            form,
            horizon,
            series,
        );
        if best.as_ref().is_none_or(|(_, b)| bound.total() < b.total()) {
            best = Some((epsilon, bound));
        }
    }
    best.ok_or(Error::Empty("epsilon grid point"))
}

fn best_mean(means: &[f64]) -> f64 {
    means.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// `Σ_i Δ_i · E[N_i(T)]` bound at a fixed ε; optimal arms contribute nothing.
pub fn regret_upper_bound(
    family: RewardFamily,
    means: &[f64],
    c: f64,
    epsilon: f64,
    horizon: u64,
) -> Result<f64> {
    let mu_star = best_mean(means);
    let mut total = 0.0;
    for &mu in means {
        if mu < mu_star {
            total += (mu_star - mu)
                * expected_pulls_bound(family, mu_star, mu, c, epsilon, horizon)?.total();
        }
    }
    Ok(total)
}

/// Regret bound with every arm's term evaluated at its own best ε.
pub fn regret_upper_bound_tightest(
    form: BoundForm,
    family: RewardFamily,
    means: &[f64],
    c: f64,
    horizon: u64,
) -> Result<f64> {
    Ok(regret_upper_bound_curve(form, family, means, c, &[horizon])?[0])
}

/// [`regret_upper_bound_tightest`] at each of `horizons`. The `Σ t^(-2c)`
/// term is shared by all arms, so it is evaluated once per horizon.
pub fn regret_upper_bound_curve(
    form: BoundForm,
    family: RewardFamily,
    means: &[f64],
    c: f64,
    horizons: &[u64],
) -> Result<Vec<f64>> {
    for &mu in means {
        family.mean(mu)?;
    }
    check_c(c)?;
    let mu_star = best_mean(means);
    let grid = epsilon_grid(EPSILON_GRID_POINTS);
    let arms = means
        .iter()
        .filter(|&&mu| mu < mu_star)
        .map(|&mu| Ok((mu_star - mu, check_arm(family, mu_star, mu, c)?)))
        .collect::<Result<Vec<_>>>()?;
    horizons
        .iter()
        .map(|&horizon| {
            check_horizon(horizon)?;
            let series = p_series(2.0 * c, horizon);
            let mut total = 0.0;
            for &(gap, h2) in &arms {
                let (_, bound) = minimize_over_grid(form, &grid, h2, c, horizon, series)?;
                total += gap * bound.total();
            }
            Ok(total)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowerBound {
    pub value: f64,
    /// Sub-optimal arms left out because `KL(μ_i, μ*)` is infinite.
    pub skipped: Vec<usize>,
}

/// Asymptotic lower bound `Σ_i Δ_i log T / KL(μ_i, μ*)`.
///
/// A guide for large `T`, not a finite-time guarantee.
pub fn regret_lower_bound(family: RewardFamily, means: &[f64], horizon: f64) -> Result<LowerBound> {
    if !(horizon >= 1.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "horizon",
            value: horizon,
        });
    }
    let mu_star = best_mean(means);
    let log_t = math::ln(horizon);
    let mut value = 0.0;
    let mut skipped = Vec::new();
    for (arm, &mu) in means.iter().enumerate() {
        if mu >= mu_star {
            continue;
        }
        let kl = kl_div(family, mu, mu_star)?;
        if kl.is_finite() {
            value += (mu_star - mu) * log_t / kl;
        } else {
            skipped.push(arm);
        }
    }
    Ok(LowerBound { value, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_matches_pointwise_tightest() {
        let means = [0.01, 0.02, 0.05, 0.1];
        let horizons = [1, 10, 1000, 12345];
        for form in [BoundForm::Simplified, BoundForm::Derived] {
            let curve =
                regret_upper_bound_curve(form, RewardFamily::Bernoulli, &means, 0.26, &horizons)
                    .unwrap();
            for (&t, &value) in horizons.iter().zip(&curve) {
                let mut expected = 0.0;
                for &mu in &means[..3] {
                    let (_, b) = best_epsilon_on(
                        form,
                        &epsilon_grid(EPSILON_GRID_POINTS),
                        RewardFamily::Bernoulli,
                        0.1,
                        mu,
                        0.26,
                        t,
                    )
                    .unwrap();
                    expected += (0.1 - mu) * b.total();
                }
                assert_eq!(value, expected);
            }
        }
        assert!(regret_upper_bound_curve(
            BoundForm::Simplified,
            RewardFamily::Bernoulli,
            &[0.2, 0.2],
            0.1,
            &[5]
        )
        .is_err());
        assert_eq!(
            regret_upper_bound_curve(
                BoundForm::Simplified,
                RewardFamily::Bernoulli,
                &[0.2, 0.2],
                0.3,
                &[5]
            )
            .unwrap(),
            [0.0]
        );
    }

    use approx::{assert_abs_diff_eq, assert_relative_eq};

    use RewardFamily::{Bernoulli, Poisson};

    #[test]
    fn constants_positive() {
        for &eps in &[1e-3, 0.1, 1.0, 10.0] {
            for &(star, mu) in &[(0.1, 0.05), (0.9, 0.1), (0.5, 0.49)] {
                let k = BoundConstants::new(Bernoulli, star, mu, 0.26, eps).unwrap();
                assert!(k.c1 > 0.0 && k.c2 > 0.0);
            }
            let k = BoundConstants::new(Poisson, 3.0, 0.1, 0.5, eps).unwrap();
            assert!(k.c1 > 0.0 && k.c2 > 0.0);
        }
    }

    #[test]
    fn horizon_one() {
        let b = expected_pulls_bound(Bernoulli, 0.1, 0.05, 0.26, 0.1, 1).unwrap();
        assert_eq!(b.leading, 0.0);
        let h2 = hellinger_sq(Bernoulli, 0.1, 0.05).unwrap();
        let expected = b.constants.c1 + 1.0 + (-2.0 * h2).exp() / (1.0 - (-2.0 * h2).exp());
        assert_relative_eq!(b.total(), expected, max_relative = 1e-12);
    }

    #[test]
    fn literal_transcription() {
        // Each term evaluated straight from the formula with std floats.
        let (star, mu, c, eps, t) = (0.1f64, 0.05f64, 0.26f64, 0.1f64, 10_000u64);
        let h2 = 1.0 - ((1.0 - star) * (1.0 - mu)).sqrt() - (star * mu).sqrt();
        let c1 = -c / (1.0 - h2 / (1.0 + eps)).ln();
        let c2 = ((1.0 + eps).sqrt() - 1.0).powi(2) / (1.0 + eps);
        let series: f64 = (1..=t).map(|s| (s as f64).powf(-2.0 * c)).sum();
        let expected = -c * (t as f64).ln() / (1.0 - h2 / (1.0 + eps)).ln()
            + c1 / (t as f64).powf(c2)
            + series
            + (-2.0 * h2).exp() / (1.0 - (-2.0 * h2).exp());
        let b = expected_pulls_bound(Bernoulli, star, mu, c, eps, t).unwrap();
        assert_relative_eq!(b.total(), expected, max_relative = 1e-10);
    }

    #[test]
    fn derived_form() {
        let (star, mu, c, eps, t) = (0.1, 0.05, 0.3, 2.0, 5_000u64);
        let b =
            expected_pulls_bound_with(BoundForm::Derived, Bernoulli, star, mu, c, eps, t).unwrap();
        let k = b.constants;
        let expected =
            1.0 / (k.c2 * k.hellinger_sq) / (t as f64).powf(2.0 * k.c1 * k.c2 * k.hellinger_sq);
        assert_relative_eq!(b.transient, expected, max_relative = 1e-12);
    }

    #[test]
    fn monotone_in_horizon() {
        for form in [BoundForm::Simplified, BoundForm::Derived] {
            let a =
                expected_pulls_bound_with(form, Bernoulli, 0.1, 0.05, 0.26, 0.1, 10_000).unwrap();
            let b =
                expected_pulls_bound_with(form, Bernoulli, 0.1, 0.05, 0.26, 0.1, 100_000).unwrap();
            assert!(a.total() <= b.total());
        }
    }

    #[test]
    fn rejects_optimal_arm() {
        assert!(matches!(
            expected_pulls_bound(Bernoulli, 0.1, 0.1, 0.26, 0.1, 10),
            Err(Error::NotSuboptimal { .. })
        ));
        assert!(expected_pulls_bound(Bernoulli, 0.1, 0.2, 0.26, 0.1, 10).is_err());
        assert!(expected_pulls_bound(Bernoulli, 0.1, 0.05, 0.2, 0.1, 10).is_err());
        assert!(expected_pulls_bound(Bernoulli, 0.1, 0.05, 0.26, 0.0, 10).is_err());
        assert!(expected_pulls_bound(Bernoulli, 0.1, 0.05, 0.26, 0.1, 0).is_err());
    }

    #[test]
    fn regret_bound_examples() {
        assert_eq!(
            regret_upper_bound(Bernoulli, &[0.3, 0.3, 0.3], 0.26, 0.1, 1000).unwrap(),
            0.0
        );
        let single = regret_upper_bound(Bernoulli, &[0.05, 0.1], 0.26, 0.1, 1000).unwrap();
        let pulls = expected_pulls_bound(Bernoulli, 0.1, 0.05, 0.26, 0.1, 1000).unwrap();
        assert_relative_eq!(single, 0.05 * pulls.total(), max_relative = 1e-15);
    }

    #[test]
    fn lower_bound_examples() {
        let one = regret_lower_bound(Bernoulli, &[0.4], 100.0).unwrap();
        assert_eq!(one.value, 0.0);
        let lb = regret_lower_bound(Bernoulli, &[0.1, 0.05], core::f64::consts::E).unwrap();
        let kl = kl_div(Bernoulli, 0.05, 0.1).unwrap();
        assert_relative_eq!(lb.value, 0.05 / kl, max_relative = 1e-14);

        let skipped = regret_lower_bound(Bernoulli, &[0.5, 1.0, 0.2], 100.0).unwrap();
        assert_eq!(skipped.skipped, vec![0, 2]);
        assert_eq!(skipped.value, 0.0);
    }

    #[test]
    fn lower_below_upper() {
        let means = crate::sim::BERNOULLI_REFERENCE_MEANS;
        let t = 1_000_000u64;
        let lower = regret_lower_bound(Bernoulli, &means, t as f64)
            .unwrap()
            .value;
        let upper =
            regret_upper_bound_tightest(BoundForm::Simplified, Bernoulli, &means, 0.26, t).unwrap();
        assert!(lower <= upper, "{lower} > {upper}");
    }

    #[test]
    fn best_epsilon_properties() {
        let (eps, best) = best_epsilon(Bernoulli, 0.1, 0.05, 0.26, 10_000).unwrap();
        let at_one = expected_pulls_bound(Bernoulli, 0.1, 0.05, 0.26, 1.0, 10_000).unwrap();
        assert!(best.total() <= at_one.total());
        assert!(epsilon_grid(EPSILON_GRID_POINTS).contains(&eps));

        for form in [BoundForm::Simplified, BoundForm::Derived] {
            let coarse =
                best_epsilon_on(form, &epsilon_grid(100), Bernoulli, 0.1, 0.05, 0.26, 10_000)
                    .unwrap();
            let fine = best_epsilon_on(
                form,
                &epsilon_grid(1000),
                Bernoulli,
                0.1,
                0.05,
                0.26,
                10_000,
            )
            .unwrap();
            let change = (coarse.1.total() - fine.1.total()).abs() / fine.1.total();
            assert!(change < 0.01, "{form:?}: {change}");
        }
    }

    #[test]
    fn p_series_exact_and_bracketed() {
        assert_eq!(p_series(0.52, 1).value, 1.0);
        // Harmonic partial sums: log(T+1) < H_T ≤ log T + 1.
        for t in [10u64, 1000, 1_000_000, 50_000_000] {
            let s = p_series(1.0, t);
            let tf = t as f64;
            assert!(
                (tf + 1.0).ln() < s.lower && s.upper <= tf.ln() + 1.0,
                "{t}: {s:?}"
            );
        }
        let s = p_series(1.0, 50_000_000);
        assert!(s.width() > 0.0 && s.width() < 1e-6);
        // For 2c > 1 the tail beyond 10^5 is below the ∫ bound 10^(5(1-2c)) / (2c-1).
        let c = 0.6;
        let gap = p_series(2.0 * c, 1_000_000).value - p_series(2.0 * c, 100_000).value;
        assert!(gap <= 1e5f64.powf(1.0 - 2.0 * c) / (2.0 * c - 1.0));
        assert_abs_diff_eq!(
            p_series(2.0, 1_000_000).value,
            core::f64::consts::PI.powi(2) / 6.0,
            epsilon = 2e-6
        );
    }
}
