//! User-facing health check: the index closed forms against bisection, the
//! two Hellinger formulas against each other, the divergence inequalities,
//! and a Monte-Carlo run of the KL deviation inequality.

use hellinger_ucb::concentration::tail_frequency;
use hellinger_ucb::index::{
    hellinger_index_bernoulli_perturbed, hellinger_index_generic, hellinger_index_poisson,
};
use hellinger_ucb::reward::{hellinger_sq, hellinger_sq_from_cumulant, kl_div, tvd};
use hellinger_ucb::seed;
use hellinger_ucb::RewardFamily;
use rand::Rng;

pub const INDEX_TOLERANCE: f64 = 1e-8;
pub const IDENTITY_TOLERANCE: f64 = 1e-12;
pub const INEQUALITY_TOLERANCE: f64 = 1e-12;
pub const INEQUALITY_SAMPLES: usize = 10_000;
pub const CONCENTRATION_TRIALS: u64 = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SelfcheckOptions {
    /// Relative change applied to the linear coefficient of the Bernoulli
    /// closed form. Non-zero only for negative-control runs.
    pub perturb_quadratic: f64,
    pub seed: u64,
}

pub fn run_selfcheck(options: SelfcheckOptions) -> Vec<CheckOutcome> {
    let mut out = vec![
        bernoulli_closed_form(options.perturb_quadratic),
        poisson_closed_form(),
        cumulant_agreement(),
    ];
    for family in [RewardFamily::Bernoulli, RewardFamily::Poisson] {
        out.push(inequalities(family, options.seed));
    }
    out.push(concentration(options.seed));
    out
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    // Weighted form so both endpoints are hit exactly.
    (0..n).map(move |i| {
        let f = i as f64 / (n - 1) as f64;
        lo * (1.0 - f) + hi * f
    })
}

fn logspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    linspace(lo.ln(), hi.ln(), n).map(f64::exp)
}

/// 100 × 100 `(p̂, radius)` pairs: `p̂` evenly covers `[0, 1]`, the radius is
/// 0 or log-spaced up to 1.
pub fn bernoulli_index_grid() -> Vec<(f64, f64)> {
    let radii: Vec<f64> = std::iter::once(0.0)
        .chain(logspace(1e-6, 1.0, 99))
        .collect();
    linspace(0.0, 1.0, 100)
        .flat_map(|p| radii.iter().map(move |&r| (p, r)))
        .collect()
}

/// 100 × 100 `(λ̂, radius)` pairs with `λ̂ ∈ {0} ∪ [1e-4, 50]` and radius in
/// `{0} ∪ [1e-6, 0.999]`.
pub fn poisson_index_grid() -> Vec<(f64, f64)> {
    let radii: Vec<f64> = std::iter::once(0.0)
        .chain(logspace(1e-6, 0.999, 99))
        .collect();
    std::iter::once(0.0)
        .chain(logspace(1e-4, 50.0, 99))
        .flat_map(|l| radii.iter().map(move |&r| (l, r)))
        .collect()
}

fn bernoulli_closed_form(perturbation: f64) -> CheckOutcome {
    let mut worst = (0.0, 0.0, 0.0);
    for (p, r) in bernoulli_index_grid() {
        let closed = hellinger_index_bernoulli_perturbed(p, r, perturbation);
        let generic = hellinger_index_generic(RewardFamily::Bernoulli, p, r);
        let err = (closed - generic).abs();
        if err.is_nan() || err > worst.0 {
            worst = (err, p, r);
        }
    }
    CheckOutcome {
        name: "bernoulli-index-closed-form",
        passed: worst.0 <= INDEX_TOLERANCE,
        detail: format!(
            "max |closed - bisection| = {:e} at p = {}, radius = {} (tolerance {:e})",
            worst.0, worst.1, worst.2, INDEX_TOLERANCE
        ),
    }
}

fn poisson_closed_form() -> CheckOutcome {
    let mut worst = (0.0, 0.0, 0.0);
    for (l, r) in poisson_index_grid() {
        let closed = hellinger_index_poisson(l, -(-r).ln_1p());
        let generic = hellinger_index_generic(RewardFamily::Poisson, l, r);
        let err = (closed - generic).abs();
        if err.is_nan() || err > worst.0 {
            worst = (err, l, r);
        }
    }
    CheckOutcome {
        name: "poisson-index-closed-form",
        passed: worst.0 <= INDEX_TOLERANCE,
        detail: format!(
            "max |closed - bisection| = {:e} at lambda = {}, radius = {} (tolerance {:e})",
            worst.0, worst.1, worst.2, INDEX_TOLERANCE
        ),
    }
}

fn cumulant_agreement() -> CheckOutcome {
    let grid: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
    let mut worst = 0.0f64;
    for &a in &grid {
        for &b in &grid {
            let direct = hellinger_sq(RewardFamily::Bernoulli, a, b).unwrap_or(f64::NAN);
            let cumulant =
                hellinger_sq_from_cumulant(RewardFamily::Bernoulli, a, b).unwrap_or(f64::NAN);
            let err = (direct - cumulant).abs();
            if err.is_nan() || err > worst {
                worst = err;
            }
        }
    }
    CheckOutcome {
        name: "hellinger-cumulant-identity",
        passed: worst <= IDENTITY_TOLERANCE,
        detail: format!("max |direct - cumulant| = {worst:e} over 100x100 Bernoulli means"),
    }
}

/// Counts of each inequality's violations over random mean triples.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct InequalityViolations {
    /// `2 H² ≤ KL`
    pub pinsker_type: usize,
    /// `-log(1 - H²(a, b)) ≤ KL(b, a) / 2` (and with the arguments swapped)
    pub log_affinity: usize,
    /// `H(a, c) ≤ H(a, b) + H(b, c)` for `H = √H²`
    pub triangle: usize,
    /// `H² ≤ TVD`
    pub total_variation: usize,
}

impl InequalityViolations {
    pub fn total(&self) -> usize {
        self.pinsker_type + self.log_affinity + self.triangle + self.total_variation
    }
}

fn sample_mean<R: Rng>(family: RewardFamily, rng: &mut R) -> f64 {
    match family {
        RewardFamily::Bernoulli => match rng.random_range(0..40) {
            0 => 0.0,
            1 => 1.0,
            _ => rng.random::<f64>(),
        },
        RewardFamily::Poisson => match rng.random_range(0..40) {
            0 => 0.0,
            _ => 10.0 * rng.random::<f64>(),
        },
    }
}

/// Checks the inequalities on `samples` random triples; every quantity is
/// computed through the public, validated API.
pub fn inequality_violations(
    family: RewardFamily,
    samples: usize,
    seed: u64,
) -> InequalityViolations {
    let mut rng = seed::stream(seed::derive_seed(&[seed, family as u64]), 0);
    let mut v = InequalityViolations::default();
    let exceeds = |lhs: f64, rhs: f64| lhs > rhs + INEQUALITY_TOLERANCE;
    for _ in 0..samples {
        let a = sample_mean(family, &mut rng);
        let b = sample_mean(family, &mut rng);
        let c = sample_mean(family, &mut rng);
        let h2 = |x, y| hellinger_sq(family, x, y).expect("sampled means are valid");
        let kl = |x, y| kl_div(family, x, y).expect("sampled means are valid");
        let h2_ab = h2(a, b);
        if exceeds(2.0 * h2_ab, kl(a, b)) || exceeds(2.0 * h2_ab, kl(b, a)) {
            v.pinsker_type += 1;
        }
        let log_affinity = -(-h2_ab).ln_1p();
        if exceeds(log_affinity, 0.5 * kl(b, a)) || exceeds(log_affinity, 0.5 * kl(a, b)) {
            v.log_affinity += 1;
        }
        if exceeds(h2(a, c).sqrt(), h2_ab.sqrt() + h2(b, c).sqrt()) {
            v.triangle += 1;
        }
        if exceeds(h2_ab, tvd(family, a, b).expect("sampled means are valid")) {
            v.total_variation += 1;
        }
    }
    v
}

fn inequalities(family: RewardFamily, seed: u64) -> CheckOutcome {
    let v = inequality_violations(family, INEQUALITY_SAMPLES, seed);
    CheckOutcome {
        name: match family {
            RewardFamily::Bernoulli => "bernoulli-divergence-inequalities",
            RewardFamily::Poisson => "poisson-divergence-inequalities",
        },
        passed: v.total() == 0,
        detail: format!(
            "violations over {INEQUALITY_SAMPLES} triples: 2H2<=KL {}, -log(1-H2)<=KL/2 {}, triangle {}, H2<=TVD {}",
            v.pinsker_type, v.log_affinity, v.triangle, v.total_variation
        ),
    }
}

fn concentration(seed: u64) -> CheckOutcome {
    let mut passed = true;
    let mut parts = Vec::new();
    for (i, mu) in [0.1, 0.5].into_iter().enumerate() {
        let run_seed = seed::derive_seed(&[seed, 0xC0, i as u64]);
        match tail_frequency(
            RewardFamily::Bernoulli,
            mu,
            100,
            2.0,
            CONCENTRATION_TRIALS,
            run_seed,
        ) {
            Ok(est) => {
                passed &= est.holds();
                parts.push(format!(
                    "mu = {mu}: frequency {} <= allowance {} (margin {})",
                    est.frequency,
                    est.allowance,
                    est.margin()
                ));
            }
            Err(e) => {
                passed = false;
                parts.push(format!("mu = {mu}: {e}"));
            }
        }
    }
    CheckOutcome {
        name: "kl-concentration",
        passed,
        detail: format!(
            "n = 100, f(n) = 2, {CONCENTRATION_TRIALS} trials; {}",
            parts.join("; ")
        ),
    }
}
