use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hellinger_ucb::bounds::BoundForm;
use hellinger_ucb::index::DEFAULT_C_HELLINGER;
use hellinger_ucb::{IndexRule, RewardFamily};

use crate::config::{parse_means, parse_policies, ConfigLayer};

#[derive(Debug, Parser)]
#[command(
    name = "hellinger-ucb",
    version,
    about = "Hellinger-UCB bandit experiments, bounds and ranking tools"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a regret experiment and write CSV tables plus a manifest.
    Simulate(SimulateArgs),
    /// Evaluate the pull-count and regret bounds at the best epsilon.
    Bound(BoundArgs),
    /// Time the cold-start ranker on a synthetic snapshot.
    RankBench(RankBenchArgs),
    /// Rank a `id,impressions,clicks` snapshot.
    Rank(RankArgs),
    /// Compare policies on shared synthetic click traffic.
    Traffic(TrafficArgs),
    /// Run the numerical self-checks; exits 2 if any fails.
    Selfcheck(SelfcheckArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSON config file, or a manifest.json from an earlier run.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Bundled instance: bernoulli-paper or poisson-paper.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub family: Option<RewardFamily>,
    /// Comma-separated arm means.
    #[arg(long, value_parser = parse_means)]
    pub means: Option<::std::vec::Vec<f64>>,
    /// Comma-separated subset of hellinger_ucb, kl_ucb, ucb1.
    #[arg(long, value_parser = parse_policies)]
    pub policies: Option<::std::vec::Vec<IndexRule>>,
    #[arg(long)]
    pub horizon: Option<u64>,
    #[arg(long)]
    pub epochs: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub c_hellinger: Option<f64>,
    #[arg(long)]
    pub c_kl_loglog: Option<f64>,
    /// Whether to write bounds.csv.
    #[arg(long)]
    pub bounds: Option<bool>,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

impl SimulateArgs {
    pub fn layer(&self) -> ConfigLayer {
        ConfigLayer {
            preset: self.preset.clone(),
            family: self.family,
            means: self.means.clone(),
            policies: self.policies.clone(),
            horizon: self.horizon,
            epochs: self.epochs,
            master_seed: self.seed,
            c_hellinger: self.c_hellinger,
            c_kl_loglog: self.c_kl_loglog,
            bounds: self.bounds,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum FormArg {
    /// Transient term `C1 / T^C2`.
    #[default]
    Simplified,
    /// Transient term `(C2 H²)^-1 / T^(2 C1 C2 H²)`.
    Derived,
}

impl From<FormArg> for BoundForm {
    fn from(f: FormArg) -> Self {
        match f {
            FormArg::Simplified => BoundForm::Simplified,
            FormArg::Derived => BoundForm::Derived,
        }
    }
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long, conflicts_with = "preset")]
    pub family: Option<RewardFamily>,
    /// Mean of the optimal arm (single-arm mode, with --mu-i).
    #[arg(long, requires = "mu_i", conflicts_with_all = ["means", "preset"])]
    pub mu_star: Option<f64>,
    /// Mean of the sub-optimal arm (single-arm mode, with --mu-star).
    #[arg(long, requires = "mu_star")]
    pub mu_i: Option<f64>,
    /// Comma-separated arm means (instance mode).
    #[arg(long, value_parser = parse_means, conflicts_with = "preset")]
    pub means: Option<::std::vec::Vec<f64>>,
    #[arg(long, default_value_t = DEFAULT_C_HELLINGER)]
    pub c_hellinger: f64,
    #[arg(long, default_value_t = 10_000)]
    pub horizon: u64,
    #[arg(long, value_enum, default_value_t = FormArg::Simplified)]
    pub form: FormArg,
    /// Also write the table to this CSV file.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RankBenchArgs {
    #[arg(long, default_value_t = 10_000)]
    pub num_arms: usize,
    #[arg(long, default_value_t = 50)]
    pub k: usize,
    #[arg(long, default_value_t = 1_000)]
    pub repetitions: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_C_HELLINGER)]
    pub c_hellinger: f64,
    /// Median latency budget in milliseconds.
    #[arg(long, default_value_t = 10.0)]
    pub budget_ms: f64,
    /// Directory for latency.csv and manifest.json.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    /// CSV with header `id,impressions,clicks`.
    #[arg(long)]
    pub stats: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub k: usize,
    /// Logical clock; defaults to total impressions plus one.
    #[arg(long)]
    pub t: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_C_HELLINGER)]
    pub c_hellinger: f64,
    /// Write the ranking here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrafficArgs {
    #[arg(long, default_value_t = 50)]
    pub arms: usize,
    #[arg(long, default_value_t = 30_000)]
    pub horizon: u64,
    #[arg(long, value_parser = parse_policies, default_value = "hellinger_ucb,kl_ucb,ucb1")]
    pub policies: ::std::vec::Vec<IndexRule>,
    /// First seed; seeds `seed .. seed + seeds` are run.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
    #[arg(long, default_value_t = DEFAULT_C_HELLINGER)]
    pub c_hellinger: f64,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SelfcheckArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Negative control: scale the Bernoulli closed form's linear coefficient.
    #[arg(long, hide = true, default_value_t = 0.0)]
    pub perturb_quadratic: f64,
}
