use std::io::Write;
use std::path::Path;

use hellinger_ucb::bounds::{
    best_epsilon_on, epsilon_grid, regret_lower_bound, regret_upper_bound_curve, BoundForm,
    PullBound, EPSILON_GRID_POINTS,
};
use hellinger_ucb::ranker::{
    rank_top_k, score, synthetic_ctrs, traffic_compare_with_ctrs, ContentStats,
};
use hellinger_ucb::sim::checkpoints;
use hellinger_ucb::{ExperimentResult, IndexRule, PolicyConfig, RewardFamily};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::args::{
    BoundArgs, Cli, Command, RankArgs, RankBenchArgs, SelfcheckArgs, SimulateArgs, TrafficArgs,
};
use crate::bench::{clock, full_sort_top_k, latency_bench};
use crate::config::{ConfigLayer, SimulateConfig};
use crate::error::{CliError, Result};
use crate::output::{num, Manifest, Staging, Table};
use crate::runner::{pool, run_experiment_parallel, threads_from_env};
use crate::selfcheck::{run_selfcheck, SelfcheckOptions};

/// Runs one parsed command, writing its report to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => simulate(&args, out),
        Command::Bound(args) => bound(&args, out),
        Command::RankBench(args) => rank_bench(&args, out),
        Command::Rank(args) => rank(&args, out),
        Command::Traffic(args) => traffic(&args, out),
        Command::Selfcheck(args) => selfcheck(&args, out),
    }
}

fn report(out: &mut dyn Write, text: std::fmt::Arguments) -> Result<()> {
    out.write_fmt(text)
        .and_then(|_| out.write_all(b"\n"))
        .map_err(|e| CliError::io("<stdout>", e))
}

macro_rules! say {
    ($out:expr, $($arg:tt)*) => { report($out, format_args!($($arg)*)) };
}

pub fn resolve_simulate(args: &SimulateArgs) -> Result<SimulateConfig> {
    let file = match &args.config {
        Some(path) => ConfigLayer::from_file(path)?,
        None => ConfigLayer::default(),
    };
    file.overlay(args.layer()).resolve()
}

/// Mean and quantile curves, final regrets, pull counts and (optionally) the
/// bound curves of a finished experiment.
pub fn simulate_tables(
    config: &SimulateConfig,
    result: &ExperimentResult,
) -> Result<Vec<(&'static str, Table)>> {
    let names: Vec<&str> = config.policies.iter().map(|r| r.name()).collect();
    let curve = |pick: fn(&hellinger_ucb::PolicySummary) -> &Vec<f64>| {
        let mut table = Table::new(std::iter::once("t").chain(names.iter().copied()));
        for (i, t) in result.timesteps.iter().enumerate() {
            let mut row = vec![t.to_string()];
            row.extend(result.policies.iter().map(|p| num(pick(p)[i])));
            table.push(row);
        }
        table
    };
    let mut tables = vec![
        ("regret_mean.csv", curve(|p| &p.mean_regret)),
        ("regret_q25.csv", curve(|p| &p.q25_regret)),
        ("regret_q75.csv", curve(|p| &p.q75_regret)),
    ];
    let mut finals = Table::new(["policy", "epoch", "regret"]);
    let mut pulls = Table::new(["policy", "arm", "mean_pulls"]);
    for (name, summary) in names.iter().zip(&result.policies) {
        for (epoch, regret) in summary.final_regrets.iter().enumerate() {
            finals.push(vec![name.to_string(), epoch.to_string(), num(*regret)]);
        }
        for (arm, n) in summary.mean_pulls.iter().enumerate() {
            pulls.push(vec![name.to_string(), arm.to_string(), num(*n)]);
        }
    }
    tables.push(("final_regret.csv", finals));
    tables.push(("pulls.csv", pulls));
    if config.bounds {
        let upper = regret_upper_bound_curve(
            BoundForm::Simplified,
            config.family,
            &config.means,
            config.c_hellinger,
            &result.timesteps,
        )?;
        let mut bounds = Table::new(["t", "upper_bound", "lower_bound"]);
        for (&t, u) in result.timesteps.iter().zip(upper) {
            let lower = regret_lower_bound(config.family, &config.means, t as f64)?.value;
            bounds.push(vec![t.to_string(), num(u), num(lower)]);
        }
        tables.push(("bounds.csv", bounds));
    }
    Ok(tables)
}

fn simulate(args: &SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let config = resolve_simulate(args)?;
    let instance = config.instance()?;
    let pool = pool(threads_from_env()?)?;
    let result = run_experiment_parallel(
        &pool,
        &instance,
        &config.policy_configs(),
        config.horizon,
        config.epochs,
        config.master_seed,
    )?;
    let tables = simulate_tables(&config, &result)?;
    let mut staging = Staging::new(&args.out_dir)?;
    for (name, table) in &tables {
        staging.write_table(name, table)?;
    }
    let seed = config.master_seed;
    staging.publish(Manifest::new("simulate", &config, seed))?;
    say!(
        out,
        "{} instance, {} arms, T = {}, {} epochs, seed {}",
        config.family,
        instance.arms(),
        config.horizon,
        config.epochs,
        seed
    )?;
    for summary in &result.policies {
        say!(
            out,
            "{:<14} mean final regret {:>12.3}",
            summary.config.rule.name(),
            summary.mean_regret.last().copied().unwrap_or(0.0)
        )?;
    }
    say!(
        out,
        "wrote {} files to {}",
        tables.len() + 1,
        args.out_dir.display()
    )
}

/// One row of the `bound` table.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub arm: usize,
    pub mu_i: f64,
    pub mu_star: f64,
    pub epsilon: f64,
    pub bound: PullBound,
}

pub fn bound_rows(
    form: BoundForm,
    family: RewardFamily,
    mu_star: f64,
    arms: &[(usize, f64)],
    c: f64,
    horizon: u64,
) -> Result<Vec<BoundRow>> {
    let grid = epsilon_grid(EPSILON_GRID_POINTS);
    arms.iter()
        .map(|&(arm, mu_i)| {
            let (epsilon, bound) = best_epsilon_on(form, &grid, family, mu_star, mu_i, c, horizon)?;
            Ok(BoundRow {
                arm,
                mu_i,
                mu_star,
                epsilon,
                bound,
            })
        })
        .collect()
}

fn bound(args: &BoundArgs, out: &mut dyn Write) -> Result<()> {
    let form = BoundForm::from(args.form);
    let (family, means, single) = match (&args.preset, &args.means, args.mu_star, args.mu_i) {
        (_, _, Some(mu_star), Some(mu_i)) => {
            let family = args.family.unwrap_or(RewardFamily::Bernoulli);
            (family, vec![mu_i, mu_star], true)
        }
        (Some(name), _, _, _) => {
            let preset = SimulateConfig::preset(name)?;
            (preset.family, preset.means, false)
        }
        (None, Some(means), _, _) => (
            args.family.unwrap_or(RewardFamily::Bernoulli),
            means.clone(),
            false,
        ),
        _ => {
            return Err(CliError::input(
                "give --mu-star and --mu-i, --means, or --preset",
            ))
        }
    };
    let mu_star = if single {
        means[1]
    } else {
        means.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    };
    let arms: Vec<(usize, f64)> = if single {
        vec![(0, means[0])]
    } else {
        means
            .iter()
            .copied()
            .enumerate()
            .filter(|&(_, mu)| mu < mu_star)
            .collect()
    };
    let rows = bound_rows(form, family, mu_star, &arms, args.c_hellinger, args.horizon)?;

    let header = [
        "arm",
        "mu_i",
        "mu_star",
        "hellinger_sq",
        "epsilon",
        "c1",
        "c2",
        "leading",
        "transient",
        "p_series",
        "tail",
        "pull_bound",
    ];
    let mut table = Table::new(header);
    for r in &rows {
        let b = &r.bound;
        table.push(vec![
            r.arm.to_string(),
            num(r.mu_i),
            num(r.mu_star),
            num(b.constants.hellinger_sq),
            num(r.epsilon),
            num(b.constants.c1),
            num(b.constants.c2),
            num(b.leading),
            num(b.transient),
            num(b.p_series.value),
            num(b.tail),
            num(b.total()),
        ]);
    }
    say!(
        out,
        "{} bound, {family}, c = {}, T = {}",
        match form {
            BoundForm::Simplified => "simplified-form",
            BoundForm::Derived => "derived-form",
        },
        args.c_hellinger,
        args.horizon
    )?;
    say!(out, "{}", header.map(|h| format!("{h:>14}")).join(""))?;
    for row in &table.rows {
        say!(
            out,
            "{}",
            row.iter()
                .map(|v| format!("{:>14}", short(v)))
                .collect::<Vec<_>>()
                .join("")
        )?;
    }
    if !single {
        let upper =
            regret_upper_bound_curve(form, family, &means, args.c_hellinger, &[args.horizon])?[0];
        let lower = regret_lower_bound(family, &means, args.horizon as f64)?;
        say!(out, "regret_upper_bound {}", num(upper))?;
        say!(out, "regret_lower_bound {}", num(lower.value))?;
        if !lower.skipped.is_empty() {
            say!(
                out,
                "lower bound skips arms with infinite KL: {:?}",
                lower.skipped
            )?;
        }
    }
    if let Some(path) = &args.csv {
        table.write(path)?;
    }
    Ok(())
}

/// Display helper: full precision is in the CSV, the terminal gets 6 significant digits.
fn short(v: &str) -> String {
    match v.parse::<f64>() {
        Ok(x) if v.contains('.') => format!("{x:.6e}"),
        _ => v.to_owned(),
    }
}

#[derive(Debug, Serialize)]
struct RankBenchConfig {
    num_arms: usize,
    k: usize,
    repetitions: usize,
    seed: u64,
    c_hellinger: f64,
    budget_ms: f64,
}

fn rank_bench(args: &RankBenchArgs, out: &mut dyn Write) -> Result<()> {
    if args.budget_ms.is_nan() || args.budget_ms <= 0.0 {
        return Err(CliError::input("--budget-ms must be positive"));
    }
    PolicyConfig::hellinger_ucb()
        .with_c_hellinger(args.c_hellinger)
        .validate()?;
    let stats = latency_bench(
        args.num_arms,
        args.k,
        args.repetitions,
        args.seed,
        args.c_hellinger,
    )?;
    let snapshot = hellinger_ucb::ranker::synthetic_stats(args.num_arms, args.seed);
    let oracle = full_sort_top_k(&snapshot, stats.t, args.c_hellinger, args.k)?;
    let matches = oracle == stats.top;
    let within = stats.median_ms < args.budget_ms;
    say!(
        out,
        "rank_top_k: {} arms, k = {}, {} calls",
        args.num_arms,
        args.k,
        args.repetitions
    )?;
    say!(
        out,
        "min {:.4} ms, median {:.4} ms, p99 {:.4} ms",
        stats.min_ms,
        stats.median_ms,
        stats.p99_ms
    )?;
    say!(
        out,
        "full-sort oracle: {}",
        if matches { "match" } else { "MISMATCH" }
    )?;
    say!(
        out,
        "budget {} ms (median): {}",
        args.budget_ms,
        if within { "PASS" } else { "FAIL" }
    )?;
    if let Some(dir) = &args.out_dir {
        let mut table = Table::new(["call", "millis"]);
        for (i, ms) in stats.samples_ms.iter().enumerate() {
            table.push(vec![i.to_string(), num(*ms)]);
        }
        let mut summary = Table::new(["statistic", "millis"]);
        summary.push(vec!["min".into(), num(stats.min_ms)]);
        summary.push(vec!["median".into(), num(stats.median_ms)]);
        summary.push(vec!["p99".into(), num(stats.p99_ms)]);
        let mut staging = Staging::new(dir)?;
        staging.write_table("latency.csv", &table)?;
        staging.write_table("latency_summary.csv", &summary)?;
        let config = RankBenchConfig {
            num_arms: args.num_arms,
            k: args.k,
            repetitions: args.repetitions,
            seed: args.seed,
            c_hellinger: args.c_hellinger,
            budget_ms: args.budget_ms,
        };
        staging.publish(Manifest::new("rank-bench", config, args.seed))?;
    }
    if !matches {
        return Err(CliError::Check(
            "partial selection differs from the full-sort ranking".into(),
        ));
    }
    if !within {
        return Err(CliError::Check(format!(
            "median latency {:.4} ms exceeds budget {} ms",
            stats.median_ms, args.budget_ms
        )));
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
struct StatsRecord {
    id: String,
    impressions: u64,
    clicks: u64,
}

/// Reads a `id,impressions,clicks` snapshot.
pub fn read_stats(path: &Path) -> Result<Vec<ContentStats<String>>> {
    let csv_err = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = reader.headers().map_err(csv_err)?;
    if header.iter().collect::<Vec<_>>() != ["id", "impressions", "clicks"] {
        return Err(CliError::input(format!(
            "{}: header must be `id,impressions,clicks`",
            path.display()
        )));
    }
    let mut stats = Vec::new();
    for (line, record) in reader.deserialize::<StatsRecord>().enumerate() {
        let record = record.map_err(csv_err)?;
        if record.id.is_empty() {
            return Err(CliError::input(format!(
                "{}: record {} has an empty id",
                path.display(),
                line + 1
            )));
        }
        stats.push(ContentStats::new(
            record.id,
            record.impressions,
            record.clicks,
        ));
    }
    Ok(stats)
}

fn rank(args: &RankArgs, out: &mut dyn Write) -> Result<()> {
    PolicyConfig::hellinger_ucb()
        .with_c_hellinger(args.c_hellinger)
        .validate()?;
    let stats = read_stats(&args.stats)?;
    let t = args.t.unwrap_or_else(|| clock(&stats));
    let ranked = rank_top_k(&stats, t, args.c_hellinger, args.k)?;
    let by_id: std::collections::HashMap<&str, &ContentStats<String>> =
        stats.iter().map(|s| (s.id.as_str(), s)).collect();
    let mut table = Table::new(["rank", "id", "impressions", "clicks", "score"]);
    for (i, id) in ranked.iter().enumerate() {
        let s = by_id[id.as_str()];
        table.push(vec![
            (i + 1).to_string(),
            id.clone(),
            s.impressions.to_string(),
            s.clicks.to_string(),
            num(score(s.impressions, s.clicks, t, args.c_hellinger)),
        ]);
    }
    match &args.out {
        Some(path) => table.write(path),
        None => table.write_to(out).map_err(|source| CliError::Csv {
            path: "<stdout>".into(),
            source,
        }),
    }
}

#[derive(Debug, Serialize)]
struct TrafficConfig<'a> {
    arms: usize,
    horizon: u64,
    policies: &'a [IndexRule],
    seed: u64,
    seeds: u64,
    c_hellinger: f64,
}

fn traffic(args: &TrafficArgs, out: &mut dyn Write) -> Result<()> {
    if args.seeds == 0 {
        return Err(CliError::input("--seeds must be at least 1"));
    }
    if args.arms < 2 {
        return Err(CliError::input("--arms must be at least 2"));
    }
    let policies: Vec<PolicyConfig> = args
        .policies
        .iter()
        .map(|&r| PolicyConfig::new(r).with_c_hellinger(args.c_hellinger))
        .collect();
    let pool = pool(threads_from_env()?)?;
    let seeds: Vec<u64> = (0..args.seeds).map(|i| args.seed.wrapping_add(i)).collect();
    let runs = pool.install(|| {
        seeds
            .par_iter()
            .map(|&seed| {
                traffic_compare_with_ctrs(
                    &synthetic_ctrs(args.arms, seed),
                    args.horizon,
                    &policies,
                    seed,
                )
            })
            .collect::<hellinger_ucb::Result<Vec<_>>>()
    })?;
    let names: Vec<&str> = args.policies.iter().map(|r| r.name()).collect();

    let mut cumulative = Table::new(std::iter::once("step").chain(names.iter().copied()));
    for t in checkpoints(1, args.horizon) {
        let mut row = vec![t.to_string()];
        row.extend(runs[0].cumulative.iter().map(|c| num(c[(t - 1) as usize])));
        cumulative.push(row);
    }
    let mut finals = Table::new(std::iter::once("seed").chain(names.iter().copied()));
    for (seed, run) in seeds.iter().zip(&runs) {
        let mut row = vec![seed.to_string()];
        row.extend(run.final_rewards().into_iter().map(num));
        finals.push(row);
    }
    let mut staging = Staging::new(&args.out_dir)?;
    staging.write_table("cumulative_reward.csv", &cumulative)?;
    staging.write_table("final_reward.csv", &finals)?;
    let config = TrafficConfig {
        arms: args.arms,
        horizon: args.horizon,
        policies: &args.policies,
        seed: args.seed,
        seeds: args.seeds,
        c_hellinger: args.c_hellinger,
    };
    staging.publish(Manifest::new("traffic", config, args.seed))?;

    say!(
        out,
        "{} arms, {} requests, {} seed(s)",
        args.arms,
        args.horizon,
        args.seeds
    )?;
    for (p, name) in names.iter().enumerate() {
        let mean = runs.iter().map(|r| r.final_rewards()[p]).sum::<f64>() / runs.len() as f64;
        say!(out, "{name:<14} mean clicks {mean:>10.2}")?;
    }
    if let Some(h) = args
        .policies
        .iter()
        .position(|&r| r == IndexRule::HellingerUcb)
    {
        for (p, name) in names.iter().enumerate().filter(|&(p, _)| p != h) {
            let wins = runs
                .iter()
                .filter(|r| {
                    let f = r.final_rewards();
                    f[h] >= f[p]
                })
                .count();
            say!(
                out,
                "hellinger_ucb >= {name} on {wins}/{} seeds",
                runs.len()
            )?;
        }
    }
    Ok(())
}

fn selfcheck(args: &SelfcheckArgs, out: &mut dyn Write) -> Result<()> {
    let outcomes = run_selfcheck(SelfcheckOptions {
        perturb_quadratic: args.perturb_quadratic,
        seed: args.seed,
    });
    for o in &outcomes {
        say!(
            out,
            "{} {}: {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.name,
            o.detail
        )?;
    }
    let failed: Vec<&str> = outcomes
        .iter()
        .filter(|o| !o.passed)
        .map(|o| o.name)
        .collect();
    if failed.is_empty() {
        say!(out, "all {} checks passed", outcomes.len())
    } else {
        Err(CliError::Check(failed.join(", ")))
    }
}
