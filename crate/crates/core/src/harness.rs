//! Single episodes and Monte Carlo sweeps.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::market::{oracle_revenue, Instance, Market};
use crate::policy::PolicyKind;
use crate::rng::{demand_stream, policy_stream};
use crate::stats::{mean_stderr, CompensatedSum};
use crate::trace::Trace;

/// Identifies the random streams of one replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ReplicationSeed {
    pub master: u64,
    pub replication: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunResult {
    /// Net revenue: gross rewards minus refunds.
    pub revenue: f64,
    pub refund: f64,
    pub gross: f64,
    /// `T * max_k lambda_k - revenue`; may be negative on a single run.
    pub regret_sample: f64,
    pub price_drop_steps: usize,
    pub phase_count: usize,
    pub seed: ReplicationSeed,
}

/// Plays one full episode of `policy` on `instance`.
pub fn run_once(
    instance: &Instance,
    protection_period: u64,
    policy: PolicyKind,
    horizon: u64,
    seed: ReplicationSeed,
    trace: bool,
) -> Result<(RunResult, Option<Trace>)> {
    if horizon < instance.k() as u64 {
        return Err(Error::Config(format!(
            "horizon {horizon} shorter than the {} prices",
            instance.k()
        )));
    }
    let mut agent = policy.build(instance, horizon, protection_period)?;
    let mut market = Market::new(
        instance,
        horizon,
        protection_period,
        demand_stream(seed.master, seed.replication),
        trace,
    );
    let mut rng = policy_stream(seed.master, seed.replication);
    let mut drops = 0;
    let mut previous = f64::NAN;
    for _ in 0..horizon {
        let k = agent.select(market.ledger(), &mut rng);
        let outcome = market.step(k)?;
        agent.observe(k, outcome.gross_reward, &mut rng);
        if outcome.price < previous {
            drops += 1;
        }
        previous = outcome.price;
    }
    let gross = market.gross_revenue();
    let refund = market.ledger().cumulative_refund();
    let revenue = gross - refund;
    let result = RunResult {
        revenue,
        refund,
        gross,
        regret_sample: oracle_revenue(instance, horizon) - revenue,
        price_drop_steps: drops,
        phase_count: agent.phase_count(),
        seed,
    };
    Ok((result, market.into_trace()))
}

/// One cell of a sweep: a policy on an instance at fixed `T` and `M`.
#[derive(Debug, Clone)]
pub struct CellSpec<'a> {
    pub instance_key: String,
    pub instance: &'a Instance,
    pub policy: PolicyKind,
    pub horizon: u64,
    pub protection_period: u64,
    pub replications: u64,
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub policy: PolicyKind,
    pub instance_key: String,
    pub horizon: u64,
    pub protection_period: u64,
    pub k: usize,
    pub replications: u64,
    pub mean_regret: f64,
    pub stderr_regret: f64,
    pub mean_refund: f64,
    pub mean_revenue: f64,
    /// `mean_refund / mean_regret`, only when `mean_regret > 0`.
    pub refund_portion: Option<f64>,
    pub mean_drops: f64,
    pub phase_count_max: usize,
    pub master_seed: u64,
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Runs every replication of a cell; results are in replication order
/// whatever the thread count.
pub fn run_replications(cell: &CellSpec<'_>, threads: usize) -> Result<Vec<RunResult>> {
    if cell.replications == 0 {
        return Err(Error::Config("replications must be at least 1".into()));
    }
    pool(threads)?.install(|| {
        (0..cell.replications)
            .into_par_iter()
            .map(|replication| {
                let seed = ReplicationSeed {
                    master: cell.master_seed,
                    replication,
                };
                run_once(cell.instance, cell.protection_period, cell.policy, cell.horizon, seed, false)
                    .map(|(r, _)| r)
            })
            .collect()
    })
}

/// Reduces replication results, in the order given, to a sweep cell.
pub fn summarize(cell: &CellSpec<'_>, runs: &[RunResult]) -> SweepCell {
    let regrets: Vec<f64> = runs.iter().map(|r| r.regret_sample).collect();
    let (mean_regret, stderr_regret) = mean_stderr(&regrets);
    let n = runs.len() as f64;
    let mean_of = |f: fn(&RunResult) -> f64| runs.iter().map(f).collect::<CompensatedSum>().value() / n;
    let mean_refund = mean_of(|r| r.refund);
    SweepCell {
        policy: cell.policy,
        instance_key: cell.instance_key.clone(),
        horizon: cell.horizon,
        protection_period: cell.protection_period,
        k: cell.instance.k(),
        replications: runs.len() as u64,
        mean_regret,
        stderr_regret,
        mean_refund,
        mean_revenue: mean_of(|r| r.revenue),
        refund_portion: (mean_regret > 0.0).then(|| mean_refund / mean_regret),
        mean_drops: mean_of(|r| r.price_drop_steps as f64),
        phase_count_max: runs.iter().map(|r| r.phase_count).max().unwrap_or(0),
        master_seed: cell.master_seed,
    }
}

pub fn run_mc(cell: &CellSpec<'_>, threads: usize) -> Result<SweepCell> {
    let runs = run_replications(cell, threads)?;
    Ok(summarize(cell, &runs))
}
