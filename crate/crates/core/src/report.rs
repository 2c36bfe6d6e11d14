//! CSV output. Column order and names are part of the output contract.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::SweepCell;
use crate::market::StepOutcome;

pub const RESULTS_HEADER: &str = "experiment,instance,policy,T,M,K,replications,mean_regret,stderr_regret,\
mean_refund,refund_portion,mean_drops,phase_count_max,master_seed";
pub const TRACE_HEADER: &str = "t,price_index,price,demand,gross_reward,instant_refund,net_revenue";
pub const REVENUE_HEADER: &str =
    "experiment,instance,policy,T,M,K,replications,mean_revenue,stderr_revenue,oracle_revenue,master_seed";

/// A sweep cell tagged with the experiment (or figure series) it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub cell: SweepCell,
}

#[derive(Serialize)]
struct ResultRecord<'a> {
    experiment: &'a str,
    instance: &'a str,
    policy: String,
    #[serde(rename = "T")]
    horizon: u64,
    #[serde(rename = "M")]
    protection_period: u64,
    #[serde(rename = "K")]
    k: usize,
    replications: u64,
    mean_regret: f64,
    stderr_regret: f64,
    mean_refund: f64,
    refund_portion: Option<f64>,
    mean_drops: f64,
    phase_count_max: usize,
    master_seed: u64,
}

#[derive(Serialize)]
struct RevenueRecord<'a> {
    experiment: &'a str,
    instance: &'a str,
    policy: String,
    #[serde(rename = "T")]
    horizon: u64,
    #[serde(rename = "M")]
    protection_period: u64,
    #[serde(rename = "K")]
    k: usize,
    replications: u64,
    mean_revenue: f64,
    stderr_revenue: f64,
    oracle_revenue: f64,
    master_seed: u64,
}

#[derive(Serialize)]
struct TraceRecord {
    t: u64,
    /// 1-based, as in the price grid `p_1 < ... < p_K`.
    price_index: usize,
    price: f64,
    demand: f64,
    gross_reward: f64,
    instant_refund: f64,
    net_revenue: f64,
}

fn encode<T: Serialize>(header: &str, records: impl IntoIterator<Item = T>) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for r in records {
        w.serialize(r)?;
    }
    let body = w.into_inner().map_err(|e| Error::Csv(e.into_error().into()))?;
    let body = String::from_utf8(body).expect("csv output is utf-8");
    Ok(format!("{header}\n{body}"))
}

pub fn results_csv(rows: &[ResultRow]) -> Result<String> {
    encode(
        RESULTS_HEADER,
        rows.iter().map(|r| ResultRecord {
            experiment: &r.experiment,
            instance: &r.cell.instance_key,
            policy: r.cell.policy.to_string(),
            horizon: r.cell.horizon,
            protection_period: r.cell.protection_period,
            k: r.cell.k,
            replications: r.cell.replications,
            mean_regret: r.cell.mean_regret,
            stderr_regret: r.cell.stderr_regret,
            mean_refund: r.cell.mean_refund,
            refund_portion: r.cell.refund_portion,
            mean_drops: r.cell.mean_drops,
            phase_count_max: r.cell.phase_count_max,
            master_seed: r.cell.master_seed,
        }),
    )
}

/// Mean net revenue per cell next to the oracle's `T * max lambda`.
pub fn revenue_csv(rows: &[ResultRow]) -> Result<String> {
    encode(
        REVENUE_HEADER,
        rows.iter().map(|r| RevenueRecord {
            experiment: &r.experiment,
            instance: &r.cell.instance_key,
            policy: r.cell.policy.to_string(),
            horizon: r.cell.horizon,
            protection_period: r.cell.protection_period,
            k: r.cell.k,
            replications: r.cell.replications,
            mean_revenue: r.cell.mean_revenue,
            // Regret is the oracle constant minus revenue.
            stderr_revenue: r.cell.stderr_regret,
            oracle_revenue: r.cell.mean_revenue + r.cell.mean_regret,
            master_seed: r.cell.master_seed,
        }),
    )
}

pub fn trace_csv(trace: &[StepOutcome]) -> Result<String> {
    encode(
        TRACE_HEADER,
        trace.iter().map(|o| TraceRecord {
            t: o.step,
            price_index: o.price_index + 1,
            price: o.price,
            demand: o.demand,
            gross_reward: o.gross_reward,
            instant_refund: o.instant_refund,
            net_revenue: o.net_revenue,
        }),
    )
}

/// Writes `contents` to `path`, creating parent directories.
pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    let io = |source| Error::Io {
        path: path.display().to_string(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    fs::write(path, contents).map_err(io)
}
