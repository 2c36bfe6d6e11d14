//! Figure presets: fixed sweeps whose CSVs feed the plotting scripts.
//!
//! | preset | files |
//! |---|---|
//! | `fig4` | `a` regret and `b` refund portion of UCB/TS on `blooper`; `c`, `d` UCB and TS traces at `T = 2000` |
//! | `fig6` | `a` regret and `b` refund portion of LEAP/UCB-PP/TS-PP on `two_price_main`, `M = ceil(sqrt T)`; `c`, `d` UCB-PP and TS-PP traces |
//! | `fig7` | as `fig6` with `M = ceil(T^(3/4))` |
//! | `fig8` | `a` regret and `b` refund of LEAP-multi/LEAP++ on `k_price_comb`, `K = 5, 7, ..., 21`, `T = 20000` |
//! | `fig9` | `a` regret of UCB/TS on `equal_means`, `T = 500..10000` |
//! | `fig10` | `a` regret and `b` revenue on `cost_of_pp`: LEAP++ with `M = round(sqrt(3T))` and `M = T`, UCB and TS with `M = 0` |
//!
//! Regret, refund and refund-portion files share the `results.csv` schema;
//! trace files share the trace schema; `fig10b` uses the revenue schema.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::harness::{run_mc, run_once, CellSpec, ReplicationSeed};
use crate::instances::{self, InstanceParams, MRule};
use crate::policy::PolicyKind;
use crate::report::{results_csv, revenue_csv, trace_csv, write_text, ResultRow};

pub const PRESETS: &[&str] = &["fig4", "fig6", "fig7", "fig8", "fig9", "fig10"];
pub const DEFAULT_REPLICATIONS: u64 = 1000;

const SAMPLE_PATH_HORIZON: u64 = 2000;

#[derive(Debug, Clone)]
pub struct FigureOptions {
    pub replications: u64,
    pub master_seed: u64,
    pub threads: usize,
    /// Replaces the preset's horizon grid; meant for smoke runs.
    pub t_grid: Option<Vec<u64>>,
}

impl Default for FigureOptions {
    fn default() -> Self {
        Self {
            replications: DEFAULT_REPLICATIONS,
            master_seed: 0,
            threads: 1,
            t_grid: None,
        }
    }
}

fn step_grid(start: u64, end: u64, step: u64) -> Vec<u64> {
    (start..=end).step_by(step as usize).collect()
}

struct Series<'a> {
    label: String,
    key: &'a str,
    params: InstanceParams,
    policy: PolicyKind,
}

fn sweep(series: &[Series<'_>], grid: &[u64], opts: &FigureOptions) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for s in series {
        for &t in grid {
            let (instance, m) = instances::build(s.key, t, &s.params)?;
            let cell = CellSpec {
                instance_key: s.key.to_string(),
                instance: &instance,
                policy: s.policy,
                horizon: t,
                protection_period: m,
                replications: opts.replications,
                master_seed: opts.master_seed,
            };
            rows.push(ResultRow {
                experiment: s.label.clone(),
                cell: run_mc(&cell, opts.threads)?,
            });
        }
    }
    Ok(rows)
}

fn sample_path(key: &str, params: &InstanceParams, policy: PolicyKind, opts: &FigureOptions) -> Result<String> {
    let (instance, m) = instances::build(key, SAMPLE_PATH_HORIZON, params)?;
    let seed = ReplicationSeed {
        master: opts.master_seed,
        replication: 0,
    };
    let (_, trace) = run_once(&instance, m, policy, SAMPLE_PATH_HORIZON, seed, true)?;
    trace_csv(&trace.expect("trace requested"))
}

fn plain<'a>(preset: &str, key: &'a str, params: &InstanceParams, policies: &[PolicyKind]) -> Vec<Series<'a>> {
    policies
        .iter()
        .map(|&policy| Series {
            label: preset.to_string(),
            key,
            params: params.clone(),
            policy,
        })
        .collect()
}

/// Runs `preset` and returns `(file name, contents)` pairs.
pub fn render_preset(preset: &str, opts: &FigureOptions) -> Result<Vec<(String, String)>> {
    let grid = |default: Vec<u64>| opts.t_grid.clone().unwrap_or(default);
    let named = |letter: char, body: String| (format!("{preset}{letter}.csv"), body);
    match preset {
        "fig4" => {
            let params = InstanceParams::default();
            let rows = sweep(
                &plain(preset, "blooper", &params, &[PolicyKind::Ucb, PolicyKind::Ts]),
                &grid(step_grid(1000, 20_000, 1000)),
                opts,
            )?;
            let table = results_csv(&rows)?;
            Ok(vec![
                named('a', table.clone()),
                named('b', table),
                named('c', sample_path("blooper", &params, PolicyKind::Ucb, opts)?),
                named('d', sample_path("blooper", &params, PolicyKind::Ts, opts)?),
            ])
        }
        "fig6" | "fig7" => {
            let rule = if preset == "fig6" { MRule::Sqrt } else { MRule::T3_4 };
            let params = InstanceParams::with_m_rule(rule);
            let policies = [PolicyKind::Leap, PolicyKind::UcbPp, PolicyKind::TsPp];
            let rows = sweep(
                &plain(preset, "two_price_main", &params, &policies),
                &grid(step_grid(1000, 20_000, 1000)),
                opts,
            )?;
            let table = results_csv(&rows)?;
            Ok(vec![
                named('a', table.clone()),
                named('b', table),
                named('c', sample_path("two_price_main", &params, PolicyKind::UcbPp, opts)?),
                named('d', sample_path("two_price_main", &params, PolicyKind::TsPp, opts)?),
            ])
        }
        "fig8" => {
            let horizon = grid(vec![20_000]);
            let mut series = Vec::new();
            for policy in [PolicyKind::LeapMulti, PolicyKind::LeapPp] {
                for k in (5..=21).step_by(2) {
                    series.push(Series {
                        label: preset.to_string(),
                        key: "k_price_comb",
                        params: InstanceParams {
                            k: Some(k),
                            ..InstanceParams::default()
                        },
                        policy,
                    });
                }
            }
            let table = results_csv(&sweep(&series, &horizon, opts)?)?;
            Ok(vec![named('a', table.clone()), named('b', table)])
        }
        "fig9" => {
            let rows = sweep(
                &plain(preset, "equal_means", &InstanceParams::default(), &[PolicyKind::Ucb, PolicyKind::Ts]),
                &grid(step_grid(500, 10_000, 500)),
                opts,
            )?;
            Ok(vec![named('a', results_csv(&rows)?)])
        }
        "fig10" => {
            let series = [
                ("leap_pp_m_sqrt_3t", PolicyKind::LeapPp, MRule::Sqrt3T),
                ("leap_pp_m_t", PolicyKind::LeapPp, MRule::T),
                ("ucb_m_0", PolicyKind::Ucb, MRule::Fixed(0)),
                ("ts_m_0", PolicyKind::Ts, MRule::Fixed(0)),
            ]
            .into_iter()
            .map(|(label, policy, rule)| Series {
                label: format!("{preset}_{label}"),
                key: "cost_of_pp",
                params: InstanceParams::with_m_rule(rule),
                policy,
            })
            .collect::<Vec<_>>();
            let rows = sweep(&series, &grid(step_grid(1000, 20_000, 1000)), opts)?;
            Ok(vec![named('a', results_csv(&rows)?), named('b', revenue_csv(&rows)?)])
        }
        other => Err(Error::UnknownPreset(other.to_string())),
    }
}

/// Runs `preset` and writes its CSVs into `out_dir`; returns the paths.
pub fn write_preset(preset: &str, opts: &FigureOptions, out_dir: &Path) -> Result<Vec<PathBuf>> {
    render_preset(preset, opts)?
        .into_iter()
        .map(|(name, body)| {
            let path = out_dir.join(name);
            write_text(&path, &body).map(|_| path)
        })
        .collect()
}
