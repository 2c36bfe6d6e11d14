//! Declarative experiment sweeps.
//!
//! A config names one instance preset, a list of policies and a grid of
//! horizons; every (policy, T) pair becomes one row of `results.csv`.
//!
//! ```json
//! {
//!   "name": "blooper_demo",
//!   "instance": { "key": "blooper", "params": {} },
//!   "policies": ["ucb", "ts"],
//!   "t_grid": [1000, 2000, 3000],
//!   "m_rule": "t_div_5",
//!   "replications": 500,
//!   "master_seed": 1,
//!   "output_dir": "out/blooper",
//!   "trace_samples": 1
//! }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{run_mc, run_once, CellSpec, ReplicationSeed};
use crate::instances::{self, InstanceParams, MRule};
use crate::market::Instance;
use crate::policy::PolicyKind;
use crate::report::{results_csv, trace_csv, write_text, ResultRow};
use crate::trace::Trace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceRef {
    pub key: String,
    #[serde(default)]
    pub params: InstanceParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub instance: InstanceRef,
    pub policies: Vec<PolicyKind>,
    pub t_grid: Vec<u64>,
    /// Overrides the preset's own rule (and `instance.params.m_rule`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_rule: Option<MRule>,
    pub replications: u64,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    /// Replications whose full trace is written, at the largest `T`.
    #[serde(default)]
    pub trace_samples: u64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::Config("`name` is empty".into()));
        }
        if self.policies.is_empty() {
            return Err(Error::Config("`policies` is empty".into()));
        }
        if self.t_grid.is_empty() {
            return Err(Error::Config("`t_grid` is empty".into()));
        }
        if self.t_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("`t_grid` must be strictly ascending".into()));
        }
        if self.replications == 0 {
            return Err(Error::Config("`replications` must be at least 1".into()));
        }
        if self.trace_samples > self.replications {
            return Err(Error::Config("`trace_samples` exceeds `replications`".into()));
        }
        self.build_cells().map(|_| ())
    }

    fn params(&self) -> InstanceParams {
        let mut params = self.instance.params.clone();
        if self.m_rule.is_some() {
            params.m_rule = self.m_rule;
        }
        params
    }

    /// Instance and protection period for every horizon of the grid.
    fn build_cells(&self) -> Result<Vec<(u64, Instance, u64)>> {
        let params = self.params();
        let cells = self
            .t_grid
            .iter()
            .map(|&t| instances::build(&self.instance.key, t, &params).map(|(inst, m)| (t, inst, m)))
            .collect::<Result<Vec<_>>>()?;
        for &policy in &self.policies {
            let (t, inst, m) = &cells[0];
            policy.build(inst, *t, *m)?;
        }
        Ok(cells)
    }
}

/// Everything an experiment produces, in output order.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
    /// `(policy, replication, trace)` at the largest horizon.
    pub traces: Vec<(PolicyKind, u64, Trace)>,
}

/// Runs every cell of the sweep; rows are ordered by policy, then `T`.
pub fn run_experiment(config: &ExperimentConfig, threads: usize) -> Result<ExperimentOutput> {
    let cells = config.build_cells()?;
    let mut rows = Vec::new();
    let mut traces = Vec::new();
    for &policy in &config.policies {
        for (t, inst, m) in &cells {
            let spec = CellSpec {
                instance_key: config.instance.key.clone(),
                instance: inst,
                policy,
                horizon: *t,
                protection_period: *m,
                replications: config.replications,
                master_seed: config.master_seed,
            };
            rows.push(ResultRow {
                experiment: config.name.clone(),
                cell: run_mc(&spec, threads)?,
            });
        }
        let (t, inst, m) = cells.last().expect("validated non-empty grid");
        for replication in 0..config.trace_samples {
            let seed = ReplicationSeed {
                master: config.master_seed,
                replication,
            };
            let (_, trace) = run_once(inst, *m, policy, *t, seed, true)?;
            traces.push((policy, replication, trace.expect("trace requested")));
        }
    }
    Ok(ExperimentOutput { rows, traces })
}

/// Writes `results.csv` and the `trace_<policy>_<rep>.csv` files.
pub fn write_experiment(output: &ExperimentOutput, dir: &Path) -> Result<()> {
    write_text(&dir.join("results.csv"), &results_csv(&output.rows)?)?;
    for (policy, replication, trace) in &output.traces {
        write_text(&dir.join(format!("trace_{policy}_{replication}.csv")), &trace_csv(trace)?)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{
        "name": "t",
        "instance": {"key": "blooper"},
        "policies": ["ucb", "ts"],
        "t_grid": [100, 200],
        "replications": 3,
        "master_seed": 5,
        "output_dir": "out",
        "trace_samples": 1
    }"#;

    fn with(field: &str, value: &str) -> String {
        let mut v: serde_json::Value = serde_json::from_str(BASE).unwrap();
        v[field] = serde_json::from_str(value).unwrap();
        v.to_string()
    }

    #[test]
    fn parses_and_runs() {
        let config = ExperimentConfig::from_json(BASE).unwrap();
        let out = run_experiment(&config, 1).unwrap();
        assert_eq!(out.rows.len(), 4);
        assert_eq!(out.rows[0].cell.protection_period, 20);
        assert_eq!(out.rows[3].cell.policy, PolicyKind::Ts);
        assert_eq!(out.traces.len(), 2);
        assert_eq!(out.traces[1].2.len(), 200);
    }

    #[test]
    fn m_rule_override() {
        let config = ExperimentConfig::from_json(&with("m_rule", "0")).unwrap();
        let out = run_experiment(&config, 1).unwrap();
        assert!(out.rows.iter().all(|r| r.cell.protection_period == 0 && r.cell.mean_refund == 0.0));
    }

    #[test]
    fn schema_violations() {
        for (field, value) in [
            ("policies", "[]"),
            ("policies", r#"["greedy"]"#),
            ("t_grid", "[200, 100]"),
            ("t_grid", "[5]"),
            ("replications", "0"),
            ("instance", r#"{"key": "nope"}"#),
            ("instance", r#"{"key": "blooper", "params": {"zeta": 1}}"#),
            ("m_rule", r#""cube""#),
            ("surprise", "1"),
        ] {
            let err = ExperimentConfig::from_json(&with(field, value)).unwrap_err();
            assert!(err.is_config(), "{field}: {err}");
        }
        let leap_on_three = with("instance", r#"{"key": "cost_of_pp"}"#).replace(r#""ucb""#, r#""leap""#);
        assert!(ExperimentConfig::from_json(&leap_on_three).is_err());
    }
}
