//! Simulation of dynamic pricing under price protection.
//!
//! A seller posts one price per step from a fixed grid. Every purchase is
//! protected for `M` steps: if the price drops below what the buyer paid,
//! the seller refunds the difference. The crate provides the refund ledger,
//! the market environment, learning policies, named instances, and a
//! Monte Carlo harness that aggregates regret and refund statistics.

pub mod config;
pub mod error;
pub mod figures;
pub mod harness;
pub mod instances;
pub mod ledger;
pub mod market;
pub mod policy;
pub mod report;
pub mod rng;
pub mod stats;
pub mod trace;
pub mod verify;

pub use config::{run_experiment, write_experiment, ExperimentConfig, ExperimentOutput};
pub use error::{Error, Result};
pub use harness::{run_mc, run_once, run_replications, CellSpec, ReplicationSeed, RunResult, SweepCell};
pub use instances::{build as build_instance, InstanceParams, MRule};
pub use ledger::RefundLedger;
pub use market::{DemandModel, Instance, Market, StepOutcome};
pub use policy::{Policy, PolicyKind};
