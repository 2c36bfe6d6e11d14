//! Self-checks run by `ppsim verify`: the refund ledger against a
//! brute-force oracle, accounting identities, and structural properties of
//! the policies on small instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::harness::{run_once, ReplicationSeed};
use crate::instances::{self, InstanceParams};
use crate::ledger::{brute_force_refund, settled_revenue, RefundLedger};
use crate::policy::PolicyKind;
use crate::trace::switch_census;

pub const LEDGER_EPISODES: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Result of one randomized ledger comparison pass.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LedgerAudit {
    pub episodes: usize,
    pub steps: usize,
    pub max_refund_deviation: f64,
    pub max_identity_deviation: f64,
    pub max_hypothetical_deviation: f64,
    pub structure_violations: usize,
}

const GRID: [f64; 6] = [0.1, 0.25, 0.4, 0.5, 0.75, 1.0];

/// Replays random episodes through ledgers made by `make` and compares each
/// instantaneous refund with [`brute_force_refund`].
pub fn audit_ledger(episodes: usize, seed: u64, make: impl Fn(u64) -> RefundLedger) -> LedgerAudit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut audit = LedgerAudit {
        episodes,
        ..LedgerAudit::default()
    };
    for _ in 0..episodes {
        let m = rng.random_range(0..=12u64);
        let len = rng.random_range(1..=60usize);
        let continuous = rng.random_bool(0.3);
        let mut ledger = make(m);
        let mut prices = Vec::with_capacity(len);
        let mut demands = Vec::with_capacity(len);
        let mut refunds = 0.0;
        let mut gross = 0.0;
        for t in 1..=len {
            let price = if continuous {
                rng.random::<f64>()
            } else {
                GRID[rng.random_range(0..GRID.len())]
            };
            let demand = match rng.random_range(0..3) {
                0 => 0.0,
                1 => 1.0,
                _ => rng.random::<f64>() * 2.0,
            };
            let hypothetical = ledger.hypothetical_refund(price).expect("valid price");
            let refund = ledger.apply_price(price, demand).expect("valid step");
            prices.push(price);
            demands.push(demand);
            let oracle = brute_force_refund(&prices, &demands, m, t);
            audit.max_refund_deviation = audit.max_refund_deviation.max((refund - oracle).abs());
            audit.max_hypothetical_deviation = audit.max_hypothetical_deviation.max((refund - hypothetical).abs());
            let minima: Vec<f64> = ledger.groups().map(|g| g.current_min_price).collect();
            if minima.windows(2).any(|w| w[0] >= w[1]) || ledger.open_purchases() as u64 > m {
                audit.structure_violations += 1;
            }
            refunds += refund;
            gross += price * demand;
            audit.steps += 1;
        }
        let settled = settled_revenue(&prices, &demands, m);
        audit.max_identity_deviation = audit.max_identity_deviation.max((gross - refunds - settled).abs());
    }
    audit
}

fn check(name: &'static str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome { name, passed, detail }
}

fn ledger_checks(audit: &LedgerAudit) -> Vec<CheckOutcome> {
    vec![
        check(
            "ledger matches brute-force refund",
            audit.max_refund_deviation <= 1e-12,
            format!(
                "{} episodes, {} steps, max |deviation| = {:e}",
                audit.episodes, audit.steps, audit.max_refund_deviation
            ),
        ),
        check(
            "revenue decomposition identity",
            audit.max_identity_deviation <= 1e-9,
            format!("max |gross - refunds - settled| = {:e}", audit.max_identity_deviation),
        ),
        check(
            "hypothetical refund equals applied refund",
            audit.max_hypothetical_deviation == 0.0,
            format!("max |deviation| = {:e}", audit.max_hypothetical_deviation),
        ),
        check(
            "ledger groups ascending, window within M",
            audit.structure_violations == 0,
            format!("{} violating steps", audit.structure_violations),
        ),
    ]
}

fn episode_checks() -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    let policies = [
        PolicyKind::Ucb,
        PolicyKind::Ts,
        PolicyKind::UcbPp,
        PolicyKind::TsPp,
        PolicyKind::LeapMulti,
        PolicyKind::LeapPp,
        PolicyKind::Alternate,
    ];
    let horizon = 3000;
    let mut identity = 0.0f64;
    let mut nondeterministic = Vec::new();
    let mut refund_off_drop = 0usize;
    for key in ["blooper", "two_price_main", "cost_of_pp"] {
        let (inst, m) = instances::build(key, horizon, &InstanceParams::default()).expect("preset");
        let mut all = policies.to_vec();
        if inst.k() == 2 {
            all.push(PolicyKind::Leap);
        }
        for policy in all {
            let seed = ReplicationSeed {
                master: 11,
                replication: 0,
            };
            let (a, trace) = run_once(&inst, m, policy, horizon, seed, true).expect("episode");
            let (b, _) = run_once(&inst, m, policy, horizon, seed, false).expect("episode");
            identity = identity.max((a.revenue + a.refund - a.gross).abs());
            if a != b {
                nondeterministic.push(format!("{key}/{policy}"));
            }
            let trace = trace.expect("trace");
            refund_off_drop += trace
                .windows(2)
                .filter(|w| w[1].instant_refund > 0.0 && w[1].price >= w[0].price)
                .count();
        }
    }
    out.push(check(
        "episode accounting identity",
        identity <= 1e-9,
        format!("max |revenue + refund - gross| = {identity:e}"),
    ));
    out.push(check(
        "episodes deterministic per seed",
        nondeterministic.is_empty(),
        if nondeterministic.is_empty() {
            "all policies reproducible".into()
        } else {
            nondeterministic.join(", ")
        },
    ));
    out.push(check(
        "refunds only on price drops",
        refund_off_drop == 0,
        format!("{refund_off_drop} refunds without a drop"),
    ));

    let (inst, m) = instances::build("k_price_comb", 20_000, &InstanceParams::default()).expect("preset");
    let mut worst = i64::MIN;
    for replication in 0..5 {
        let seed = ReplicationSeed { master: 3, replication };
        let (r, trace) = run_once(&inst, m, PolicyKind::LeapPp, 20_000, seed, true).expect("episode");
        let drops = switch_census(&trace.expect("trace")).price_drop_steps;
        worst = worst.max(drops as i64 - (r.phase_count as i64 - 1));
    }
    out.push(check(
        "LEAP++ drops at most once per phase boundary",
        worst <= 0,
        format!("max drops - (phases - 1) = {worst}"),
    ));
    out
}

/// All checks with the ledger built by `make`.
pub fn run_checks_with(make: impl Fn(u64) -> RefundLedger) -> Vec<CheckOutcome> {
    let audit = audit_ledger(LEDGER_EPISODES, 2024, make);
    let mut out = ledger_checks(&audit);
    out.extend(episode_checks());
    out
}

pub fn run_checks() -> Vec<CheckOutcome> {
    run_checks_with(RefundLedger::new)
}

/// Formats outcomes as an aligned pass/fail table.
pub fn format_table(outcomes: &[CheckOutcome]) -> String {
    let width = outcomes.iter().map(|o| o.name.len()).max().unwrap_or(0);
    outcomes
        .iter()
        .map(|o| {
            format!(
                "{}  {:width$}  {}\n",
                if o.passed { "PASS" } else { "FAIL" },
                o.name,
                o.detail
            )
        })
        .collect()
}
