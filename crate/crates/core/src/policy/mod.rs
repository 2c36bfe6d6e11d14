//! Pricing policies.
//!
//! A policy picks a price index each step and is told the gross reward that
//! price earned. Policies that account for refunds read the live
//! [`RefundLedger`]; nothing else about the market is visible to them.

mod baseline;
mod leap;
mod leap_pp;

use std::fmt;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ledger::RefundLedger;
use crate::market::Instance;

pub use baseline::{
    ts_pp_select, ts_select, ucb_index, ucb_pp_select, ucb_select, Alternate, BetaPosteriorState, CountMeanState,
    FixedPrice, ThompsonSampling, TsPp, Ucb, UcbPp,
};
pub use leap::{Leap, LeapMulti, LeapSchedule};
pub use leap_pp::{LeapPlusPlus, Regime};

pub trait Policy: Send {
    /// Price index (0-based) to post at the next step.
    fn select(&mut self, ledger: &RefundLedger, rng: &mut ChaCha8Rng) -> usize;

    /// Feedback for the step just played.
    fn observe(&mut self, price_index: usize, gross_reward: f64, rng: &mut ChaCha8Rng);

    /// Phases entered so far; 1 for policies without phase structure.
    fn phase_count(&self) -> usize {
        1
    }
}

/// Policy names as they appear in experiment configs and CSV output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PolicyKind {
    Ucb,
    Ts,
    UcbPp,
    TsPp,
    Leap,
    LeapMulti,
    LeapPp,
    /// Always posts the best price of the instance.
    Oracle,
    /// Always posts price `k` (1-based in its name, `fixed_<k>`).
    Fixed(usize),
    /// Cycles through the prices in index order.
    Alternate,
}

impl PolicyKind {
    pub fn build(self, instance: &Instance, horizon: u64, protection_period: u64) -> Result<Box<dyn Policy>> {
        let k = instance.k();
        let prices = instance.prices().to_vec();
        Ok(match self {
            PolicyKind::Ucb => Box::new(Ucb::new(k, horizon)),
            PolicyKind::Ts => Box::new(ThompsonSampling::new(k)),
            PolicyKind::UcbPp => Box::new(UcbPp::new(prices, horizon)),
            PolicyKind::TsPp => Box::new(TsPp::new(prices)),
            PolicyKind::Leap => {
                if k != 2 {
                    return Err(Error::PolicyPrecondition {
                        policy: self.to_string(),
                        reason: format!("needs exactly 2 prices, instance has {k}"),
                    });
                }
                Box::new(Leap::new(horizon, protection_period))
            }
            PolicyKind::LeapMulti => Box::new(LeapMulti::new(k, horizon)),
            PolicyKind::LeapPp => Box::new(LeapPlusPlus::new(k, horizon, protection_period)),
            PolicyKind::Oracle => Box::new(FixedPrice::new(instance.optimal_index())),
            PolicyKind::Fixed(i) => {
                if i == 0 || i > k {
                    return Err(Error::PriceIndexOutOfRange { index: i, k });
                }
                Box::new(FixedPrice::new(i - 1))
            }
            PolicyKind::Alternate => Box::new(Alternate::new(k)),
        })
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyKind::Ucb => f.write_str("ucb"),
            PolicyKind::Ts => f.write_str("ts"),
            PolicyKind::UcbPp => f.write_str("ucb_pp"),
            PolicyKind::TsPp => f.write_str("ts_pp"),
            PolicyKind::Leap => f.write_str("leap"),
            PolicyKind::LeapMulti => f.write_str("leap_multi"),
            PolicyKind::LeapPp => f.write_str("leap_pp"),
            PolicyKind::Oracle => f.write_str("oracle"),
            PolicyKind::Fixed(k) => write!(f, "fixed_{k}"),
            PolicyKind::Alternate => f.write_str("alternate"),
        }
    }
}

impl FromStr for PolicyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "ucb" => PolicyKind::Ucb,
            "ts" => PolicyKind::Ts,
            "ucb_pp" => PolicyKind::UcbPp,
            "ts_pp" => PolicyKind::TsPp,
            "leap" => PolicyKind::Leap,
            "leap_multi" => PolicyKind::LeapMulti,
            "leap_pp" => PolicyKind::LeapPp,
            "oracle" => PolicyKind::Oracle,
            "alternate" => PolicyKind::Alternate,
            other => match other.strip_prefix("fixed_").map(str::parse::<usize>) {
                Some(Ok(k)) if k >= 1 => PolicyKind::Fixed(k),
                _ => return Err(Error::UnknownPolicy(s.to_string())),
            },
        })
    }
}

impl TryFrom<String> for PolicyKind {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PolicyKind> for String {
    fn from(p: PolicyKind) -> Self {
        p.to_string()
    }
}
