//! Named problem instances.
//!
//! Every preset returns its instance together with the protection period
//! `M` it is meant to run with. `M` comes from an [`MRule`]; each preset has
//! a default rule and accepts an override through [`InstanceParams`].
//!
//! | key | prices | demand | default `M` |
//! |---|---|---|---|
//! | `blooper` | 1/4, 1 | Bernoulli(2/3), Bernoulli(1/2) | `round(T/5)` |
//! | `equal_means` | 1/2, 2/3 | Bernoulli(2/3), Bernoulli(1/2) | `ceil(sqrt T)` |
//! | `two_price_main` | 1/3, 1 | 1, Bernoulli(1/6) | `ceil(sqrt T)` |
//! | `k_price_comb` | `1/3 + 2(k-1)/(3K-3)` | reward mean 1/3 (odd k) or 1/4 (even k) | `round(T^(7/12) K^(5/12))` |
//! | `cost_of_pp` | 1/3, 2/3, 1 | 1, Bernoulli(1/3), Bernoulli(1/4) | `round(sqrt(3T))` |
//! | `ucb_alternate` | 1/2, 1 | rewards `a -+ T^(-3/2)/4`, equal means | `ceil(sqrt T)` |
//! | `lb_case2_{1,2}` | 1/2, 3/4 | see [`lower_bound_pair`] | `ceil(T^(7/12))` |
//! | `lb_case3_{1,2}` | 1/2, 3/4 | see [`lower_bound_pair`] | `T` |
//! | `lb_k_price_{i}` | 1/2, then 3/4..1 | see [`lower_bound_k`] | by regime |
//! | `custom` | from `instance` | from `instance` | `ceil(sqrt T)` |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{DemandModel, Instance};

/// How the protection period is derived from `T` (and `K`).
///
/// Rules the paper writes with a ceiling use one; the others round to the
/// nearest integer, at least 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "MRuleRepr", into = "MRuleRepr")]
pub enum MRule {
    /// `ceil(sqrt T)`
    Sqrt,
    /// `ceil(T^(3/4))`
    T3_4,
    /// `round(T/5)`
    TDiv5,
    /// `round(sqrt(3T))`
    Sqrt3T,
    /// `T`
    T,
    /// `round(T^(7/12) K^(5/12))`
    T7_12K5_12,
    /// `ceil(T^(7/12))`
    T7_12,
    /// A fixed value; 0 disables protection.
    Fixed(u64),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum MRuleRepr {
    Value(u64),
    Name(String),
}

impl TryFrom<MRuleRepr> for MRule {
    type Error = Error;
    fn try_from(r: MRuleRepr) -> Result<Self> {
        match r {
            MRuleRepr::Value(m) => Ok(MRule::Fixed(m)),
            MRuleRepr::Name(s) => s.parse(),
        }
    }
}

impl From<MRule> for MRuleRepr {
    fn from(r: MRule) -> Self {
        match r {
            MRule::Fixed(m) => MRuleRepr::Value(m),
            other => MRuleRepr::Name(other.to_string()),
        }
    }
}

impl fmt::Display for MRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MRule::Sqrt => f.write_str("sqrt"),
            MRule::T3_4 => f.write_str("t3_4"),
            MRule::TDiv5 => f.write_str("t_div_5"),
            MRule::Sqrt3T => f.write_str("sqrt_3t"),
            MRule::T => f.write_str("t"),
            MRule::T7_12K5_12 => f.write_str("t7_12_k5_12"),
            MRule::T7_12 => f.write_str("t7_12"),
            MRule::Fixed(m) => write!(f, "{m}"),
        }
    }
}

impl FromStr for MRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "sqrt" => MRule::Sqrt,
            "t3_4" => MRule::T3_4,
            "t_div_5" => MRule::TDiv5,
            "sqrt_3t" => MRule::Sqrt3T,
            "t" => MRule::T,
            "t7_12_k5_12" => MRule::T7_12K5_12,
            "t7_12" => MRule::T7_12,
            "none" => MRule::Fixed(0),
            other => match other.parse::<u64>() {
                Ok(m) => MRule::Fixed(m),
                Err(_) => return Err(Error::Config(format!("unknown M rule `{other}`"))),
            },
        })
    }
}

/// Smallest `m` with `m^q >= n^p`, i.e. `ceil(n^(p/q))`, computed exactly.
fn ceil_root(n: u64, p: u32, q: u32) -> u64 {
    let target = (n as u128).pow(p);
    let mut m = (n as f64).powf(p as f64 / q as f64).ceil() as u128;
    while m > 0 && (m - 1).pow(q) >= target {
        m -= 1;
    }
    while m.pow(q) < target {
        m += 1;
    }
    m as u64
}

fn round_at_least_one(x: f64) -> u64 {
    (x.round() as u64).max(1)
}

impl MRule {
    pub fn evaluate(self, horizon: u64, k: usize) -> u64 {
        let t = horizon as f64;
        match self {
            MRule::Sqrt => ceil_root(horizon, 1, 2),
            MRule::T3_4 => ceil_root(horizon, 3, 4),
            MRule::TDiv5 => round_at_least_one(t / 5.0),
            MRule::Sqrt3T => round_at_least_one((3.0 * t).sqrt()),
            MRule::T => horizon,
            MRule::T7_12K5_12 => round_at_least_one(t.powf(7.0 / 12.0) * (k as f64).powf(5.0 / 12.0)),
            MRule::T7_12 => ceil_root(horizon, 7, 12),
            MRule::Fixed(m) => m,
        }
    }
}

/// Which lower-bound regime a construction targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LowerBoundRegime {
    /// Intermediate `M`: perturbation `eps * K^(1/2) * M^(-1/2)`.
    Case2,
    /// Large `M`: perturbation `eps * K^(1/3) * T^(-1/3)`.
    Case3,
}

/// Optional knobs; each preset reads the ones it understands.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_rule: Option<MRule>,
    /// Number of prices (`k_price_comb`, `lb_k_price_*`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Perturbation scale of the lower-bound constructions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Common mean reward of `ucb_alternate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    /// Deterministic demand at the lowest price of the lower-bound presets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regime: Option<LowerBoundRegime>,
    /// The instance for key `custom`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<Instance>,
}

impl InstanceParams {
    pub fn with_m_rule(m_rule: MRule) -> Self {
        Self {
            m_rule: Some(m_rule),
            ..Self::default()
        }
    }
}

pub const PRESET_KEYS: &[&str] = &[
    "blooper",
    "equal_means",
    "two_price_main",
    "k_price_comb",
    "cost_of_pp",
    "ucb_alternate",
    "lb_case2_1",
    "lb_case2_2",
    "lb_case3_1",
    "lb_case3_2",
    "lb_k_price_<i>",
    "custom",
];

const LB_PRICES: [f64; 2] = [0.5, 0.75];
const LB_EPSILON: f64 = 1.0 / 8.0;
const LB_K_EPSILON: f64 = 1.0 / 10.0;
const LB_DEFAULT_K: usize = 5;
const COMB_DEFAULT_K: usize = 9;

/// Demand at price `p` whose reward is 1/3 or 2/3 with the given mean.
fn third_rewards(p: f64, mean_reward: f64) -> DemandModel {
    DemandModel::TwoPoint {
        lo: 1.0 / (3.0 * p),
        hi: 2.0 / (3.0 * p),
        prob_hi: (mean_reward - 1.0 / 3.0) * 3.0,
    }
}

fn check_prob(name: &str, q: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&q) {
        Ok(q)
    } else {
        Err(Error::InvalidInstance(format!("{name} = {q} outside [0, 1]")))
    }
}

/// Two-price lower-bound pair.
///
/// Price 1/2 earns a deterministic `r1 = p1 * mu1`, by default
/// `1/2 + delta`. Price 3/4 earns 1/3 or 2/3 with mean `r1 - delta` in
/// instance 1 and `r1 + delta` in instance 2, where `delta` is
/// `eps * M^(-1/2)` (case 2) or `eps * T^(-1/3)` (case 3).
pub fn lower_bound_pair(
    regime: LowerBoundRegime,
    which: u8,
    horizon: u64,
    protection_period: u64,
    epsilon: f64,
    mu1: Option<f64>,
) -> Result<Instance> {
    let delta = match regime {
        LowerBoundRegime::Case2 => epsilon / (protection_period.max(1) as f64).sqrt(),
        LowerBoundRegime::Case3 => epsilon * (horizon as f64).powf(-1.0 / 3.0),
    };
    let [p1, p2] = LB_PRICES;
    let mu1 = mu1.unwrap_or((0.5 + delta) / p1);
    let r1 = p1 * mu1;
    let r2 = if which == 1 { r1 - delta } else { r1 + delta };
    check_prob("reward mean at the high price", (r2 - 1.0 / 3.0) * 3.0)?;
    Instance::new(
        LB_PRICES.to_vec(),
        vec![DemandModel::PointMass { demand: mu1 }, third_rewards(p2, r2)],
    )
}

/// `K`-price lower-bound family, member `i` (1-based).
///
/// Prices are `p_1 = 1/2` and `p_k = 3/4 + (k-2)/(4(K-2))` for `k >= 2`.
/// Price 1 earns a deterministic `r1` (default `1/2 + delta`); every other
/// price earns 1/3 or 2/3 with mean `r1 - delta`, except price `i >= 2`,
/// whose mean is `r1 + delta`. `delta` is `eps K^(1/2) M^(-1/2)` (case 2) or
/// `eps K^(1/3) T^(-1/3)` (case 3).
pub fn lower_bound_k(
    regime: LowerBoundRegime,
    k: usize,
    which: usize,
    horizon: u64,
    protection_period: u64,
    epsilon: f64,
    mu1: Option<f64>,
) -> Result<Instance> {
    if k < 2 || which == 0 || which > k {
        return Err(Error::InvalidInstance(format!(
            "lower-bound member {which} of a {k}-price family"
        )));
    }
    let kf = k as f64;
    let delta = match regime {
        LowerBoundRegime::Case2 => epsilon * kf.sqrt() / (protection_period.max(1) as f64).sqrt(),
        LowerBoundRegime::Case3 => epsilon * kf.cbrt() * (horizon as f64).powf(-1.0 / 3.0),
    };
    let prices: Vec<f64> = (1..=k)
        .map(|j| match j {
            1 => 0.5,
            _ if k == 2 => 0.75,
            _ => 0.75 + (j - 2) as f64 / (4.0 * (kf - 2.0)),
        })
        .collect();
    let mu1 = mu1.unwrap_or((0.5 + delta) / prices[0]);
    let r1 = prices[0] * mu1;
    let mut models = vec![DemandModel::PointMass { demand: mu1 }];
    for (j, &p) in prices.iter().enumerate().skip(1) {
        let r = if j + 1 == which { r1 + delta } else { r1 - delta };
        check_prob("reward mean", (r - 1.0 / 3.0) * 3.0)?;
        models.push(third_rewards(p, r));
    }
    Instance::new(prices, models)
}

/// Builds the preset `key` for horizon `T`, returning it with its `M`.
pub fn build(key: &str, horizon: u64, params: &InstanceParams) -> Result<(Instance, u64)> {
    if horizon < 10 {
        return Err(Error::Config(format!("horizon {horizon} below the minimum of 10")));
    }
    let rule = |default: MRule| params.m_rule.unwrap_or(default);
    let m = |default: MRule, k: usize| rule(default).evaluate(horizon, k);
    let bernoulli = |q: f64| DemandModel::Bernoulli { q };

    match key {
        "blooper" => {
            let inst = Instance::new(vec![0.25, 1.0], vec![bernoulli(2.0 / 3.0), bernoulli(0.5)])?;
            Ok((inst, m(MRule::TDiv5, 2)))
        }
        "equal_means" => {
            let inst = Instance::new(vec![0.5, 2.0 / 3.0], vec![bernoulli(2.0 / 3.0), bernoulli(0.5)])?;
            Ok((inst, m(MRule::Sqrt, 2)))
        }
        "two_price_main" => {
            let inst = Instance::new(
                vec![1.0 / 3.0, 1.0],
                vec![DemandModel::PointMass { demand: 1.0 }, bernoulli(1.0 / 6.0)],
            )?;
            Ok((inst, m(MRule::Sqrt, 2)))
        }
        "k_price_comb" => {
            let k = params.k.unwrap_or(COMB_DEFAULT_K);
            if k < 3 || k % 2 == 0 {
                return Err(Error::InvalidInstance(format!("k_price_comb needs odd K >= 3, got {k}")));
            }
            let prices: Vec<f64> = (1..=k)
                .map(|j| 1.0 / 3.0 + 2.0 * (j - 1) as f64 / (3.0 * k as f64 - 3.0))
                .collect();
            let models = prices
                .iter()
                .enumerate()
                .map(|(i, &p)| bernoulli(if i % 2 == 0 { 1.0 / (3.0 * p) } else { 1.0 / (4.0 * p) }))
                .collect();
            Ok((Instance::new(prices, models)?, m(MRule::T7_12K5_12, k)))
        }
        "cost_of_pp" => {
            let inst = Instance::new(
                vec![1.0 / 3.0, 2.0 / 3.0, 1.0],
                vec![DemandModel::PointMass { demand: 1.0 }, bernoulli(1.0 / 3.0), bernoulli(0.25)],
            )?;
            Ok((inst, m(MRule::Sqrt3T, 3)))
        }
        "ucb_alternate" => {
            let a = params.a.unwrap_or(0.5);
            let half_width = (horizon as f64).powf(-1.5) / 4.0;
            if a - half_width < 0.0 || a + half_width > 1.0 {
                return Err(Error::InvalidInstance(format!("ucb_alternate mean {a} leaves [0, 1]")));
            }
            let prices = vec![0.5, 1.0];
            let models = prices
                .iter()
                .map(|&p| DemandModel::TwoPoint {
                    lo: (a - half_width) / p,
                    hi: (a + half_width) / p,
                    prob_hi: 0.5,
                })
                .collect();
            Ok((Instance::new(prices, models)?, m(MRule::Sqrt, 2)))
        }
        "custom" => {
            let inst = params
                .instance
                .clone()
                .ok_or_else(|| Error::Config("key `custom` needs an `instance` parameter".into()))?;
            let m = m(MRule::Sqrt, inst.k());
            Ok((inst, m))
        }
        _ => {
            if let Some((regime, which)) = parse_pair_key(key) {
                let m = m(
                    match regime {
                        LowerBoundRegime::Case2 => MRule::T7_12,
                        LowerBoundRegime::Case3 => MRule::T,
                    },
                    2,
                );
                let eps = params.epsilon.unwrap_or(LB_EPSILON);
                return Ok((lower_bound_pair(regime, which, horizon, m, eps, params.mu1)?, m));
            }
            if let Some(which) = key.strip_prefix("lb_k_price_").and_then(|s| s.parse::<usize>().ok()) {
                let k = params.k.unwrap_or(LB_DEFAULT_K);
                let regime = params.regime.unwrap_or(LowerBoundRegime::Case2);
                let m = m(
                    match regime {
                        LowerBoundRegime::Case2 => MRule::T7_12K5_12,
                        LowerBoundRegime::Case3 => MRule::T,
                    },
                    k,
                );
                let eps = params.epsilon.unwrap_or(LB_K_EPSILON);
                return Ok((lower_bound_k(regime, k, which, horizon, m, eps, params.mu1)?, m));
            }
            Err(Error::UnknownInstance(key.to_string()))
        }
    }
}

fn parse_pair_key(key: &str) -> Option<(LowerBoundRegime, u8)> {
    match key {
        "lb_case2_1" => Some((LowerBoundRegime::Case2, 1)),
        "lb_case2_2" => Some((LowerBoundRegime::Case2, 2)),
        "lb_case3_1" => Some((LowerBoundRegime::Case3, 1)),
        "lb_case3_2" => Some((LowerBoundRegime::Case3, 2)),
        _ => None,
    }
}
