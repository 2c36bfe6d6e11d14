//! Pricing instances and the episode environment.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ledger::RefundLedger;

/// Demand distribution at a single price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DemandModel {
    PointMass { demand: f64 },
    Bernoulli { q: f64 },
    TwoPoint { lo: f64, hi: f64, prob_hi: f64 },
}

impl DemandModel {
    pub fn mean(&self) -> f64 {
        match *self {
            DemandModel::PointMass { demand } => demand,
            DemandModel::Bernoulli { q } => q,
            DemandModel::TwoPoint { lo, hi, prob_hi } => lo + prob_hi * (hi - lo),
        }
    }

    /// Largest value in the support.
    pub fn max_demand(&self) -> f64 {
        match *self {
            DemandModel::PointMass { demand } => demand,
            DemandModel::Bernoulli { q } => {
                if q > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            DemandModel::TwoPoint { lo, hi, prob_hi } => {
                if prob_hi > 0.0 {
                    lo.max(hi)
                } else {
                    lo
                }
            }
        }
    }

    /// Smallest value in the support.
    pub fn min_demand(&self) -> f64 {
        match *self {
            DemandModel::PointMass { demand } => demand,
            DemandModel::Bernoulli { q } => {
                if q < 1.0 {
                    0.0
                } else {
                    1.0
                }
            }
            DemandModel::TwoPoint { lo, hi, prob_hi } => {
                if prob_hi < 1.0 {
                    lo.min(hi)
                } else {
                    hi
                }
            }
        }
    }

    /// Maps a uniform draw `u` in `[0, 1)` to a demand realization.
    pub fn realize(&self, u: f64) -> f64 {
        match *self {
            DemandModel::PointMass { demand } => demand,
            DemandModel::Bernoulli { q } => {
                if u < q {
                    1.0
                } else {
                    0.0
                }
            }
            DemandModel::TwoPoint { lo, hi, prob_hi } => {
                if u < prob_hi {
                    hi
                } else {
                    lo
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let prob_ok = |p: f64| (0.0..=1.0).contains(&p);
        let demand_ok = |d: f64| d >= 0.0 && d.is_finite();
        let ok = match *self {
            DemandModel::PointMass { demand } => demand_ok(demand),
            DemandModel::Bernoulli { q } => prob_ok(q),
            DemandModel::TwoPoint { lo, hi, prob_hi } => demand_ok(lo) && demand_ok(hi) && prob_ok(prob_hi),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInstance(format!("demand model {self:?} out of bounds")))
        }
    }
}

/// A finite price grid with one demand model per price.
///
/// Gross rewards `p_k * D` must stay within `[0, 1]`, so a demand above 1 is
/// admissible at prices below 1 as long as the reward it produces is.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceRepr", into = "InstanceRepr")]
pub struct Instance {
    prices: Vec<f64>,
    demand_models: Vec<DemandModel>,
    lambdas: Vec<f64>,
    optimal_index: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceRepr {
    prices: Vec<f64>,
    demand_models: Vec<DemandModel>,
}

impl TryFrom<InstanceRepr> for Instance {
    type Error = Error;
    fn try_from(r: InstanceRepr) -> Result<Self> {
        Instance::new(r.prices, r.demand_models)
    }
}

impl From<Instance> for InstanceRepr {
    fn from(i: Instance) -> Self {
        InstanceRepr {
            prices: i.prices,
            demand_models: i.demand_models,
        }
    }
}

// Slack for rewards like (2/3) / (3/4) * (3/4) landing a hair above the bound.
const REWARD_SLACK: f64 = 1e-12;

impl Instance {
    pub fn new(prices: Vec<f64>, demand_models: Vec<DemandModel>) -> Result<Self> {
        if prices.is_empty() {
            return Err(Error::InvalidInstance("no prices".into()));
        }
        if prices.len() != demand_models.len() {
            return Err(Error::InvalidInstance(format!(
                "{} prices but {} demand models",
                prices.len(),
                demand_models.len()
            )));
        }
        if let Some(p) = prices.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::PriceOutOfRange(*p));
        }
        if prices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInstance("prices must be strictly ascending".into()));
        }
        for (p, model) in prices.iter().zip(&demand_models) {
            model.validate()?;
            if p * model.max_demand() > 1.0 + REWARD_SLACK {
                return Err(Error::InvalidInstance(format!(
                    "price {p} with demand {model:?} can earn more than 1 per step"
                )));
            }
        }
        let lambdas: Vec<f64> = prices
            .iter()
            .zip(&demand_models)
            .map(|(p, m)| p * m.mean())
            .collect();
        let optimal_index = argmax_lowest(&lambdas);
        Ok(Self {
            prices,
            demand_models,
            lambdas,
            optimal_index,
        })
    }

    pub fn k(&self) -> usize {
        self.prices.len()
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn demand_models(&self) -> &[DemandModel] {
        &self.demand_models
    }

    /// Expected gross reward `p_k * E[D(p_k)]` per price.
    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// Index of the highest expected reward; ties go to the lowest index.
    pub fn optimal_index(&self) -> usize {
        self.optimal_index
    }

    pub fn best_lambda(&self) -> f64 {
        self.lambdas[self.optimal_index]
    }
}

/// First index attaining the maximum.
pub(crate) fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Expected revenue of always posting the best price: `T * max_k lambda_k`.
pub fn oracle_revenue(instance: &Instance, horizon: u64) -> f64 {
    horizon as f64 * instance.best_lambda()
}

/// One step of an episode. `step` is 1-based, `price_index` 0-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub step: u64,
    pub price_index: usize,
    pub price: f64,
    pub demand: f64,
    pub gross_reward: f64,
    pub instant_refund: f64,
    pub net_revenue: f64,
}

/// A single episode: draws demand for the posted price, settles refunds
/// through the ledger and optionally records every step.
#[derive(Debug)]
pub struct Market<'a> {
    instance: &'a Instance,
    horizon: u64,
    ledger: RefundLedger,
    rng: ChaCha8Rng,
    trace: Option<Vec<StepOutcome>>,
    gross: f64,
}

impl<'a> Market<'a> {
    /// `rng` is consumed at exactly one uniform draw per step.
    pub fn new(instance: &'a Instance, horizon: u64, protection_period: u64, rng: ChaCha8Rng, trace: bool) -> Self {
        Self {
            instance,
            horizon,
            ledger: RefundLedger::new(protection_period),
            rng,
            trace: trace.then(|| Vec::with_capacity(horizon as usize)),
            gross: 0.0,
        }
    }

    pub fn instance(&self) -> &'a Instance {
        self.instance
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    /// Steps taken so far.
    pub fn elapsed(&self) -> u64 {
        self.ledger.step()
    }

    pub fn ledger(&self) -> &RefundLedger {
        &self.ledger
    }

    pub fn gross_revenue(&self) -> f64 {
        self.gross
    }

    pub fn step(&mut self, price_index: usize) -> Result<StepOutcome> {
        let k = self.instance.k();
        if price_index >= k {
            return Err(Error::PriceIndexOutOfRange { index: price_index, k });
        }
        if self.elapsed() >= self.horizon {
            return Err(Error::HorizonExhausted(self.horizon));
        }
        let price = self.instance.prices[price_index];
        let u: f64 = self.rng.random();
        let demand = self.instance.demand_models[price_index].realize(u);
        let instant_refund = self.ledger.apply_price(price, demand)?;
        let gross_reward = price * demand;
        self.gross += gross_reward;
        let outcome = StepOutcome {
            step: self.ledger.step(),
            price_index,
            price,
            demand,
            gross_reward,
            instant_refund,
            net_revenue: gross_reward - instant_refund,
        };
        if let Some(trace) = &mut self.trace {
            trace.push(outcome);
        }
        Ok(outcome)
    }

    pub fn into_trace(self) -> Option<Vec<StepOutcome>> {
        self.trace
    }
}
