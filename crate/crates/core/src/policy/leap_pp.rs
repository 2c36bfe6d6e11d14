//! LEAP++: phased elimination over K prices with every phase played in
//! ascending price order, so refunds can only occur at phase boundaries.
//!
//! The phase schedule and elimination test depend on where `M` sits relative
//! to `sqrt(KT)` and `K^(1/3) T^(2/3)`.

use std::f64::consts::E;

use rand_chacha::ChaCha8Rng;

use super::{CountMeanState, Policy};
use crate::ledger::RefundLedger;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `M <= sqrt(KT)`: phased UCB with cumulative per-price targets
    /// `ceil(2^(2b+1) ln(4^-b T))`.
    PhasedUcb,
    /// `sqrt(KT) < M < K^(1/3) T^(2/3)`: batched elimination on the grid
    /// `t_b = min(ceil(sqrt(eT)^(2 - 2^-b)), T)`.
    Batched,
    /// `M >= K^(1/3) T^(2/3)`: explore each price `ceil(K^(-2/3) T^(2/3))`
    /// times, then commit.
    ExploreThenCommit,
}

impl Regime {
    /// Thresholds compared exactly in integers: `M^2 <= KT` and `M^3 >= K T^2`.
    pub fn for_period(k: usize, horizon: u64, protection_period: u64) -> Self {
        let (k, t, m) = (k as u128, horizon as u128, protection_period as u128);
        if m * m <= k * t {
            Regime::PhasedUcb
        } else if m * m * m >= k * t * t {
            Regime::ExploreThenCommit
        } else {
            Regime::Batched
        }
    }
}

/// Cumulative pulls per surviving price at the end of phase `b` in the
/// phased-UCB regime; `b = 0` is the bootstrap phase.
pub(crate) fn phased_ucb_target(b: u32, horizon: u64) -> u64 {
    let scale = 4f64.powi(b as i32);
    (2.0 * scale * (horizon as f64 / scale).ln()).ceil() as u64
}

/// Phased-UCB phases run while `4^-b T > e`.
fn phased_ucb_active(b: u32, horizon: u64) -> bool {
    horizon as f64 / 4f64.powi(b as i32) > E
}

pub(crate) fn batched_phase_end(b: u32, horizon: u64) -> u64 {
    let t = horizon as f64;
    let raw = (E * t).sqrt().powf(2.0 - 2f64.powi(-(b as i32)));
    (raw.ceil() as u64).min(horizon)
}

pub(crate) fn etc_pulls(k: usize, horizon: u64) -> u64 {
    ((k as f64).powf(-2.0 / 3.0) * (horizon as f64).powf(2.0 / 3.0)).ceil() as u64
}

#[derive(Debug, Clone)]
pub struct LeapPlusPlus {
    regime: Regime,
    k: usize,
    horizon: u64,
    stats: CountMeanState,
    survivors: Vec<usize>,
    /// Remaining (price, pulls) blocks of the current phase, ascending price.
    plan: Vec<(usize, u64)>,
    cursor: usize,
    /// Regime-specific index of the phase in progress.
    phase_index: u32,
    phases_entered: usize,
    committed: Option<usize>,
    step: u64,
}

impl LeapPlusPlus {
    pub fn new(k: usize, horizon: u64, protection_period: u64) -> Self {
        Self::with_regime(k, horizon, Regime::for_period(k, horizon, protection_period))
    }

    pub fn with_regime(k: usize, horizon: u64, regime: Regime) -> Self {
        Self {
            regime,
            k,
            horizon,
            stats: CountMeanState::new(k, horizon),
            survivors: (0..k).collect(),
            plan: Vec::new(),
            cursor: 0,
            phase_index: 0,
            phases_entered: 0,
            committed: None,
            step: 0,
        }
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn survivors(&self) -> &[usize] {
        &self.survivors
    }

    pub fn committed(&self) -> Option<usize> {
        self.committed
    }

    fn best_survivor(&self) -> usize {
        let mut best = self.survivors[0];
        for &k in &self.survivors[1..] {
            let (mk, mb) = (self.stats.mean(k).unwrap_or(0.0), self.stats.mean(best).unwrap_or(0.0));
            if mk > mb {
                best = k;
            }
        }
        best
    }

    /// Keeps `i` when its upper bound reaches the best lower bound.
    fn confidence_test(&mut self, radius: impl Fn(u64) -> f64) {
        let stats = &self.stats;
        let mean = |k: usize| stats.mean(k).unwrap_or(0.0);
        let width = |k: usize| radius(stats.count(k));
        let best_lower = self
            .survivors
            .iter()
            .map(|&j| mean(j) - width(j))
            .fold(f64::NEG_INFINITY, f64::max);
        self.survivors.retain(|&i| mean(i) + width(i) >= best_lower);
    }

    /// Runs the test closing the finished phase (if any) and lays out the next.
    fn next_phase(&mut self) {
        let t = self.step + 1;
        let first = self.phases_entered == 0;
        let plan_per_price = match self.regime {
            Regime::PhasedUcb => {
                if !first {
                    let b = self.phase_index;
                    if b >= 1 {
                        let log_term = (self.horizon as f64 / 4f64.powi(b as i32)).ln();
                        self.confidence_test(|n| (log_term / (2.0 * n as f64)).sqrt());
                    }
                    self.phase_index += 1;
                }
                let b = self.phase_index;
                if b == 0 {
                    Some(phased_ucb_target(0, self.horizon))
                } else if phased_ucb_active(b, self.horizon) {
                    Some(phased_ucb_target(b, self.horizon) - phased_ucb_target(b - 1, self.horizon))
                } else {
                    None
                }
            }
            Regime::Batched => {
                if !first {
                    let log_term = (self.k as f64 * self.horizon as f64).ln();
                    self.confidence_test(|n| (log_term / (48.0 * n as f64)).sqrt());
                }
                let mut end = t - 1;
                while end < t && end < self.horizon {
                    self.phase_index += 1;
                    end = batched_phase_end(self.phase_index, self.horizon);
                }
                let len = (end + 1).saturating_sub(t).max(1);
                let k = self.survivors.len() as u64;
                self.plan = self
                    .survivors
                    .iter()
                    .enumerate()
                    .map(|(i, &price)| (price, len / k + u64::from((i as u64) < len % k)))
                    .filter(|&(_, n)| n > 0)
                    .collect();
                self.cursor = 0;
                self.phases_entered += 1;
                return;
            }
            Regime::ExploreThenCommit => first.then(|| etc_pulls(self.k, self.horizon)),
        };
        match plan_per_price {
            Some(n) => {
                self.plan = self.survivors.iter().map(|&price| (price, n)).collect();
            }
            None => {
                let best = self.best_survivor();
                self.survivors = vec![best];
                self.committed = Some(best);
                self.plan = vec![(best, u64::MAX)];
            }
        }
        self.cursor = 0;
        self.phases_entered += 1;
    }
}

impl Policy for LeapPlusPlus {
    fn select(&mut self, _ledger: &RefundLedger, _rng: &mut ChaCha8Rng) -> usize {
        while self.cursor >= self.plan.len() {
            self.next_phase();
        }
        let (price, pulls) = &mut self.plan[self.cursor];
        let price = *price;
        *pulls -= 1;
        if *pulls == 0 {
            self.cursor += 1;
        }
        price
    }

    fn observe(&mut self, price_index: usize, gross_reward: f64, _rng: &mut ChaCha8Rng) {
        self.step += 1;
        self.stats.record(price_index, gross_reward);
    }

    fn phase_count(&self) -> usize {
        self.phases_entered
    }
}
