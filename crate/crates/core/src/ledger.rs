//! Open purchases under price protection and the refunds they are owed.
//!
//! A purchase made at step `s` is protected through step `s + M`: whenever a
//! posted price falls below the lowest price seen since the purchase, the
//! customer is refunded the difference times the purchased demand. Refunds are
//! recognized immediately, and a purchase may be refunded several times.
//!
//! Purchases whose running minimum coincide are pooled into a
//! [`PurchaseGroup`]. Running minima are nondecreasing in purchase time, so
//! the groups form a monotone deque: a price drop only ever touches a suffix
//! of it and collapses that suffix into a single group. Every group is
//! pushed once and popped at most once, which makes [`RefundLedger::apply_price`]
//! amortized O(1).

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// A run of consecutive open purchases sharing the same running minimum price.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PurchaseGroup {
    pub current_min_price: f64,
    pub total_demand: f64,
    pub member_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OpenPurchase {
    demand: f64,
    step: u64,
}

/// Push/pop counters, used to check the amortized cost bound.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LedgerCounters {
    pub group_pushes: u64,
    pub group_pops: u64,
}

#[derive(Debug, Clone)]
pub struct RefundLedger {
    protection_period: u64,
    step: u64,
    groups: VecDeque<PurchaseGroup>,
    window: VecDeque<OpenPurchase>,
    cumulative_refund: f64,
    counters: LedgerCounters,
    #[cfg(test)]
    skip_eviction: bool,
}

fn check_price(price: f64) -> Result<()> {
    if (0.0..=1.0).contains(&price) {
        Ok(())
    } else {
        Err(Error::PriceOutOfRange(price))
    }
}

impl RefundLedger {
    /// A ledger with protection period `protection_period`. A period of 0
    /// means no protection: nothing is ever refunded.
    pub fn new(protection_period: u64) -> Self {
        Self {
            protection_period,
            step: 0,
            groups: VecDeque::new(),
            window: VecDeque::new(),
            cumulative_refund: 0.0,
            counters: LedgerCounters::default(),
            #[cfg(test)]
            skip_eviction: false,
        }
    }

    /// Negative control for the oracle checks: a ledger that never lets
    /// protection expire.
    #[cfg(test)]
    pub(crate) fn without_eviction(protection_period: u64) -> Self {
        Self {
            skip_eviction: true,
            ..Self::new(protection_period)
        }
    }

    pub fn protection_period(&self) -> u64 {
        self.protection_period
    }

    /// Number of prices applied so far.
    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn cumulative_refund(&self) -> f64 {
        self.cumulative_refund
    }

    pub fn counters(&self) -> LedgerCounters {
        self.counters
    }

    /// Groups ordered oldest first.
    pub fn groups(&self) -> impl ExactSizeIterator<Item = &PurchaseGroup> {
        self.groups.iter()
    }

    /// Number of purchases still under protection.
    pub fn open_purchases(&self) -> usize {
        self.window.len()
    }

    fn evict(&mut self, at_step: u64) {
        #[cfg(test)]
        if self.skip_eviction {
            return;
        }
        while let Some(oldest) = self.window.front().copied() {
            if oldest.step + self.protection_period >= at_step {
                break;
            }
            self.window.pop_front();
            let front = self
                .groups
                .front_mut()
                .expect("open purchase without a group");
            front.member_count -= 1;
            front.total_demand -= oldest.demand;
            if front.member_count == 0 {
                self.groups.pop_front();
                self.counters.group_pops += 1;
            }
        }
    }

    /// Posts `price` for the next step and records a purchase of `demand`
    /// units at that price. Returns the refund the price triggers.
    ///
    /// Purchases whose protection has run out by the next step are evicted
    /// before returning, so the ledger always holds exactly the purchases a
    /// future price drop can reach.
    pub fn apply_price(&mut self, price: f64, demand: f64) -> Result<f64> {
        check_price(price)?;
        if !(demand >= 0.0 && demand.is_finite()) {
            return Err(Error::InvalidDemand(demand));
        }
        let t = self.step + 1;
        let refund = self.hypothetical_refund_unchecked(price);

        let mut merged = PurchaseGroup {
            current_min_price: price,
            total_demand: demand,
            member_count: 1,
        };
        while let Some(back) = self.groups.back().copied() {
            if back.current_min_price <= price {
                break;
            }
            self.groups.pop_back();
            self.counters.group_pops += 1;
            merged.total_demand += back.total_demand;
            merged.member_count += back.member_count;
        }
        match self.groups.back_mut() {
            Some(back) if back.current_min_price == price => {
                back.total_demand += merged.total_demand;
                back.member_count += merged.member_count;
            }
            _ => {
                self.groups.push_back(merged);
                self.counters.group_pushes += 1;
            }
        }
        self.window.push_back(OpenPurchase { demand, step: t });
        self.step = t;
        self.cumulative_refund += refund;
        self.evict(t + 1);
        Ok(refund)
    }

    /// The refund `apply_price(price, _)` would trigger at the next step,
    /// without changing the ledger.
    pub fn hypothetical_refund(&self, price: f64) -> Result<f64> {
        check_price(price)?;
        Ok(self.hypothetical_refund_unchecked(price))
    }

    pub(crate) fn hypothetical_refund_unchecked(&self, price: f64) -> f64 {
        self.groups
            .iter()
            .rev()
            .take_while(|g| g.current_min_price > price)
            .map(|g| (g.current_min_price - price) * g.total_demand.max(0.0))
            .sum()
    }
}

/// Direct evaluation of the refund triggered at step `t` (1-based):
/// the sum over purchases `s` in `[max(1, t - M), t - 1]` of
/// `[min(p_s..=p_{t-1}) - p_t]^+ * D_s`.
///
/// `prices` must hold at least `t` entries and `demands` at least `t - 1`.
/// O(M); meant for tests and verification only.
pub fn brute_force_refund(prices: &[f64], demands: &[f64], protection_period: u64, t: usize) -> f64 {
    if t <= 1 {
        return 0.0;
    }
    let price_now = prices[t - 1];
    let first = t.saturating_sub(protection_period as usize).max(1);
    let mut running_min = f64::INFINITY;
    let mut refund = 0.0;
    for s in (first..t).rev() {
        running_min = running_min.min(prices[s - 1]);
        let gap = running_min - price_now;
        if gap > 0.0 {
            refund += gap * demands[s - 1];
        }
    }
    refund
}

/// Net revenue of an episode computed from final payments: each purchase
/// pays the lowest price posted during its protection window,
/// `sum_t min(p_t..=p_{min(t+M, T)}) * D_t`.
pub fn settled_revenue(prices: &[f64], demands: &[f64], protection_period: u64) -> f64 {
    let horizon = prices.len();
    (0..horizon)
        .map(|t| {
            let last = (t + protection_period as usize).min(horizon - 1);
            let paid = prices[t..=last].iter().copied().fold(f64::INFINITY, f64::min);
            paid * demands[t]
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn run(ledger: &mut RefundLedger, steps: &[(f64, f64)]) -> Vec<f64> {
        steps
            .iter()
            .map(|&(p, d)| ledger.apply_price(p, d).unwrap())
            .collect()
    }

    #[test]
    fn three_step_drop_sequence() {
        let mut ledger = RefundLedger::new(2);
        let refunds = run(&mut ledger, &[(1.0, 1.0), (0.5, 1.0), (0.25, 1.0)]);
        assert_eq!(refunds, vec![0.0, 0.5, 0.5]);
        assert_eq!(ledger.cumulative_refund(), 1.0);

        let prices = [1.0, 0.5, 0.25];
        let demands = [1.0, 1.0, 1.0];
        assert_eq!(brute_force_refund(&prices, &demands, 2, 3), 0.5);
        // Payments settle at 0.25 + 0.25 + 0.25 against 1.75 gross.
        assert_eq!(settled_revenue(&prices, &demands, 2), 0.75);
    }

    #[test]
    fn brute_force_small_cases() {
        assert_eq!(brute_force_refund(&[0.7], &[], 5, 1), 0.0);
        let r = brute_force_refund(&[0.9, 0.4], &[2.0, 1.0], 1, 2);
        assert!((r - 1.0).abs() < 1e-15);
    }

    #[test]
    fn nondecreasing_prices_never_refund() {
        let mut ledger = RefundLedger::new(10);
        let refunds = run(&mut ledger, &[(0.1, 1.0), (0.1, 0.5), (0.3, 1.0), (0.9, 1.0), (1.0, 0.2)]);
        assert!(refunds.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn customer_refunded_down_to_window_minimum() {
        // Purchase at p4, the price later slides to p3 then p2 within the window.
        let (p2, p3, p4) = (0.4, 0.6, 0.8);
        let mut ledger = RefundLedger::new(5);
        ledger.apply_price(p4, 3.0).unwrap();
        ledger.apply_price(p3, 0.0).unwrap();
        ledger.apply_price(p2, 0.0).unwrap();
        assert!((ledger.cumulative_refund() - (p4 - p2) * 3.0).abs() < 1e-15);
    }

    #[test]
    fn purchase_expires_after_protection_period() {
        let mut ledger = RefundLedger::new(2);
        ledger.apply_price(1.0, 1.0).unwrap(); // s = 1, protected through step 3
        ledger.apply_price(1.0, 0.0).unwrap();
        ledger.apply_price(1.0, 0.0).unwrap();
        assert_eq!(ledger.hypothetical_refund(0.0).unwrap(), 0.0);
        assert_eq!(ledger.apply_price(0.0, 0.0).unwrap(), 0.0);

        let mut ledger = RefundLedger::new(2);
        ledger.apply_price(1.0, 1.0).unwrap();
        ledger.apply_price(1.0, 0.0).unwrap();
        assert_eq!(ledger.apply_price(0.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn zero_period_disables_refunds() {
        let mut ledger = RefundLedger::new(0);
        let refunds = run(&mut ledger, &[(1.0, 1.0), (0.0, 1.0), (1.0, 1.0), (0.2, 1.0)]);
        assert!(refunds.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn hypothetical_refund_examples() {
        let ledger = RefundLedger::new(3);
        assert_eq!(ledger.hypothetical_refund(0.3).unwrap(), 0.0);

        let mut ledger = RefundLedger::new(3);
        ledger.apply_price(0.8, 1.0).unwrap();
        let r = ledger.hypothetical_refund(0.5).unwrap();
        assert!((r - 0.3).abs() < 1e-15);
        assert_eq!(ledger.step(), 1);
        assert_eq!(ledger.cumulative_refund(), 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut ledger = RefundLedger::new(3);
        assert!(matches!(ledger.apply_price(1.5, 1.0), Err(Error::PriceOutOfRange(_))));
        assert!(matches!(ledger.apply_price(-0.1, 1.0), Err(Error::PriceOutOfRange(_))));
        assert!(matches!(ledger.apply_price(0.5, -1.0), Err(Error::InvalidDemand(_))));
        assert!(matches!(ledger.apply_price(0.5, f64::NAN), Err(Error::InvalidDemand(_))));
        assert!(ledger.hypothetical_refund(2.0).is_err());
        assert_eq!(ledger.step(), 0);
    }

    #[test]
    fn equal_price_merges_into_back_group() {
        let mut ledger = RefundLedger::new(10);
        run(&mut ledger, &[(0.5, 1.0), (0.5, 1.0), (0.5, 2.0)]);
        let groups: Vec<_> = ledger.groups().copied().collect();
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].member_count, 3);
        assert_eq!(groups[0].total_demand, 4.0);
    }

    #[test]
    fn skipped_eviction_overpays() {
        let steps = [(1.0, 1.0), (1.0, 0.0), (1.0, 0.0), (0.0, 0.0)];
        let mut good = RefundLedger::new(2);
        let mut bad = RefundLedger::without_eviction(2);
        assert_eq!(run(&mut good, &steps)[3], 0.0);
        assert_eq!(run(&mut bad, &steps)[3], 1.0);
    }

    fn episode() -> impl Strategy<Value = (u64, Vec<(f64, f64)>)> {
        let grid = prop::sample::select(vec![0.2, 0.35, 0.5, 0.75, 1.0]);
        let demand = prop::sample::select(vec![0.0, 0.3, 1.0]);
        (1u64..=10, prop::collection::vec((grid, demand), 1..60))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(512))]

        #[test]
        fn matches_brute_force((m, steps) in episode()) {
            let mut ledger = RefundLedger::new(m);
            let prices: Vec<f64> = steps.iter().map(|s| s.0).collect();
            let demands: Vec<f64> = steps.iter().map(|s| s.1).collect();
            let mut gross = 0.0;
            let mut refunds = 0.0;
            for (i, &(p, d)) in steps.iter().enumerate() {
                let predicted = ledger.hypothetical_refund(p).unwrap();
                let r = ledger.apply_price(p, d).unwrap();
                prop_assert_eq!(predicted, r);
                let oracle = brute_force_refund(&prices, &demands, m, i + 1);
                prop_assert!((r - oracle).abs() <= 1e-12, "step {}: {} vs {}", i + 1, r, oracle);

                let mins: Vec<f64> = ledger.groups().map(|g| g.current_min_price).collect();
                prop_assert!(mins.windows(2).all(|w| w[0] < w[1]));
                let members: usize = ledger.groups().map(|g| g.member_count).sum();
                prop_assert_eq!(members, ledger.open_purchases());
                prop_assert!(members as u64 <= m);
                gross += p * d;
                refunds += r;
            }
            let settled = settled_revenue(&prices, &demands, m);
            prop_assert!((gross - refunds - settled).abs() <= 1e-9);
            let c = ledger.counters();
            prop_assert!(c.group_pops <= c.group_pushes);
            prop_assert!(c.group_pushes <= steps.len() as u64);
        }
    }
}
