use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};

use super::Policy;
use crate::ledger::RefundLedger;
use crate::market::argmax_lowest;

/// Pull counts and empirical mean rewards per price.
#[derive(Debug, Clone, PartialEq)]
pub struct CountMeanState {
    counts: Vec<u64>,
    sums: Vec<f64>,
    horizon: u64,
}

impl CountMeanState {
    pub fn new(k: usize, horizon: u64) -> Self {
        Self {
            counts: vec![0; k],
            sums: vec![0.0; k],
            horizon,
        }
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn record(&mut self, k: usize, reward: f64) {
        self.counts[k] += 1;
        self.sums[k] += reward;
    }

    pub fn count(&self, k: usize) -> u64 {
        self.counts[k]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Empirical mean reward, `None` before the first pull.
    pub fn mean(&self, k: usize) -> Option<f64> {
        (self.counts[k] > 0).then(|| self.sums[k] / self.counts[k] as f64)
    }

    pub fn elapsed(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// `mean + sqrt(ln T / n)`, infinite for an unpulled price.
pub fn ucb_index(mean: Option<f64>, n: u64, horizon: u64) -> f64 {
    match mean {
        Some(m) if n > 0 => m + ((horizon as f64).ln() / n as f64).sqrt(),
        _ => f64::INFINITY,
    }
}

fn ucb_indices(state: &CountMeanState) -> Vec<f64> {
    (0..state.k())
        .map(|k| ucb_index(state.mean(k), state.count(k), state.horizon))
        .collect()
}

/// Canonical UCB choice; unpulled prices first, ties to the lowest index.
pub fn ucb_select(state: &CountMeanState) -> usize {
    argmax_lowest(&ucb_indices(state))
}

/// UCB indices lowered by the refund each price would trigger now.
pub fn ucb_pp_indices(state: &CountMeanState, ledger: &RefundLedger, prices: &[f64]) -> Vec<f64> {
    let mut idx = ucb_indices(state);
    for (i, p) in idx.iter_mut().zip(prices) {
        *i -= ledger.hypothetical_refund_unchecked(*p);
    }
    idx
}

pub fn ucb_pp_select(state: &CountMeanState, ledger: &RefundLedger, prices: &[f64]) -> usize {
    argmax_lowest(&ucb_pp_indices(state, ledger, prices))
}

/// Beta(1, 1)-prior posterior over binarized rewards.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BetaPosteriorState {
    successes: Vec<u64>,
    failures: Vec<u64>,
}

impl BetaPosteriorState {
    pub fn new(k: usize) -> Self {
        Self {
            successes: vec![0; k],
            failures: vec![0; k],
        }
    }

    pub fn from_counts(successes: Vec<u64>, failures: Vec<u64>) -> Self {
        assert_eq!(successes.len(), failures.len());
        Self { successes, failures }
    }

    pub fn successes(&self) -> &[u64] {
        &self.successes
    }

    pub fn failures(&self) -> &[u64] {
        &self.failures
    }

    pub fn posterior_mean(&self, k: usize) -> f64 {
        (self.successes[k] + 1) as f64 / (self.successes[k] + self.failures[k] + 2) as f64
    }

    /// One `theta_k ~ Beta(S_k + 1, F_k + 1)` per price.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.successes
            .iter()
            .zip(&self.failures)
            .map(|(&s, &f)| {
                Beta::new((s + 1) as f64, (f + 1) as f64)
                    .expect("beta parameters are at least 1")
                    .sample(rng)
            })
            .collect()
    }

    /// Bernoulli trial with success probability `gross_reward`.
    pub fn update(&mut self, k: usize, gross_reward: f64, rng: &mut ChaCha8Rng) {
        let u: f64 = rng.random();
        if u < gross_reward {
            self.successes[k] += 1;
        } else {
            self.failures[k] += 1;
        }
    }
}

pub fn ts_select(state: &BetaPosteriorState, rng: &mut ChaCha8Rng) -> usize {
    argmax_lowest(&state.sample(rng))
}

fn refund_adjusted_argmax(samples: &mut [f64], ledger: &RefundLedger, prices: &[f64]) -> usize {
    for (s, p) in samples.iter_mut().zip(prices) {
        *s -= ledger.hypothetical_refund_unchecked(*p);
    }
    argmax_lowest(samples)
}

pub fn ts_pp_select(state: &BetaPosteriorState, ledger: &RefundLedger, prices: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let mut samples = state.sample(rng);
    refund_adjusted_argmax(&mut samples, ledger, prices)
}

#[derive(Debug, Clone)]
pub struct Ucb {
    state: CountMeanState,
}

impl Ucb {
    pub fn new(k: usize, horizon: u64) -> Self {
        Self {
            state: CountMeanState::new(k, horizon),
        }
    }

    pub fn state(&self) -> &CountMeanState {
        &self.state
    }
}

impl Policy for Ucb {
    fn select(&mut self, _ledger: &RefundLedger, _rng: &mut ChaCha8Rng) -> usize {
        ucb_select(&self.state)
    }

    fn observe(&mut self, price_index: usize, gross_reward: f64, _rng: &mut ChaCha8Rng) {
        self.state.record(price_index, gross_reward);
    }
}

#[derive(Debug, Clone)]
pub struct UcbPp {
    state: CountMeanState,
    prices: Vec<f64>,
}

impl UcbPp {
    pub fn new(prices: Vec<f64>, horizon: u64) -> Self {
        Self {
            state: CountMeanState::new(prices.len(), horizon),
            prices,
        }
    }
}

impl Policy for UcbPp {
    fn select(&mut self, ledger: &RefundLedger, _rng: &mut ChaCha8Rng) -> usize {
        ucb_pp_select(&self.state, ledger, &self.prices)
    }

    fn observe(&mut self, price_index: usize, gross_reward: f64, _rng: &mut ChaCha8Rng) {
        self.state.record(price_index, gross_reward);
    }
}

#[derive(Debug, Clone)]
pub struct ThompsonSampling {
    state: BetaPosteriorState,
}

impl ThompsonSampling {
    pub fn new(k: usize) -> Self {
        Self {
            state: BetaPosteriorState::new(k),
        }
    }

    pub fn state(&self) -> &BetaPosteriorState {
        &self.state
    }
}

impl Policy for ThompsonSampling {
    fn select(&mut self, _ledger: &RefundLedger, rng: &mut ChaCha8Rng) -> usize {
        ts_select(&self.state, rng)
    }

    fn observe(&mut self, price_index: usize, gross_reward: f64, rng: &mut ChaCha8Rng) {
        self.state.update(price_index, gross_reward, rng);
    }
}

#[derive(Debug, Clone)]
pub struct TsPp {
    state: BetaPosteriorState,
    prices: Vec<f64>,
}

impl TsPp {
    pub fn new(prices: Vec<f64>) -> Self {
        Self {
            state: BetaPosteriorState::new(prices.len()),
            prices,
        }
    }
}

impl Policy for TsPp {
    fn select(&mut self, ledger: &RefundLedger, rng: &mut ChaCha8Rng) -> usize {
        ts_pp_select(&self.state, ledger, &self.prices, rng)
    }

    fn observe(&mut self, price_index: usize, gross_reward: f64, rng: &mut ChaCha8Rng) {
        self.state.update(price_index, gross_reward, rng);
    }
}

#[derive(Debug, Clone)]
pub struct FixedPrice {
    index: usize,
}

impl FixedPrice {
    pub fn new(index: usize) -> Self {
        Self { index }
    }
}

impl Policy for FixedPrice {
    fn select(&mut self, _ledger: &RefundLedger, _rng: &mut ChaCha8Rng) -> usize {
        self.index
    }

    fn observe(&mut self, _price_index: usize, _gross_reward: f64, _rng: &mut ChaCha8Rng) {}
}

#[derive(Debug, Clone)]
pub struct Alternate {
    k: usize,
    next: usize,
}

impl Alternate {
    pub fn new(k: usize) -> Self {
        Self { k, next: 0 }
    }
}

impl Policy for Alternate {
    fn select(&mut self, _ledger: &RefundLedger, _rng: &mut ChaCha8Rng) -> usize {
        let i = self.next;
        self.next = (self.next + 1) % self.k;
        i
    }

    fn observe(&mut self, _price_index: usize, _gross_reward: f64, _rng: &mut ChaCha8Rng) {}
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn ucb_index_example() {
        let mut s = CountMeanState::new(2, 100);
        s.record(0, 0.5);
        s.record(1, 0.2);
        let i0 = ucb_index(s.mean(0), 1, 100);
        let i1 = ucb_index(s.mean(1), 1, 100);
        // sqrt(ln 100) = 2.14597...
        assert!((i0 - 2.645_966).abs() < 1e-5);
        assert!((i1 - 2.345_966).abs() < 1e-5);
        assert_eq!(ucb_select(&s), 0);
    }

    #[test]
    fn ucb_sweeps_prices_first() {
        let mut s = CountMeanState::new(4, 1000);
        let mut order = Vec::new();
        for _ in 0..4 {
            let k = ucb_select(&s);
            order.push(k);
            s.record(k, 1.0);
        }
        assert_eq!(order, vec![0, 1, 2, 3]);
    }

    #[test]
    fn ucb_strictly_alternates_on_deterministic_ties() {
        let mut s = CountMeanState::new(2, 10_000);
        let mut played = Vec::new();
        for _ in 0..2000 {
            let k = ucb_select(&s);
            played.push(k);
            s.record(k, 0.25);
        }
        assert!(played.windows(2).all(|w| w[0] != w[1]));
    }

    #[test]
    fn ucb_pp_with_empty_ledger_matches_ucb() {
        let mut s = CountMeanState::new(3, 500);
        for (k, r) in [(0, 0.1), (1, 0.4), (2, 0.3), (1, 0.2)] {
            s.record(k, r);
        }
        let ledger = RefundLedger::new(10);
        assert_eq!(ucb_pp_select(&s, &ledger, &[0.2, 0.5, 0.9]), ucb_select(&s));
    }

    #[test]
    fn ucb_pp_index_gap_equals_refund() {
        let mut s = CountMeanState::new(2, 1000);
        for _ in 0..4 {
            s.record(0, 0.5);
            s.record(1, 0.5);
        }
        let mut ledger = RefundLedger::new(5);
        ledger.apply_price(0.8, 1.0).unwrap();
        let idx = ucb_pp_indices(&s, &ledger, &[0.5, 0.8]);
        assert!((idx[1] - idx[0] - 0.3).abs() < 1e-15);
        assert_eq!(ucb_pp_select(&s, &ledger, &[0.5, 0.8]), 1);
    }

    #[test]
    fn ucb_pp_refuses_to_drop_under_heavy_protection() {
        // Price 1 looks better on data, but 200 protected purchases at 1.0
        // would be refunded 0.75 each.
        let mut s = CountMeanState::new(2, 1000);
        for _ in 0..50 {
            s.record(0, 0.3);
            s.record(1, 0.2);
        }
        let mut ledger = RefundLedger::new(200);
        for _ in 0..200 {
            ledger.apply_price(1.0, 1.0).unwrap();
        }
        let idx = ucb_pp_indices(&s, &ledger, &[0.25, 1.0]);
        assert!((ucb_select(&s) == 0) && (idx[0] < idx[1]));
        assert!(((idx[1] - idx[0]) - (150.0 - 0.1)).abs() < 1e-9);
    }

    #[test]
    fn ts_posterior_concentrates() {
        // P(|Binomial(1000, 1/2)/1000 - 1/2| > 0.05) is about 1.6e-3, and the
        // prior shifts the posterior mean by under 5e-4.
        let mut failures = 0;
        for seed in 0..200 {
            let mut r = rng(seed);
            let mut s = BetaPosteriorState::new(1);
            for _ in 0..1000 {
                s.update(0, 0.5, &mut r);
            }
            if (s.posterior_mean(0) - 0.5).abs() > 0.05 {
                failures += 1;
            }
        }
        assert!(failures <= 2, "{failures} of 200 posteriors off by more than 0.05");
    }

    #[test]
    fn ts_prefers_clear_winner() {
        let s = BetaPosteriorState::from_counts(vec![10, 0], vec![0, 10]);
        let mut r = rng(11);
        let wins = (0..10_000).filter(|_| ts_select(&s, &mut r) == 0).count();
        // P(Beta(1,11) > Beta(11,1)) = 1 / C(22, 11) ~ 1.4e-6.
        assert!(wins >= 9_900);
    }

    #[test]
    fn ts_fresh_samples_are_uniform() {
        let s = BetaPosteriorState::new(1);
        let mut r = rng(3);
        let xs: Vec<f64> = (0..20_000).map(|_| s.sample(&mut r)[0]).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let below_quarter = xs.iter().filter(|&&x| x < 0.25).count() as f64 / xs.len() as f64;
        assert!((mean - 0.5).abs() < 0.01);
        assert!((below_quarter - 0.25).abs() < 0.015);
    }

    #[test]
    fn ts_pp_adjusted_choice() {
        let mut ledger = RefundLedger::new(3);
        ledger.apply_price(1.0, 0.6).unwrap();
        // Refunds at prices (0.0, 1.0) are (0.6, 0).
        let mut samples = vec![0.9, 0.4];
        assert_eq!(refund_adjusted_argmax(&mut samples, &ledger, &[0.0, 1.0]), 1);
    }

    #[test]
    fn ts_pp_avoids_expensive_drop() {
        let mut ledger = RefundLedger::new(100);
        for _ in 0..100 {
            ledger.apply_price(1.0, 1.0).unwrap();
        }
        let s = BetaPosteriorState::from_counts(vec![30, 5], vec![5, 30]);
        let mut r = rng(5);
        let low = (0..5000)
            .filter(|_| ts_pp_select(&s, &ledger, &[0.5, 1.0], &mut r) == 0)
            .count();
        assert_eq!(low, 0);
        let empty = RefundLedger::new(100);
        let low = (0..5000)
            .filter(|_| ts_pp_select(&s, &empty, &[0.5, 1.0], &mut r) == 0)
            .count();
        assert!(low > 4900);
    }
}
