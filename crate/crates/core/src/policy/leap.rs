//! Two-price LEAP and its naive multi-price extension.
//!
//! Both share one schedule: phase ends on the doubly-exponential grid
//! `t_b = min(T, ceil(a^(2 - 2^(1-b))))` with `a = e * sqrt(T)`, and
//! elimination tests fired asynchronously whenever every plausible price has
//! collected `n_l = ceil(2 ln(T * 4^-l) * 4^l)` samples.

use std::f64::consts::E;

use rand_chacha::ChaCha8Rng;

use super::{CountMeanState, Policy};
use crate::ledger::RefundLedger;

#[derive(Debug, Clone, PartialEq)]
pub struct LeapSchedule {
    pub horizon: u64,
    /// `a = e * sqrt(T)`.
    pub base: f64,
    /// Number of phases `B = ceil(log2 ln T)`.
    pub phases: usize,
    /// Number of test levels `L = floor(log2(T / e) / 2)`.
    pub levels: usize,
    /// `t_1 ..= t_B`; the last entry is always `T`.
    pub phase_ends: Vec<u64>,
    /// `2^-l` for `l = 1..=L`.
    pub test_gaps: Vec<f64>,
    /// `n_l` for `l = 1..=L`.
    pub test_counts: Vec<u64>,
    /// Pulls per price in the explore-then-commit branch, `ceil(T^(2/3))`.
    pub etc_pulls: u64,
}

impl LeapSchedule {
    pub fn new(horizon: u64) -> Self {
        let t = horizon as f64;
        let base = E * t.sqrt();
        let phases = (t.ln().log2().ceil() as usize).max(1);
        let levels = ((t / E).log2() / 2.0).floor().max(0.0) as usize;
        let mut phase_ends: Vec<u64> = (1..=phases)
            .map(|b| {
                let u = base.powf(2.0 - 2f64.powi(1 - b as i32));
                (u.ceil() as u64).min(horizon)
            })
            .collect();
        *phase_ends.last_mut().expect("at least one phase") = horizon;
        let test_gaps: Vec<f64> = (1..=levels).map(|l| 2f64.powi(-(l as i32))).collect();
        let test_counts = test_gaps
            .iter()
            .map(|d| (2.0 * (t * d * d).ln() / (d * d)).ceil() as u64)
            .collect();
        Self {
            horizon,
            base,
            phases,
            levels,
            phase_ends,
            test_gaps,
            test_counts,
            etc_pulls: t.powf(2.0 / 3.0).ceil() as u64,
        }
    }

    /// `ln(T * gap_l^2)` for the 0-based level `l`.
    fn log_term(&self, level: usize) -> f64 {
        let d = self.test_gaps[level];
        (self.horizon as f64 * d * d).ln()
    }
}

/// Price with the larger mean; no data or a tie goes to the lower index.
fn better_of_two(stats: &CountMeanState) -> usize {
    match (stats.mean(0), stats.mean(1)) {
        (Some(a), Some(b)) if b > a => 1,
        (None, Some(_)) => 1,
        _ => 0,
    }
}

#[derive(Debug, Clone)]
enum LeapMode {
    Phased {
        phase: usize,
        first: usize,
        first_pulls: u64,
        next_level: usize,
        survivor: Option<usize>,
    },
    ExploreThenCommit {
        commit: Option<usize>,
    },
}

/// LEAP for two prices.
///
/// With `M < T^(2/3)` it plays both prices in each phase, better-looking
/// price first, and eliminates the loser as soon as a test level fires. With
/// larger `M` it explores each price `ceil(T^(2/3))` times and commits.
#[derive(Debug, Clone)]
pub struct Leap {
    schedule: LeapSchedule,
    stats: CountMeanState,
    /// Prefix sums of rewards per price, for tests on the first `n_l` samples.
    prefix: [Vec<f64>; 2],
    mode: LeapMode,
    phases_entered: usize,
    step: u64,
}

impl Leap {
    pub fn new(horizon: u64, protection_period: u64) -> Self {
        let schedule = LeapSchedule::new(horizon);
        // M >= T^(2/3), compared exactly as M^3 >= T^2.
        let m = protection_period as u128;
        let explore_then_commit = m * m * m >= (horizon as u128) * (horizon as u128);
        let mode = if explore_then_commit {
            LeapMode::ExploreThenCommit { commit: None }
        } else {
            LeapMode::Phased {
                phase: 0,
                first: 0,
                first_pulls: 0,
                next_level: 0,
                survivor: None,
            }
        };
        Self {
            schedule,
            stats: CountMeanState::new(2, horizon),
            prefix: [vec![0.0], vec![0.0]],
            mode,
            phases_entered: 0,
            step: 0,
        }
    }

    pub fn schedule(&self) -> &LeapSchedule {
        &self.schedule
    }

    /// The surviving price once one has been eliminated.
    pub fn survivor(&self) -> Option<usize> {
        match self.mode {
            LeapMode::Phased { survivor, .. } => survivor,
            LeapMode::ExploreThenCommit { commit } => commit,
        }
    }

    /// `t_{b-1}` for the 1-based phase `b`.
    fn phase_start(&self, phase: usize) -> u64 {
        if phase <= 1 {
            0
        } else {
            self.schedule.phase_ends[phase - 2]
        }
    }

    /// Enters the phase containing step `t` if the current one is over.
    fn advance_phase(&mut self, t: u64) {
        let ends = &self.schedule.phase_ends;
        let LeapMode::Phased {
            phase, first, first_pulls, ..
        } = &mut self.mode
        else {
            return;
        };
        if *phase > 0 && t <= ends[*phase - 1] {
            return;
        }
        // Skips phases left empty by the min(T, .) cap.
        while *phase == 0 || t > ends[*phase - 1] {
            *phase += 1;
        }
        let start = if *phase == 1 { 0 } else { ends[*phase - 2] };
        *first = better_of_two(&self.stats);
        *first_pulls = (ends[*phase - 1] - start).div_ceil(2);
        self.phases_entered += 1;
    }

    fn run_tests(&mut self) {
        let LeapMode::Phased {
            next_level, survivor, ..
        } = &mut self.mode
        else {
            return;
        };
        if survivor.is_some() {
            return;
        }
        let fewest = self.stats.count(0).min(self.stats.count(1));
        while *next_level < self.schedule.levels {
            let l = *next_level;
            let n = self.schedule.test_counts[l];
            if fewest < n {
                break;
            }
            *next_level += 1;
            let means = [
                self.prefix[0][n as usize] / n as f64,
                self.prefix[1][n as usize] / n as f64,
            ];
            let radius = (2.0 * self.schedule.log_term(l) / n as f64).sqrt();
            let best = means[0].max(means[1]);
            if let Some(loser) = (0..2).find(|&k| best - means[k] > radius) {
                *survivor = Some(1 - loser);
                break;
            }
        }
    }
}

impl Policy for Leap {
    fn select(&mut self, _ledger: &RefundLedger, _rng: &mut ChaCha8Rng) -> usize {
        let t = self.step + 1;
        match self.mode {
            LeapMode::ExploreThenCommit { commit } => {
                let n = self.schedule.etc_pulls;
                let (price, phase) = if t <= n {
                    (0, 1)
                } else if t <= 2 * n {
                    (1, 2)
                } else {
                    let c = commit.unwrap_or_else(|| better_of_two(&self.stats));
                    self.mode = LeapMode::ExploreThenCommit { commit: Some(c) };
                    (c, 3)
                };
                self.phases_entered = self.phases_entered.max(phase);
                price
            }
            LeapMode::Phased { .. } => {
                self.advance_phase(t);
                let LeapMode::Phased {
                    phase,
                    first,
                    first_pulls,
                    survivor,
                    ..
                } = self.mode
                else {
                    unreachable!()
                };
                if let Some(s) = survivor {
                    return s;
                }
                let offset = t - self.phase_start(phase);
                if offset <= first_pulls {
                    first
                } else {
                    1 - first
                }
            }
        }
    }

    fn observe(&mut self, price_index: usize, gross_reward: f64, _rng: &mut ChaCha8Rng) {
        self.step += 1;
        self.stats.record(price_index, gross_reward);
        let last = *self.prefix[price_index].last().expect("prefix starts at 0");
        self.prefix[price_index].push(last + gross_reward);
        self.run_tests();
    }

    fn phase_count(&self) -> usize {
        self.phases_entered
    }
}

/// LEAP run on K prices: each phase splits its length equally among the
/// surviving prices, played in descending order of empirical mean, and an
/// elimination ends the phase early.
#[derive(Debug, Clone)]
pub struct LeapMulti {
    schedule: LeapSchedule,
    stats: CountMeanState,
    survivors: Vec<usize>,
    /// Remaining (price, pulls) blocks of the current phase.
    plan: Vec<(usize, u64)>,
    cursor: usize,
    phase: usize,
    phase_end: u64,
    next_level: usize,
    phases_entered: usize,
    step: u64,
}

impl LeapMulti {
    pub fn new(k: usize, horizon: u64) -> Self {
        Self {
            schedule: LeapSchedule::new(horizon),
            stats: CountMeanState::new(k, horizon),
            survivors: (0..k).collect(),
            plan: Vec::new(),
            cursor: 0,
            phase: 0,
            phase_end: 0,
            next_level: 0,
            phases_entered: 0,
            step: 0,
        }
    }

    pub fn survivors(&self) -> &[usize] {
        &self.survivors
    }

    /// Survivors by descending empirical mean, ties to the lower index.
    /// Unpulled prices rank as mean 0.
    fn play_order(&self) -> Vec<usize> {
        let mut order = self.survivors.clone();
        let mean = |k: usize| self.stats.mean(k).unwrap_or(0.0);
        order.sort_by(|&a, &b| mean(b).total_cmp(&mean(a)).then(a.cmp(&b)));
        order
    }

    fn start_phase(&mut self, t: u64) {
        let ends = &self.schedule.phase_ends;
        loop {
            self.phase += 1;
            self.phase_end = if self.phase <= ends.len() {
                ends[self.phase - 1]
            } else {
                self.schedule.horizon
            };
            if self.phase_end >= t || self.phase > ends.len() {
                break;
            }
        }
        let len = self.phase_end + 1 - t;
        let order = self.play_order();
        let k = order.len() as u64;
        self.plan = order
            .into_iter()
            .enumerate()
            .map(|(i, price)| (price, len / k + u64::from((i as u64) < len % k)))
            .filter(|&(_, n)| n > 0)
            .collect();
        self.cursor = 0;
        self.phases_entered += 1;
    }

    fn run_tests(&mut self) -> bool {
        if self.survivors.len() < 2 {
            return false;
        }
        let fewest = self.survivors.iter().map(|&k| self.stats.count(k)).min().unwrap_or(0);
        while self.next_level < self.schedule.levels && fewest >= self.schedule.test_counts[self.next_level] {
            let log_term = self.schedule.log_term(self.next_level);
            self.next_level += 1;
            let radius = |k: usize| (log_term / self.stats.count(k) as f64).sqrt();
            let mean = |k: usize| self.stats.mean(k).expect("tested prices have samples");
            let best_lower = self
                .survivors
                .iter()
                .map(|&j| mean(j) - radius(j))
                .fold(f64::NEG_INFINITY, f64::max);
            let before = self.survivors.len();
            self.survivors.retain(|&k| mean(k) + radius(k) >= best_lower);
            if self.survivors.len() < before {
                return true;
            }
        }
        false
    }
}

impl Policy for LeapMulti {
    fn select(&mut self, _ledger: &RefundLedger, _rng: &mut ChaCha8Rng) -> usize {
        let t = self.step + 1;
        if self.phase == 0 || t > self.phase_end || self.cursor >= self.plan.len() {
            self.start_phase(t);
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
        if self.run_tests() {
            // End the phase now; the next one starts with the survivors.
            self.plan.clear();
            self.phase_end = self.step;
        }
    }

    fn phase_count(&self) -> usize {
        self.phases_entered
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn schedule_for_ten_thousand() {
        let s = LeapSchedule::new(10_000);
        assert!((s.base - 271.828_18).abs() < 1e-4);
        assert_eq!(s.phases, 4);
        assert_eq!(s.phase_ends, vec![272, 4482, 10_000, 10_000]);
        assert_eq!(s.test_counts[0], 63);
        assert_eq!(s.test_gaps[0], 0.5);
        assert_eq!(s.levels, 5);
        assert_eq!(s.etc_pulls, 465);
    }

    #[test]
    fn schedule_sanity_over_horizons() {
        for horizon in [10u64, 50, 1000, 7777, 20_000, 1_000_000] {
            let s = LeapSchedule::new(horizon);
            assert_eq!(*s.phase_ends.last().unwrap(), horizon);
            assert!(s.phase_ends.windows(2).all(|w| w[0] <= w[1]));
            assert!(s.test_counts.windows(2).all(|w| w[0] < w[1]));
            let ln_t = (horizon as f64).ln();
            for (n, d) in s.test_counts.iter().zip(&s.test_gaps) {
                let n = *n as f64;
                assert!(n >= 2.0 / (d * d) && n <= 2.0 * (1.0 + ln_t) / (d * d));
            }
        }
    }

    fn play(policy: &mut dyn Policy, horizon: u64, reward: impl Fn(usize) -> f64) -> Vec<usize> {
        let ledger = RefundLedger::new(0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        (0..horizon)
            .map(|_| {
                let k = policy.select(&ledger, &mut rng);
                policy.observe(k, reward(k), &mut rng);
                k
            })
            .collect()
    }

    fn drops(path: &[usize]) -> usize {
        path.windows(2).filter(|w| w[1] < w[0]).count()
    }

    #[test]
    fn explore_then_commit_shape() {
        let horizon = 1000;
        let mut leap = Leap::new(horizon, 100);
        let path = play(&mut leap, horizon, |k| if k == 1 { 0.6 } else { 0.3 });
        let n = 100; // ceil(1000^(2/3))
        assert!(path[..n].iter().all(|&k| k == 0));
        assert!(path[n..2 * n].iter().all(|&k| k == 1));
        assert!(path[2 * n..].iter().all(|&k| k == 1));
        assert_eq!(leap.phase_count(), 3);
    }

    #[test]
    fn phased_leap_eliminates_worse_price() {
        let horizon = 20_000;
        let mut leap = Leap::new(horizon, 10);
        let path = play(&mut leap, horizon, |k| if k == 0 { 1.0 / 3.0 } else { 0.1 });
        assert_eq!(leap.survivor(), Some(0));
        // Phase 1 starts on the lower price and splits evenly.
        let t1 = leap.schedule().phase_ends[0] as usize;
        assert!(path[..t1.div_ceil(2)].iter().all(|&k| k == 0));
        assert!(path[t1.div_ceil(2)..t1].iter().all(|&k| k == 1));
        assert!(path[path.len() - 100..].iter().all(|&k| k == 0));
        assert!(drops(&path) <= 2 * leap.schedule().phases);
    }

    #[test]
    fn leap_tests_use_first_samples_only() {
        // Equal rewards never trigger elimination.
        let horizon = 5000;
        let mut leap = Leap::new(horizon, 5);
        let path = play(&mut leap, horizon, |_| 0.4);
        assert_eq!(leap.survivor(), None);
        let ones = path.iter().filter(|&&k| k == 1).count();
        assert!((ones as i64 - (horizon / 2) as i64).abs() <= leap.schedule().phases as i64);
    }

    #[test]
    fn multi_splits_phase_evenly() {
        let horizon = 20_000;
        let mut leap = LeapMulti::new(5, horizon);
        let path = play(&mut leap, horizon, |_| 0.3);
        let t1 = leap.schedule.phase_ends[0] as usize;
        // First phase has no data: ascending order, equal split.
        let mut expected = Vec::new();
        for k in 0..5 {
            let n = t1 / 5 + usize::from(k < t1 % 5);
            expected.extend(std::iter::repeat_n(k, n));
        }
        assert_eq!(&path[..t1], &expected[..]);
    }

    #[test]
    fn multi_plays_descending_means_and_eliminates() {
        let horizon = 20_000;
        let rewards = [0.1, 0.5, 0.3];
        let mut leap = LeapMulti::new(3, horizon);
        let path = play(&mut leap, horizon, |k| rewards[k]);
        let t1 = leap.schedule.phase_ends[0] as usize;
        assert_eq!(path[t1], 1);
        assert_eq!(leap.survivors(), &[1]);
        assert!(path[path.len() - 10..].iter().all(|&k| k == 1));
    }
}
