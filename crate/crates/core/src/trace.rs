use crate::market::StepOutcome;

/// Per-step record of an episode.
pub type Trace = Vec<StepOutcome>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SwitchCensus {
    /// Steps whose price is strictly below the previous step's.
    pub price_drop_steps: usize,
    /// Maximal runs of a constant price.
    pub constant_runs: usize,
}

/// Counts price drops in a trace. Only these steps can carry a refund.
pub fn switch_census(trace: &[StepOutcome]) -> SwitchCensus {
    let price_drop_steps = trace.windows(2).filter(|w| w[1].price < w[0].price).count();
    let constant_runs = if trace.is_empty() {
        0
    } else {
        1 + trace.windows(2).filter(|w| w[1].price_index != w[0].price_index).count()
    };
    SwitchCensus {
        price_drop_steps,
        constant_runs,
    }
}
