//! Results shared by the engines.

use std::time::Duration;

use crate::model::Threshold;

/// Counters and timings of one query. Counters are deterministic; timings
/// are not.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Stats {
    /// Symbolic states of the maximising exploration.
    pub states_max: Option<usize>,
    /// Symbolic states of the exploration behind a minimum.
    pub states_min: Option<usize>,
    pub transitions: usize,
    /// Iterations of the divergence fixpoint.
    pub iter_maxv: Option<usize>,
    /// Outer iterations of the almost-sure analyses, summed.
    pub iter_maxu1: Option<usize>,
    /// Duration parameter of the divergence fixpoint.
    pub c: Option<i64>,
    pub sweeps: usize,
    pub digital_states: Option<usize>,
    pub time_max: Duration,
    pub time_min: Duration,
    pub time_explore: Duration,
    pub time_qualitative: Duration,
    pub time_value_iteration: Duration,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbResult {
    pub probability: f64,
    pub verdict: Option<bool>,
    pub stats: Stats,
}

impl ProbResult {
    /// Records the outcome of comparing the probability with `t`.
    pub fn evaluate_threshold(&mut self, t: &Threshold, tolerance: f64) -> bool {
        let v = t.holds(self.probability, tolerance);
        self.verdict = Some(v);
        v
    }
}
