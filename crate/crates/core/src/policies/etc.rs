use serde::Serialize;

use super::estimator::EstimatorState;
use super::Scheduler;
use crate::model::SlotOutcome;
use crate::rng::SimRng;

/// Explore-then-commit.
///
/// Slots `1..=T_E` visit the sources round-robin. At slot `T_E + 1` the
/// empirical best source is chosen once and scheduled for the rest of the run.
#[derive(Debug, Clone, Serialize)]
pub struct ExploreThenCommit {
    d: f64,
    explore_slots: u64,
    estimator: EstimatorState,
    committed: Option<usize>,
}

impl ExploreThenCommit {
    pub fn new(num_sources: usize, d: f64, explore_slots: u64) -> Self {
        Self { d, explore_slots, estimator: EstimatorState::new(num_sources), committed: None }
    }

    pub fn explore_slots(&self) -> u64 {
        self.explore_slots
    }

    pub fn estimator(&self) -> &EstimatorState {
        &self.estimator
    }
}

impl Scheduler for ExploreThenCommit {
    fn select(&mut self, t: u64, _rng: &mut SimRng) -> usize {
        let k = self.estimator.arms().len();
        if t <= self.explore_slots {
            return ((t - 1) % k as u64) as usize;
        }
        let d = self.d;
        let estimator = &self.estimator;
        *self.committed.get_or_insert_with(|| crate::argmax_lowest(estimator.mu_hats(d)))
    }

    fn observe(&mut self, outcome: &SlotOutcome) {
        if self.committed.is_none() {
            self.estimator.record(outcome);
        }
    }

    fn committed_arm(&self) -> Option<usize> {
        self.committed
    }

    fn observation_count(&self) -> u64 {
        self.estimator.total_updates()
    }
}
