use rand::Rng;
use serde::{Deserialize, Serialize};

use super::estimator::EstimatorState;
use super::Scheduler;
use crate::model::SlotOutcome;
use crate::rng::SimRng;

/// Annealed exploration probability `min(1, 3 K ln^2 t / t)`.
pub fn epsilon_schedule(t: u64, num_sources: usize) -> f64 {
    annealed(3.0, t, num_sources)
}

fn annealed(scale: f64, t: u64, num_sources: usize) -> f64 {
    let t = t as f64;
    let ln = t.ln();
    (scale * num_sources as f64 * ln * ln / t).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonSchedule {
    /// `min(1, scale K ln^2 t / t)`; the default scale is 3.
    Annealed {
        scale: f64,
    },
    Fixed(f64),
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        EpsilonSchedule::Annealed { scale: 3.0 }
    }
}

impl EpsilonSchedule {
    pub fn at(&self, t: u64, num_sources: usize) -> f64 {
        match *self {
            EpsilonSchedule::Annealed { scale } => annealed(scale, t, num_sources),
            EpsilonSchedule::Fixed(eps) => eps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotKind {
    Explore,
    Exploit,
}

/// Epsilon-greedy over the plug-in arm quality.
///
/// Only exploration slots feed the estimator; exploitation slots are ignored
/// when updating the estimates.
#[derive(Debug, Clone, Serialize)]
pub struct EpsilonGreedy {
    d: f64,
    schedule: EpsilonSchedule,
    estimator: EstimatorState,
    mu_hat: Vec<f64>,
    pending: Option<(usize, SlotKind)>,
    explore_slots: u64,
}

impl EpsilonGreedy {
    pub fn new(num_sources: usize, d: f64, schedule: EpsilonSchedule) -> Self {
        Self {
            d,
            schedule,
            estimator: EstimatorState::new(num_sources),
            mu_hat: vec![0.0; num_sources],
            pending: None,
            explore_slots: 0,
        }
    }

    /// Picks the source for slot `t` and reports whether it explored.
    ///
    /// Draws one uniform for the explore coin, and one source index only on
    /// exploration.
    pub fn select_tagged(&mut self, t: u64, rng: &mut SimRng) -> (usize, SlotKind) {
        let k = self.mu_hat.len();
        let eps = self.schedule.at(t, k);
        let coin: f64 = rng.random();
        let choice = if coin < eps {
            self.explore_slots += 1;
            (rng.random_range(0..k), SlotKind::Explore)
        } else {
            (crate::argmax_lowest(self.mu_hat.iter().copied()), SlotKind::Exploit)
        };
        self.pending = Some(choice);
        choice
    }

    pub fn explore_slots(&self) -> u64 {
        self.explore_slots
    }

    pub fn estimator(&self) -> &EstimatorState {
        &self.estimator
    }

    pub fn mu_hat(&self) -> &[f64] {
        &self.mu_hat
    }
}

impl Scheduler for EpsilonGreedy {
    fn select(&mut self, t: u64, rng: &mut SimRng) -> usize {
        self.select_tagged(t, rng).0
    }

    fn observe(&mut self, outcome: &SlotOutcome) {
        if let Some((arm, SlotKind::Explore)) = self.pending.take() {
            debug_assert_eq!(arm, outcome.arm);
            self.estimator.record(outcome);
            self.mu_hat[arm] = self.estimator.arm(arm).mu_hat(self.d);
        }
    }

    fn observation_count(&self) -> u64 {
        self.estimator.total_updates()
    }
}
