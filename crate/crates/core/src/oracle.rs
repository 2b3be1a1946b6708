//! Arm quality and the oracle baseline.
//!
//! Scheduling source `k` forever yields a steady-state mean reward of
//! `p_k q_k / (1 - d (1 - p_k))`: the age in steady state is geometric with
//! success probability `p_k`, and the received bit is accurate with
//! probability `q_k`. The oracle always schedules the argmax of that quantity.

use rand::Rng;
use serde::Serialize;

use crate::model::{DrawDiscipline, MonitorState, ServiceProcess, SlotOutcome, SystemConfig};

/// Steady-state mean reward of always scheduling a source with `(p, q)`.
///
/// The denominator is at least `1 - d > 0`.
pub fn mu(p: f64, q: f64, d: f64) -> f64 {
    p * q / (1.0 - d * (1.0 - p))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmQuality {
    pub mu: Vec<f64>,
    pub best_index: usize,
    /// `mu[best] - max_{k != best} mu[k]`; `None` for a single source.
    pub gap: Option<f64>,
}

impl ArmQuality {
    pub fn mu_star(&self) -> f64 {
        self.mu[self.best_index]
    }
}

pub fn optimal_source(config: &SystemConfig) -> ArmQuality {
    let d = config.d().get();
    let mu: Vec<f64> = config.sources().iter().map(|s| self::mu(s.p(), s.q(), d)).collect();
    let best_index = crate::argmax_lowest(mu.iter().copied());
    let gap = (mu.len() >= 2).then(|| {
        let runner_up =
            mu.iter().enumerate().filter(|&(k, _)| k != best_index).map(|(_, &m)| m).fold(f64::NEG_INFINITY, f64::max);
        mu[best_index] - runner_up
    });
    ArmQuality { mu, best_index, gap }
}

/// Oracle trace of `config.horizon()` slots with a cold start.
pub fn run_oracle<R: Rng>(config: &SystemConfig, rng: R) -> Vec<SlotOutcome> {
    let mut process = ServiceProcess::new(rng, DrawDiscipline::Lazy);
    run_oracle_from(config, MonitorState::initial(), &mut process)
}

/// Oracle trace starting from `state`, drawing from `process`.
pub fn run_oracle_from<R: Rng>(
    config: &SystemConfig,
    mut state: MonitorState,
    process: &mut ServiceProcess<R>,
) -> Vec<SlotOutcome> {
    let best = optimal_source(config).best_index;
    let source = config.sources()[best];
    let d = config.d();
    (0..config.horizon())
        .map(|_| {
            let (outcome, next) = process.serve(&state, best, &source, d);
            state = next;
            outcome
        })
        .collect()
}

/// Plays `slots` oracle slots from a cold start and returns the final state,
/// approximating the steady state the oracle would be in at slot 0.
pub fn warm_state<R: Rng>(config: &SystemConfig, slots: u64, rng: R) -> MonitorState {
    let best = optimal_source(config).best_index;
    let source = config.sources()[best];
    let mut process = ServiceProcess::new(rng, DrawDiscipline::Lazy);
    let mut state = MonitorState::initial();
    for _ in 0..slots {
        state = process.serve(&state, best, &source, config.d()).1;
    }
    state
}
