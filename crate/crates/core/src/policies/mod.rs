//! Scheduling policies.
//!
//! All policies rank sources by the same quality functional as the oracle,
//! `PQ / (1 - d (1 - P))`, fed with estimates (ETC, epsilon-greedy),
//! confidence bounds (UCB) or posterior samples (Thompson sampling). Every
//! argmax breaks ties toward the lowest source index.

mod eps_greedy;
mod estimator;
mod etc;
mod thompson;
mod ucb;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use eps_greedy::{epsilon_schedule, EpsilonGreedy, EpsilonSchedule, SlotKind};
pub use estimator::{empirical_mu, ArmCounts, EstimatorState};
pub use etc::ExploreThenCommit;
pub use thompson::{ts_index, ThompsonSampling, TsArm};
pub use ucb::{ucb_index, Ucb};

use crate::bounds::{self, BoundsError};
use crate::model::{SlotOutcome, SystemConfig};
use crate::rng::SimRng;

/// A scheduler picks one source per slot and learns from what it sees.
///
/// `select` is called once per slot with `t` starting at 1, followed by
/// exactly one `observe` with the outcome of that slot.
pub trait Scheduler: Send {
    fn select(&mut self, t: u64, rng: &mut SimRng) -> usize;

    fn observe(&mut self, outcome: &SlotOutcome);

    /// Source committed to, for policies that commit.
    fn committed_arm(&self) -> Option<usize> {
        None
    }

    /// Number of outcomes folded into the policy's statistics.
    fn observation_count(&self) -> u64;
}

/// Always schedules the same source. With the optimal source this is the
/// oracle expressed as a policy.
#[derive(Debug, Clone)]
pub struct FixedArm {
    arm: usize,
    observed: u64,
}

impl FixedArm {
    pub fn new(arm: usize) -> Self {
        Self { arm, observed: 0 }
    }
}

impl Scheduler for FixedArm {
    fn select(&mut self, _t: u64, _rng: &mut SimRng) -> usize {
        self.arm
    }

    fn observe(&mut self, _outcome: &SlotOutcome) {
        self.observed += 1;
    }

    fn observation_count(&self) -> u64 {
        self.observed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Etc,
    EpsGreedy,
    Ucb,
    Ts,
    /// The oracle scheduled as a policy, for self-comparison runs.
    Oracle,
}

impl PolicyKind {
    pub const LEARNING: [PolicyKind; 4] = [PolicyKind::Etc, PolicyKind::EpsGreedy, PolicyKind::Ucb, PolicyKind::Ts];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Etc => "etc",
            PolicyKind::EpsGreedy => "eps_greedy",
            PolicyKind::Ucb => "ucb",
            PolicyKind::Ts => "ts",
            PolicyKind::Oracle => "oracle",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown policy `{0}` (expected etc, eps_greedy, ucb, ts or oracle)")]
pub struct UnknownPolicy(pub String);

impl FromStr for PolicyKind {
    type Err = UnknownPolicy;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "etc" => Ok(PolicyKind::Etc),
            "eps_greedy" | "epsilon_greedy" | "eps-greedy" => Ok(PolicyKind::EpsGreedy),
            "ucb" => Ok(PolicyKind::Ucb),
            "ts" | "thompson" => Ok(PolicyKind::Ts),
            "oracle" => Ok(PolicyKind::Oracle),
            _ => Err(UnknownPolicy(s.to_string())),
        }
    }
}

/// Length of the ETC exploration phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExploreLength {
    Fixed(u64),
    /// `round(c ln T)`, clamped to `[K, T - 1]`.
    Auto,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("ETC exploration of {te} slots cannot visit all {k} sources")]
    ExploreTooShort { te: u64, k: usize },
    #[error("ETC exploration of {te} slots must end before the horizon {horizon}")]
    ExploreTooLong { te: u64, horizon: u64 },
    #[error(transparent)]
    Bounds(#[from] BoundsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    pub t_explore: ExploreLength,
    pub epsilon: EpsilonSchedule,
}

impl PolicyConfig {
    pub fn new(kind: PolicyKind) -> Self {
        Self { kind, t_explore: ExploreLength::Auto, epsilon: EpsilonSchedule::default() }
    }

    pub fn etc(te: u64) -> Self {
        Self { t_explore: ExploreLength::Fixed(te), ..Self::new(PolicyKind::Etc) }
    }

    /// Exploration length for `config`; validates fixed lengths.
    pub fn resolve_explore(&self, config: &SystemConfig) -> Result<u64, PolicyError> {
        let k = config.num_sources();
        let horizon = config.horizon();
        match self.t_explore {
            ExploreLength::Fixed(te) => {
                if te < k as u64 {
                    Err(PolicyError::ExploreTooShort { te, k })
                } else if te >= horizon {
                    Err(PolicyError::ExploreTooLong { te, horizon })
                } else {
                    Ok(te)
                }
            }
            ExploreLength::Auto => {
                let consts = bounds::instance_constants(config)?;
                Ok(bounds::etc_te_schedule(horizon, k, &consts)?.slots)
            }
        }
    }

    pub fn build(&self, config: &SystemConfig) -> Result<Box<dyn Scheduler>, PolicyError> {
        let k = config.num_sources();
        let d = config.d().get();
        Ok(match self.kind {
            PolicyKind::Etc => Box::new(ExploreThenCommit::new(k, d, self.resolve_explore(config)?)),
            PolicyKind::EpsGreedy => Box::new(EpsilonGreedy::new(k, d, self.epsilon)),
            PolicyKind::Ucb => Box::new(Ucb::new(k, d)),
            PolicyKind::Ts => Box::new(ThompsonSampling::new(k, d)),
            PolicyKind::Oracle => Box::new(FixedArm::new(crate::oracle::optimal_source(config).best_index)),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for kind in PolicyKind::LEARNING.into_iter().chain([PolicyKind::Oracle]) {
            assert_eq!(kind.name().parse::<PolicyKind>().unwrap(), kind);
        }
        assert!("greedy".parse::<PolicyKind>().is_err());
    }

    #[test]
    fn fixed_explore_is_validated() {
        let c = SystemConfig::from_pq(&[0.5; 4], &[0.5, 0.6, 0.7, 0.8], 0.5, 100, 0).unwrap();
        assert_eq!(PolicyConfig::etc(3).resolve_explore(&c), Err(PolicyError::ExploreTooShort { te: 3, k: 4 }));
        assert_eq!(
            PolicyConfig::etc(100).resolve_explore(&c),
            Err(PolicyError::ExploreTooLong { te: 100, horizon: 100 })
        );
        assert_eq!(PolicyConfig::etc(40).resolve_explore(&c), Ok(40));
    }

    #[test]
    fn auto_explore_is_clamped() {
        let c = SystemConfig::from_pq(&[0.65, 0.7, 0.75, 0.8], &[0.8, 0.75, 0.7, 0.65], 0.8, 30_000, 0).unwrap();
        assert_eq!(PolicyConfig::new(PolicyKind::Etc).resolve_explore(&c), Ok(29_999));
    }
}
