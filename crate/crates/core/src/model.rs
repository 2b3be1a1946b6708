//! Slot dynamics of the source/channel/monitor system.
//!
//! Reward timing follows the scheduling loop: the monitor state reported for
//! slot `t` already reflects the transmission attempted in slot `t`. On a
//! success the age resets to 1 and the reward is the fresh measurement bit;
//! on a failure the age grows by one and the stored measurement is
//! depreciated once more.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("probability {name} = {value} must lie in [0, 1]")]
    ProbabilityOutOfRange { name: &'static str, value: f64 },
    #[error("depreciating factor must lie strictly inside (0,1), got {0}")]
    DepreciationOutOfRange(f64),
    #[error("at least one source is required")]
    NoSources,
    #[error("horizon must be at least one slot")]
    ZeroHorizon,
}

/// Transmission success probability `p` and measurement accuracy `q` of one source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceParams {
    p: f64,
    q: f64,
}

impl SourceParams {
    pub fn new(p: f64, q: f64) -> Result<Self, ModelError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(ModelError::ProbabilityOutOfRange { name: "p", value: p });
        }
        if !(0.0..=1.0).contains(&q) {
            return Err(ModelError::ProbabilityOutOfRange { name: "q", value: q });
        }
        Ok(Self { p, q })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }
}

/// Depreciating factor `d`, strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Depreciation(f64);

impl Depreciation {
    pub fn new(d: f64) -> Result<Self, ModelError> {
        if d > 0.0 && d < 1.0 {
            Ok(Self(d))
        } else {
            Err(ModelError::DepreciationOutOfRange(d))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Depreciation {
    type Error = ModelError;
    fn try_from(d: f64) -> Result<Self, Self::Error> {
        Self::new(d)
    }
}

impl From<Depreciation> for f64 {
    fn from(d: Depreciation) -> f64 {
        d.0
    }
}

/// A problem instance plus horizon and seed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemConfig {
    sources: Vec<SourceParams>,
    d: Depreciation,
    horizon: u64,
    seed: u64,
}

impl SystemConfig {
    pub fn new(sources: Vec<SourceParams>, d: Depreciation, horizon: u64, seed: u64) -> Result<Self, ModelError> {
        if sources.is_empty() {
            return Err(ModelError::NoSources);
        }
        if horizon == 0 {
            return Err(ModelError::ZeroHorizon);
        }
        Ok(Self { sources, d, horizon, seed })
    }

    /// Builds a config from parallel `p` and `q` slices.
    ///
    /// Panics if the slices differ in length; the config parser checks that
    /// case with a proper diagnostic.
    pub fn from_pq(p: &[f64], q: &[f64], d: f64, horizon: u64, seed: u64) -> Result<Self, ModelError> {
        assert_eq!(p.len(), q.len(), "p and q must have the same length");
        let sources = p.iter().zip(q).map(|(&p, &q)| SourceParams::new(p, q)).collect::<Result<Vec<_>, _>>()?;
        Self::new(sources, Depreciation::new(d)?, horizon, seed)
    }

    pub fn sources(&self) -> &[SourceParams] {
        &self.sources
    }

    pub fn num_sources(&self) -> usize {
        self.sources.len()
    }

    pub fn d(&self) -> Depreciation {
        self.d
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_horizon(&self, horizon: u64) -> Result<Self, ModelError> {
        Self::new(self.sources.clone(), self.d, horizon, self.seed)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

/// What the monitor holds at the end of a slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonitorState {
    pub age: u64,
    pub last_update: bool,
    pub reward: f64,
}

impl MonitorState {
    /// State at slot 0: age 0, nothing received, zero reward.
    pub const fn initial() -> Self {
        Self { age: 0, last_update: false, reward: 0.0 }
    }
}

impl Default for MonitorState {
    fn default() -> Self {
        Self::initial()
    }
}

/// Result of scheduling `arm` for one slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlotOutcome {
    pub arm: usize,
    pub transmitted: bool,
    /// Measurement bit, present only when the transmission succeeded.
    pub update: Option<bool>,
    pub age_after: u64,
    pub reward_after: f64,
}

pub fn step_age(prev_age: u64, transmitted: bool) -> u64 {
    if transmitted {
        1
    } else {
        prev_age + 1
    }
}

/// `last_update * d^(age - 1)`.
pub fn step_reward(last_update: bool, age: u64, d: f64) -> f64 {
    debug_assert!(age >= 1);
    if !last_update {
        return 0.0;
    }
    match i32::try_from(age - 1) {
        Ok(n) => d.powi(n),
        Err(_) => 0.0,
    }
}

/// Applies one slot given the channel uniform `u` and a lazily drawn
/// accuracy uniform. The transmission succeeds iff `u < p`, the update is
/// accurate iff `v < q`.
pub fn resolve_slot<F>(
    state: &MonitorState,
    arm: usize,
    source: &SourceParams,
    d: Depreciation,
    u: f64,
    accuracy: F,
) -> (SlotOutcome, MonitorState)
where
    F: FnOnce() -> f64,
{
    let transmitted = u < source.p;
    let age = step_age(state.age, transmitted);
    let (update, last_update) = if transmitted {
        let bit = accuracy() < source.q;
        (Some(bit), bit)
    } else {
        (None, state.last_update)
    };
    let reward = step_reward(last_update, age, d.get());
    let next = MonitorState { age, last_update, reward };
    let outcome = SlotOutcome { arm, transmitted, update, age_after: age, reward_after: reward };
    (outcome, next)
}

/// Simulates one slot. Consumes one uniform for the channel and a second one
/// only when the transmission succeeds.
pub fn simulate_slot<R: Rng + ?Sized>(
    state: &MonitorState,
    arm: usize,
    source: &SourceParams,
    d: Depreciation,
    rng: &mut R,
) -> (SlotOutcome, MonitorState) {
    let u: f64 = rng.random();
    resolve_slot(state, arm, source, d, u, || rng.random())
}

/// How a [`ServiceProcess`] consumes its stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DrawDiscipline {
    /// Channel uniform every slot, accuracy uniform only on success.
    Lazy,
    /// Both uniforms `U(t)`, `V(t)` every slot, so two processes reading the
    /// same stream stay aligned slot by slot regardless of the arms they pick.
    Coupled,
}

/// Environment that serves scheduling decisions from a random stream.
#[derive(Debug, Clone)]
pub struct ServiceProcess<R> {
    rng: R,
    discipline: DrawDiscipline,
}

impl<R: Rng> ServiceProcess<R> {
    pub fn new(rng: R, discipline: DrawDiscipline) -> Self {
        Self { rng, discipline }
    }

    pub fn discipline(&self) -> DrawDiscipline {
        self.discipline
    }

    pub fn serve(
        &mut self,
        state: &MonitorState,
        arm: usize,
        source: &SourceParams,
        d: Depreciation,
    ) -> (SlotOutcome, MonitorState) {
        match self.discipline {
            DrawDiscipline::Lazy => simulate_slot(state, arm, source, d, &mut self.rng),
            DrawDiscipline::Coupled => {
                let u: f64 = self.rng.random();
                let v: f64 = self.rng.random();
                resolve_slot(state, arm, source, d, u, || v)
            }
        }
    }
}
