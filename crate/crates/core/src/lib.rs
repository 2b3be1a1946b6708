//! Scheduling of multiple inaccurate sources over a single unreliable channel.
//!
//! Each slot the scheduler picks one source. The source gets through the
//! channel with probability `p` and its measurement is correct with
//! probability `q`. The monitor earns the last received measurement,
//! depreciated by `d` per slot of Age-of-Information. The crate provides:
//!
//! - [`model`]: slot dynamics (AoI, depreciated reward, draw discipline).
//! - [`oracle`]: arm quality `p q / (1 - d (1 - p))`, the optimal source and
//!   the oracle baseline trajectory.
//! - [`policies`]: explore-then-commit, epsilon-greedy, UCB and Thompson
//!   sampling schedulers behind one [`policies::Scheduler`] trait.
//! - [`bounds`]: closed-form regret bound evaluators.
//! - [`experiment`]: Monte Carlo regret harness with common random numbers.
//! - [`config`], [`cli`], [`validate`]: the command-line front end.

pub mod bounds;
pub mod cli;
pub mod config;
pub mod experiment;
pub mod model;
pub mod oracle;
pub mod policies;
pub mod rng;
pub mod validate;

pub use model::{Depreciation, MonitorState, SlotOutcome, SourceParams, SystemConfig};
pub use oracle::{mu, optimal_source, ArmQuality};

/// Index of the largest value, lowest index on ties. NaN never wins.
///
/// Panics on an empty input.
pub fn argmax_lowest<I>(values: I) -> usize
where
    I: IntoIterator<Item = f64>,
{
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        match best {
            None => best = Some((i, if v.is_nan() { f64::NEG_INFINITY } else { v })),
            Some((_, b)) if v > b => best = Some((i, v)),
            _ => {}
        }
    }
    best.expect("argmax over an empty set").0
}
