//! Monte Carlo regret harness.
//!
//! A trial runs a policy and the oracle side by side over the same horizon.
//! Instantaneous regret is the per-slot reward difference; the harness
//! averages it over trials. With coupling on, both processes read one
//! environment stream that yields `U(t)` and `V(t)` every slot: a slot
//! succeeds iff `U(t) < p` of the scheduled source, and the update is
//! accurate iff `V(t) < q`.
//!
//! Trials may run on any number of threads; the reduction always folds
//! trials in index order, so results are bit-identical for a given seed.

use std::ops::Range;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::model::{DrawDiscipline, ModelError, MonitorState, ServiceProcess, SlotOutcome, SystemConfig};
use crate::oracle::{optimal_source, warm_state};
use crate::policies::{PolicyConfig, PolicyError, PolicyKind, Scheduler};
use crate::rng::{stream, trial_seed, StreamRole};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("at least one trial is required")]
    NoTrials,
    #[error("sweep has no cases")]
    EmptySweep,
    #[error("sweep case {case} differs from case 0 in {what}")]
    InconsistentCases { case: usize, what: &'static str },
    #[error("checkpoint {checkpoint} lies outside the horizon {horizon}")]
    CheckpointOutOfRange { checkpoint: u64, horizon: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct RunOptions {
    pub coupled: bool,
    /// Oracle slots played (and discarded) before slot 1.
    pub warmup: u64,
}

impl RunOptions {
    pub fn coupled(coupled: bool) -> Self {
        Self { coupled, warmup: 0 }
    }
}

/// Full record of one trial.
#[derive(Debug, Clone, Serialize)]
pub struct TrialTrace {
    pub policy: Vec<SlotOutcome>,
    pub oracle: Vec<SlotOutcome>,
    /// `r*(t) - r(t)` per slot; single paths may be negative.
    pub regret: Vec<f64>,
    pub committed: Option<usize>,
    pub observations: u64,
}

/// Runs `scheduler` and the oracle for one trial and hands each slot pair to
/// `sink`. Returns the scheduler for inspection.
pub fn drive<S, F>(config: &SystemConfig, mut scheduler: S, seed: u64, options: RunOptions, mut sink: F) -> S
where
    S: std::ops::DerefMut<Target = dyn Scheduler>,
    F: FnMut(u64, &SlotOutcome, &SlotOutcome),
{
    let best = optimal_source(config).best_index;
    let sources = config.sources();
    let d = config.d();
    let (mut policy_env, mut oracle_env) = if options.coupled {
        (
            ServiceProcess::new(stream(seed, StreamRole::Environment), DrawDiscipline::Coupled),
            ServiceProcess::new(stream(seed, StreamRole::Environment), DrawDiscipline::Coupled),
        )
    } else {
        (
            ServiceProcess::new(stream(seed, StreamRole::Environment), DrawDiscipline::Lazy),
            ServiceProcess::new(stream(seed, StreamRole::OracleEnvironment), DrawDiscipline::Lazy),
        )
    };
    let mut policy_rng = stream(seed, StreamRole::Policy);
    let mut policy_state = MonitorState::initial();
    let mut oracle_state = if options.warmup > 0 {
        warm_state(config, options.warmup, stream(seed, StreamRole::Warmup))
    } else {
        MonitorState::initial()
    };

    for t in 1..=config.horizon() {
        let arm = scheduler.select(t, &mut policy_rng);
        assert!(arm < sources.len(), "scheduler picked source {arm} of {}", sources.len());
        let (p_out, p_next) = policy_env.serve(&policy_state, arm, &sources[arm], d);
        scheduler.observe(&p_out);
        policy_state = p_next;
        let (o_out, o_next) = oracle_env.serve(&oracle_state, best, &sources[best], d);
        oracle_state = o_next;
        sink(t, &p_out, &o_out);
    }
    scheduler
}

pub fn run_trial(
    config: &SystemConfig,
    policy: &PolicyConfig,
    seed: u64,
    coupled: bool,
) -> Result<TrialTrace, ExperimentError> {
    run_trial_with(config, policy, seed, RunOptions::coupled(coupled))
}

pub fn run_trial_with(
    config: &SystemConfig,
    policy: &PolicyConfig,
    seed: u64,
    options: RunOptions,
) -> Result<TrialTrace, ExperimentError> {
    let scheduler = policy.build(config)?;
    let n = config.horizon() as usize;
    let mut trace = TrialTrace {
        policy: Vec::with_capacity(n),
        oracle: Vec::with_capacity(n),
        regret: Vec::with_capacity(n),
        committed: None,
        observations: 0,
    };
    let scheduler = drive(config, scheduler, seed, options, |_, p, o| {
        trace.regret.push(o.reward_after - p.reward_after);
        trace.policy.push(*p);
        trace.oracle.push(*o);
    });
    trace.committed = scheduler.committed_arm();
    trace.observations = scheduler.observation_count();
    Ok(trace)
}

struct TrialSummary {
    regret: Vec<f64>,
    pulls: Vec<u64>,
    committed: Option<usize>,
}

fn summarize_trial(
    config: &SystemConfig,
    policy: &PolicyConfig,
    seed: u64,
    options: RunOptions,
) -> Result<TrialSummary, ExperimentError> {
    let scheduler = policy.build(config)?;
    let mut regret = Vec::with_capacity(config.horizon() as usize);
    let mut pulls = vec![0u64; config.num_sources()];
    let scheduler = drive(config, scheduler, seed, options, |_, p, o| {
        regret.push(o.reward_after - p.reward_after);
        pulls[p.arm] += 1;
    });
    Ok(TrialSummary { regret, pulls, committed: scheduler.committed_arm() })
}

/// Per-slot running mean and second moment, folded in trial order.
#[derive(Debug, Clone)]
struct Welford {
    n: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Welford {
    fn new(len: usize) -> Self {
        Self { n: 0, mean: vec![0.0; len], m2: vec![0.0; len] }
    }

    fn push(&mut self, xs: impl Iterator<Item = f64>) {
        self.n += 1;
        let n = self.n as f64;
        for ((x, mean), m2) in xs.zip(self.mean.iter_mut()).zip(self.m2.iter_mut()) {
            let delta = x - *mean;
            *mean += delta / n;
            *m2 += delta * (x - *mean);
        }
    }

    fn stderr(&self) -> Vec<f64> {
        if self.n < 2 {
            return vec![0.0; self.mean.len()];
        }
        let n = self.n as f64;
        self.m2.iter().map(|m2| (m2 / (n - 1.0) / n).sqrt()).collect()
    }
}

/// Neumaier-compensated running sum.
fn compensated_prefix_sums(xs: &[f64]) -> Vec<f64> {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    xs.iter()
        .map(|&x| {
            let t = sum + x;
            if sum.abs() >= x.abs() {
                comp += (sum - t) + x;
            } else {
                comp += (x - t) + sum;
            }
            sum = t;
            sum + comp
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretSeries {
    /// Mean over trials of `r*(t) - r(t)`, index `t - 1`.
    pub instantaneous: Vec<f64>,
    /// Running sum of `instantaneous`.
    pub cumulative: Vec<f64>,
    /// Standard error of each instantaneous mean.
    pub stderr: Vec<f64>,
    /// Standard error of the per-trial cumulative regret at each slot.
    pub cumulative_stderr: Vec<f64>,
    pub n_trials: u64,
}

impl RegretSeries {
    pub fn len(&self) -> usize {
        self.instantaneous.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instantaneous.is_empty()
    }

    pub fn final_cumulative(&self) -> f64 {
        *self.cumulative.last().expect("non-empty series")
    }

    /// Cumulative regret at 1-based slot `t`.
    pub fn cumulative_at(&self, t: u64) -> f64 {
        self.cumulative[(t - 1) as usize]
    }

    /// Mean instantaneous regret over 1-based slots `from..=to`.
    pub fn mean_instantaneous(&self, from: u64, to: u64) -> f64 {
        let window = &self.instantaneous[(from - 1) as usize..to as usize];
        window.iter().sum::<f64>() / window.len() as f64
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MonteCarloReport {
    pub policy: PolicyKind,
    pub series: RegretSeries,
    /// Times each source was scheduled, summed over trials.
    pub pulls: Vec<u64>,
    /// Trials that committed to each source; all zero for non-committing policies.
    pub committed: Vec<u64>,
    pub explore_slots: Option<u64>,
}

impl MonteCarloReport {
    pub fn committed_fraction(&self, arm: usize) -> f64 {
        self.committed[arm] as f64 / self.series.n_trials as f64
    }
}

const CHUNK: usize = 32;

pub fn monte_carlo(
    config: &SystemConfig,
    policy: &PolicyConfig,
    n_trials: u64,
    base_seed: u64,
    coupled: bool,
) -> Result<MonteCarloReport, ExperimentError> {
    monte_carlo_trials(config, policy, 0..n_trials, base_seed, RunOptions::coupled(coupled))
}

/// Monte Carlo over an explicit range of trial indices. Trial `i` always uses
/// seed `trial_seed(base_seed, i)`, so disjoint ranges give disjoint trials.
pub fn monte_carlo_trials(
    config: &SystemConfig,
    policy: &PolicyConfig,
    trials: Range<u64>,
    base_seed: u64,
    options: RunOptions,
) -> Result<MonteCarloReport, ExperimentError> {
    if trials.is_empty() {
        return Err(ExperimentError::NoTrials);
    }
    let explore_slots = match policy.kind {
        PolicyKind::Etc => Some(policy.resolve_explore(config)?),
        _ => None,
    };
    let len = config.horizon() as usize;
    let k = config.num_sources();
    let mut inst = Welford::new(len);
    let mut cum = Welford::new(len);
    let mut pulls = vec![0u64; k];
    let mut committed = vec![0u64; k];

    let indices: Vec<u64> = trials.collect();
    for chunk in indices.chunks(CHUNK) {
        let summaries = chunk
            .par_iter()
            .map(|&i| summarize_trial(config, policy, trial_seed(base_seed, i), options))
            .collect::<Result<Vec<_>, _>>()?;
        for s in summaries {
            inst.push(s.regret.iter().copied());
            let mut running = 0.0;
            cum.push(s.regret.iter().map(|r| {
                running += r;
                running
            }));
            for (total, p) in pulls.iter_mut().zip(&s.pulls) {
                *total += p;
            }
            if let Some(arm) = s.committed {
                committed[arm] += 1;
            }
        }
    }

    let series = RegretSeries {
        cumulative: compensated_prefix_sums(&inst.mean),
        stderr: inst.stderr(),
        cumulative_stderr: cum.stderr(),
        n_trials: inst.n,
        instantaneous: inst.mean,
    };
    Ok(MonteCarloReport { policy: policy.kind, series, pulls, committed, explore_slots })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    DeltaCases,
    PCases,
    QCases,
    DGrid,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::DeltaCases => "delta_cases",
            SweepAxis::PCases => "p_cases",
            SweepAxis::QCases => "q_cases",
            SweepAxis::DGrid => "d_grid",
        }
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "delta_cases" => Ok(SweepAxis::DeltaCases),
            "p_cases" => Ok(SweepAxis::PCases),
            "q_cases" => Ok(SweepAxis::QCases),
            "d_grid" => Ok(SweepAxis::DGrid),
            other => Err(format!("unknown sweep axis `{other}` (expected delta_cases, p_cases, q_cases or d_grid)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCase {
    pub label: String,
    pub config: SystemConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub cases: Vec<SweepCase>,
    pub checkpoint: u64,
}

fn two_source_cases(pairs: &[([f64; 2], [f64; 2], f64)], horizon: u64, seed: u64) -> Vec<SweepCase> {
    pairs
        .iter()
        .enumerate()
        .map(|(i, (p, q, d))| SweepCase {
            label: format!("case {}", i + 1),
            config: SystemConfig::from_pq(p, q, *d, horizon, seed).expect("preset parameters are valid"),
        })
        .collect()
}

impl SweepSpec {
    fn preset(axis: SweepAxis, pairs: &[([f64; 2], [f64; 2], f64)], horizon: u64, seed: u64) -> Self {
        Self { axis, cases: two_source_cases(pairs, horizon, seed), checkpoint: horizon }
    }

    /// Both transmission probabilities shrink, `q = [0.8, 0.8]`, `d = 0.7`.
    pub fn p_cases(horizon: u64, seed: u64) -> Self {
        let q = [0.8, 0.8];
        let pairs = [
            ([0.9, 0.5], q, 0.7),
            ([0.8, 0.4], q, 0.7),
            ([0.7, 0.3], q, 0.7),
            ([0.6, 0.2], q, 0.7),
            ([0.5, 0.1], q, 0.7),
        ];
        Self::preset(SweepAxis::PCases, &pairs, horizon, seed)
    }

    /// Both accuracies shrink, `p = [0.8, 0.8]`, `d = 0.7`. The gap stays fixed.
    pub fn q_cases(horizon: u64, seed: u64) -> Self {
        let p = [0.8, 0.8];
        let pairs = [
            (p, [0.9, 0.5], 0.7),
            (p, [0.8, 0.4], 0.7),
            (p, [0.7, 0.3], 0.7),
            (p, [0.6, 0.2], 0.7),
            (p, [0.5, 0.1], 0.7),
        ];
        Self::preset(SweepAxis::QCases, &pairs, horizon, seed)
    }

    /// `p = [0.8, 0.5]`, `q = [0.2, 0.8]` over a grid of `d`.
    pub fn d_grid(horizon: u64, seed: u64) -> Self {
        let pairs: Vec<_> = [0.1, 0.3, 0.5, 0.7, 0.9].iter().map(|&d| ([0.8, 0.5], [0.2, 0.8], d)).collect();
        Self::preset(SweepAxis::DGrid, &pairs, horizon, seed)
    }

    /// Two sources with a fixed best source and a second source of
    /// decreasing accuracy, so the gap grows case by case.
    pub fn delta_cases(horizon: u64, seed: u64) -> Self {
        let p = [0.9, 0.9];
        let pairs: Vec<_> = [0.7, 0.6, 0.5, 0.4, 0.3, 0.2].iter().map(|&q2| (p, [0.9, q2], 0.5)).collect();
        Self::preset(SweepAxis::DeltaCases, &pairs, horizon, seed)
    }

    fn validate(&self) -> Result<(), ExperimentError> {
        let first = self.cases.first().ok_or(ExperimentError::EmptySweep)?;
        for (i, case) in self.cases.iter().enumerate().skip(1) {
            if case.config.num_sources() != first.config.num_sources() {
                return Err(ExperimentError::InconsistentCases { case: i, what: "number of sources" });
            }
            if case.config.horizon() != first.config.horizon() {
                return Err(ExperimentError::InconsistentCases { case: i, what: "horizon" });
            }
        }
        let horizon = first.config.horizon();
        if self.checkpoint == 0 || self.checkpoint > horizon {
            return Err(ExperimentError::CheckpointOutOfRange { checkpoint: self.checkpoint, horizon });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub case: usize,
    pub label: String,
    pub delta: Option<f64>,
    pub policy: PolicyKind,
    pub cumulative_regret: f64,
    pub stderr: f64,
}

/// One row per (case, policy): cumulative regret at the checkpoint. Every
/// case and policy uses the same trial seeds.
pub fn sweep(
    spec: &SweepSpec,
    policies: &[PolicyConfig],
    n_trials: u64,
    base_seed: u64,
    options: RunOptions,
) -> Result<Vec<SweepRow>, ExperimentError> {
    spec.validate()?;
    let mut rows = vec![];
    for (i, case) in spec.cases.iter().enumerate() {
        let delta = optimal_source(&case.config).gap;
        for policy in policies {
            let report = monte_carlo_trials(&case.config, policy, 0..n_trials, base_seed, options)?;
            let at = (spec.checkpoint - 1) as usize;
            rows.push(SweepRow {
                case: i,
                label: case.label.clone(),
                delta,
                policy: policy.kind,
                cumulative_regret: report.series.cumulative[at],
                stderr: report.series.cumulative_stderr[at],
            });
        }
    }
    Ok(rows)
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}
