//! Invariant suite behind `aoi-sched validate`.
//!
//! Every check runs over the instance from the config file and over a batch
//! of random instances. The slot stepper is a parameter so that a broken
//! model can be plugged in to make sure the suite actually notices.

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{etc_te_schedule, instance_constants, BoundsError};
use crate::experiment::{drive, RunOptions};
use crate::model::{resolve_slot, Depreciation, MonitorState, SlotOutcome, SourceParams, SystemConfig};
use crate::oracle::{mu, optimal_source};
use crate::policies::{
    ucb_index, EpsilonGreedy, EpsilonSchedule, ExploreThenCommit, FixedArm, Scheduler, SlotKind, ThompsonSampling, Ucb,
};
use crate::rng::{stream, trial_seed, SimRng, StreamRole};

/// One slot of the model: state, source, channel uniform `u`, accuracy
/// uniform `v`.
pub type Stepper = fn(&MonitorState, usize, &SourceParams, Depreciation, f64, f64) -> (SlotOutcome, MonitorState);

pub fn model_stepper(
    state: &MonitorState,
    arm: usize,
    source: &SourceParams,
    d: Depreciation,
    u: f64,
    v: f64,
) -> (SlotOutcome, MonitorState) {
    resolve_slot(state, arm, source, d, u, || v)
}

fn undepreciated_stepper(
    state: &MonitorState,
    arm: usize,
    source: &SourceParams,
    d: Depreciation,
    u: f64,
    v: f64,
) -> (SlotOutcome, MonitorState) {
    let (mut out, mut next) = resolve_slot(state, arm, source, d, u, || v);
    let r = if next.last_update { 1.0 } else { 0.0 };
    out.reward_after = r;
    next.reward = r;
    (out, next)
}

/// Deliberate model defects for checking the checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// The held measurement keeps its full value instead of decaying by `d`.
    RewardNotDepreciated,
}

impl Fault {
    pub fn stepper(self) -> Stepper {
        match self {
            Fault::RewardNotDepreciated => undepreciated_stepper,
        }
    }
}

impl std::str::FromStr for Fault {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "reward-not-depreciated" => Ok(Fault::RewardNotDepreciated),
            other => Err(format!("unknown fault `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Fast,
    Full,
}

impl std::str::FromStr for Level {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fast" => Ok(Level::Fast),
            "full" => Ok(Level::Full),
            other => Err(format!("unknown level `{other}` (expected fast or full)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    RewardRecursion,
    CountConsistency,
    TsPosteriorCounts,
    EpsGreedyFreeze,
    UcbOptimism,
    DeterministicReplay,
    CoupledSelfRegret,
    BoundConstants,
    OracleMean,
}

impl Check {
    pub const PROPERTY: [Check; 8] = [
        Check::RewardRecursion,
        Check::CountConsistency,
        Check::TsPosteriorCounts,
        Check::EpsGreedyFreeze,
        Check::UcbOptimism,
        Check::DeterministicReplay,
        Check::CoupledSelfRegret,
        Check::BoundConstants,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::RewardRecursion => "reward_recursion",
            Check::CountConsistency => "count_consistency",
            Check::TsPosteriorCounts => "ts_posterior_counts",
            Check::EpsGreedyFreeze => "eps_greedy_freeze",
            Check::UcbOptimism => "ucb_optimism",
            Check::DeterministicReplay => "deterministic_replay",
            Check::CoupledSelfRegret => "coupled_self_regret",
            Check::BoundConstants => "bound_constants",
            Check::OracleMean => "oracle_mean",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub check: Check,
    /// Instances the check ran on.
    pub cases: u64,
    pub failures: u64,
    pub first_failure: Option<String>,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.cases > 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub level: Level,
    pub random_instances: u64,
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckResult::passed)
    }

    pub fn check(&self, check: Check) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.check == check)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SuiteOptions {
    pub random_instances: u64,
    pub seed: u64,
    /// Horizon used for the config-file instance.
    pub file_horizon_cap: u64,
    pub oracle_mean_slots: Option<u64>,
}

impl SuiteOptions {
    pub fn for_level(level: Level, seed: u64) -> Self {
        match level {
            Level::Fast => Self { random_instances: 1_000, seed, file_horizon_cap: 2_000, oracle_mean_slots: None },
            Level::Full => {
                Self { random_instances: 10_000, seed, file_horizon_cap: 30_000, oracle_mean_slots: Some(1_000_000) }
            }
        }
    }
}

/// Outcome of one check on one instance.
type Verdict = Result<(), String>;

#[derive(Clone, Copy)]
struct Slot {
    prev: MonitorState,
    outcome: SlotOutcome,
}

/// Plays `scheduler` with a coupled draw discipline (`u` and `v` every slot).
fn play(config: &SystemConfig, scheduler: &mut dyn Scheduler, seed: u64, stepper: Stepper) -> Vec<Slot> {
    let sources = config.sources();
    let d = config.d();
    let mut env = stream(seed, StreamRole::Environment);
    let mut policy_rng = stream(seed, StreamRole::Policy);
    let mut state = MonitorState::initial();
    let mut slots = Vec::with_capacity(config.horizon() as usize);
    for t in 1..=config.horizon() {
        let arm = scheduler.select(t, &mut policy_rng);
        let u: f64 = env.random();
        let v: f64 = env.random();
        let (outcome, next) = stepper(&state, arm, &sources[arm], d, u, v);
        scheduler.observe(&outcome);
        slots.push(Slot { prev: state, outcome });
        state = next;
    }
    slots
}

fn check_recursion(slots: &[Slot], d: f64) -> Verdict {
    for (i, s) in slots.iter().enumerate() {
        let (o, prev) = (&s.outcome, &s.prev);
        let t = i + 1;
        if o.transmitted {
            let expect = if o.update == Some(true) { 1.0 } else { 0.0 };
            if o.age_after != 1 || o.reward_after != expect {
                return Err(format!(
                    "slot {t}: delivery must give age 1 and reward {expect}, got age {} reward {}",
                    o.age_after, o.reward_after
                ));
            }
        } else {
            if o.update.is_some() || o.age_after != prev.age + 1 {
                return Err(format!(
                    "slot {t}: failed slot must age {} -> {}, got {}",
                    prev.age,
                    prev.age + 1,
                    o.age_after
                ));
            }
            let expect = prev.reward * d;
            if (o.reward_after - expect).abs() > 1e-12 * expect.abs() + 1e-300 {
                return Err(format!(
                    "slot {t}: reward {} after a failed slot, expected {} * {d} = {expect}",
                    o.reward_after, prev.reward
                ));
            }
        }
    }
    Ok(())
}

#[derive(Default, Clone)]
struct Tally {
    pulls: u64,
    delivered: u64,
    accurate: u64,
}

fn tally<'a>(k: usize, slots: impl Iterator<Item = &'a Slot>) -> Vec<Tally> {
    let mut out = vec![Tally::default(); k];
    for s in slots {
        let t = &mut out[s.outcome.arm];
        t.pulls += 1;
        t.delivered += s.outcome.transmitted as u64;
        t.accurate += (s.outcome.update == Some(true)) as u64;
    }
    out
}

fn matches_estimator(name: &str, counts: &[crate::policies::ArmCounts], seen: &[Tally]) -> Verdict {
    for (k, (c, s)) in counts.iter().zip(seen).enumerate() {
        if c.n_scheduled != s.pulls || c.p_successes != s.delivered || c.pq_successes != s.accurate {
            return Err(format!(
                "{name} source {k}: estimator ({}, {}, {}) vs observed slots ({}, {}, {})",
                c.n_scheduled, c.p_successes, c.pq_successes, s.pulls, s.delivered, s.accurate
            ));
        }
    }
    Ok(())
}

/// Epsilon-greedy with its slot tags recorded and estimate changes watched.
struct Tagged<'a> {
    inner: &'a mut EpsilonGreedy,
    kinds: Vec<SlotKind>,
    violation: Option<String>,
}

impl Scheduler for Tagged<'_> {
    fn select(&mut self, t: u64, rng: &mut SimRng) -> usize {
        let (arm, kind) = self.inner.select_tagged(t, rng);
        self.kinds.push(kind);
        arm
    }

    fn observe(&mut self, outcome: &SlotOutcome) {
        let before = (self.inner.estimator().total_updates(), self.inner.mu_hat().to_vec());
        self.inner.observe(outcome);
        let frozen = before.0 == self.inner.estimator().total_updates() && before.1 == self.inner.mu_hat();
        if self.kinds.last() == Some(&SlotKind::Exploit) && !frozen && self.violation.is_none() {
            self.violation = Some(format!("slot {}: exploit slot changed the estimates", self.kinds.len()));
        }
    }

    fn observation_count(&self) -> u64 {
        self.inner.observation_count()
    }
}

#[derive(Default)]
struct InstanceVerdicts {
    results: Vec<(Check, Verdict)>,
}

impl InstanceVerdicts {
    fn push(&mut self, check: Check, v: Verdict) {
        self.results.push((check, v));
    }
}

fn first_err(vs: impl IntoIterator<Item = Verdict>) -> Verdict {
    vs.into_iter().find(Result::is_err).unwrap_or(Ok(()))
}

fn arms(slots: &[Slot]) -> Vec<usize> {
    slots.iter().map(|s| s.outcome.arm).collect()
}

/// Runs every property check on one instance.
fn check_instance(
    config: &SystemConfig,
    te: u64,
    seed: u64,
    stepper: Stepper,
    extra_rng: &mut SimRng,
) -> InstanceVerdicts {
    let k = config.num_sources();
    let d = config.d().get();
    let mut v = InstanceVerdicts::default();

    // ETC
    let mut etc = ExploreThenCommit::new(k, d, te);
    let etc_slots = play(config, &mut etc, seed, stepper);
    let etc_counts = {
        let explore = tally(k, etc_slots.iter().take(te as usize));
        let committed = etc.committed_arm();
        let expect = crate::argmax_lowest(etc.estimator().mu_hats(d));
        let stays = etc_slots[te as usize..].iter().all(|s| Some(s.outcome.arm) == committed);
        first_err([
            matches_estimator("etc", etc.estimator().arms(), &explore),
            if committed == Some(expect) && stays {
                Ok(())
            } else {
                Err(format!("etc committed {committed:?}, estimates point to {expect}, stays = {stays}"))
            },
        ])
    };

    // epsilon-greedy
    let mut eg = EpsilonGreedy::new(k, d, EpsilonSchedule::default());
    let (eg_slots, kinds, violation) = {
        let mut tagged = Tagged { inner: &mut eg, kinds: vec![], violation: None };
        let slots = play(config, &mut tagged, seed, stepper);
        (slots, tagged.kinds, tagged.violation)
    };
    let explore_tagged = kinds.iter().filter(|&&k| k == SlotKind::Explore).count() as u64;
    let eg_counts = matches_estimator(
        "eps_greedy",
        eg.estimator().arms(),
        &tally(k, eg_slots.iter().zip(&kinds).filter(|(_, &kind)| kind == SlotKind::Explore).map(|(s, _)| s)),
    );
    let freeze = match violation {
        Some(m) => Err(m),
        None if eg.estimator().total_updates() != explore_tagged || eg.explore_slots() != explore_tagged => {
            Err(format!(
                "{} updates and {} counted explorations for {explore_tagged} explore-tagged slots",
                eg.estimator().total_updates(),
                eg.explore_slots()
            ))
        }
        None => Ok(()),
    };

    // UCB
    let mut ucb = Ucb::new(k, d);
    let ucb_slots = play(config, &mut ucb, seed, stepper);
    let ucb_counts = matches_estimator("ucb", ucb.estimator().arms(), &tally(k, ucb_slots.iter()));

    // TS
    let mut ts = ThompsonSampling::new(k, d);
    let ts_slots = play(config, &mut ts, seed, stepper);
    let ts_seen = tally(k, ts_slots.iter());
    let mut ts_totals = Ok(());
    let mut ts_posterior = Ok(());
    for (i, (a, s)) in ts.arms().iter().zip(&ts_seen).enumerate() {
        if a.s_pq + a.f_pq != s.pulls || a.s_p + a.f_p != s.pulls {
            ts_totals = Err(format!("ts source {i}: {a:?} for {} scheduled slots", s.pulls));
        }
        if a.s_p != s.delivered || a.s_pq != s.accurate {
            ts_posterior = Err(format!("ts source {i}: {a:?} for {} deliveries, {} accurate", s.delivered, s.accurate));
        }
    }

    v.push(
        Check::RewardRecursion,
        first_err([&etc_slots, &eg_slots, &ucb_slots, &ts_slots].map(|s| check_recursion(s, d))),
    );
    v.push(Check::CountConsistency, first_err([etc_counts, eg_counts, ucb_counts, ts_totals]));
    v.push(Check::TsPosteriorCounts, ts_posterior);
    v.push(Check::EpsGreedyFreeze, freeze);

    // Replays with fresh policy objects.
    let replay = {
        let mut again: Vec<Box<dyn Scheduler>> = vec![
            Box::new(ExploreThenCommit::new(k, d, te)),
            Box::new(EpsilonGreedy::new(k, d, EpsilonSchedule::default())),
            Box::new(Ucb::new(k, d)),
            Box::new(ThompsonSampling::new(k, d)),
        ];
        let first = [&etc_slots, &eg_slots, &ucb_slots, &ts_slots];
        let names = ["etc", "eps_greedy", "ucb", "ts"];
        first_err(again.iter_mut().zip(first).zip(names).map(|((s, slots), name)| {
            if arms(&play(config, s.as_mut(), seed, stepper)) == arms(slots) {
                Ok(())
            } else {
                Err(format!("{name}: arm sequence differs between two runs with seed {seed}"))
            }
        }))
    };
    v.push(Check::DeterministicReplay, replay);

    // Optimism with exact moments.
    let optimism = first_err(config.sources().iter().enumerate().map(|(i, s)| {
        let n = extra_rng.random_range(1..=1_000_000u64);
        let t = extra_rng.random_range(2..=10_000_000u64);
        let index = ucb_index(s.p() * s.q(), s.p(), n, t, d);
        let exact = mu(s.p(), s.q(), d);
        if index > exact {
            Ok(())
        } else {
            Err(format!("source {i}: ucb_index {index} <= mu {exact} at n = {n}, t = {t}"))
        }
    }));
    v.push(Check::UcbOptimism, optimism);

    // Coupled oracle against itself, and a single source against the oracle.
    let self_regret = {
        let best = optimal_source(config).best_index;
        let mut worst = 0.0f64;
        let options = RunOptions::coupled(true);
        drive(config, Box::new(FixedArm::new(best)) as Box<dyn Scheduler>, seed, options, |_, p, o| {
            worst = worst.max((o.reward_after - p.reward_after).abs());
        });
        let single = SystemConfig::new(vec![config.sources()[best]], config.d(), config.horizon(), config.seed())
            .expect("a source of a valid config is valid");
        drive(&single, Box::new(Ucb::new(1, d)) as Box<dyn Scheduler>, seed, options, |_, p, o| {
            worst = worst.max((o.reward_after - p.reward_after).abs());
        });
        if worst == 0.0 {
            Ok(())
        } else {
            Err(format!("coupled self-comparison shows regret {worst}"))
        }
    };
    v.push(Check::CoupledSelfRegret, self_regret);

    v.push(Check::BoundConstants, check_constants(config));
    v
}

fn check_constants(config: &SystemConfig) -> Verdict {
    let consts = match instance_constants(config) {
        Ok(c) => c,
        // tied best sources, the constants are undefined by design
        Err(BoundsError::DegenerateGap) if optimal_source(config).gap == Some(0.0) => return Ok(()),
        Err(e) => return Err(format!("instance constants: {e}")),
    };
    if consts.c_age_term.is_nan() || consts.c_age_term < 0.0 {
        return Err(format!("age term {} is negative", consts.c_age_term));
    }
    match (consts.c, consts.c_gap_term) {
        (Some(c), Some(gap)) => {
            if !(c >= gap && c >= consts.c_age_term && gap >= 4.0 * consts.k as f64) {
                return Err(format!("c = {c} must dominate {gap} and {}", consts.c_age_term));
            }
            match etc_te_schedule(config.horizon(), consts.k, &consts) {
                Ok(s) if s.slots >= consts.k as u64 && s.slots < config.horizon() => Ok(()),
                Ok(s) => Err(format!("explore length {} outside [{}, {})", s.slots, consts.k, config.horizon())),
                Err(_) if config.horizon() <= consts.k as u64 => Ok(()),
                Err(e) => Err(format!("explore schedule: {e}")),
            }
        }
        // no gap, nothing to bound
        _ => Ok(()),
    }
}

/// Random instance with roughly one in ten probabilities pinned to 1.
pub fn random_instance(rng: &mut SimRng) -> SystemConfig {
    let k = rng.random_range(1..=5usize);
    let prob = |rng: &mut SimRng| if rng.random::<f64>() < 0.1 { 1.0 } else { rng.random_range(0.05..1.0) };
    let p: Vec<f64> = (0..k).map(|_| prob(rng)).collect();
    let q: Vec<f64> = (0..k).map(|_| prob(rng)).collect();
    let d = rng.random_range(0.05..0.95);
    let horizon = rng.random_range(20..=250u64);
    let seed = rng.random();
    SystemConfig::from_pq(&p, &q, d, horizon, seed).expect("generated parameters are in range")
}

/// The explore length used for an instance: anything in `[K, T - 1]`.
fn pick_te(config: &SystemConfig, rng: &mut SimRng) -> u64 {
    let k = config.num_sources() as u64;
    rng.random_range(k..config.horizon())
}

/// Long-run mean reward of the optimal source against its closed form,
/// with a batch-means standard error.
fn oracle_mean(config: &SystemConfig, slots: u64, seed: u64, stepper: Stepper) -> Verdict {
    let quality = optimal_source(config);
    let best = quality.best_index;
    let source = config.sources()[best];
    let d = config.d();
    let batches = 1000u64;
    let per = (slots / batches).max(1);
    let mut env = stream(seed, StreamRole::OracleEnvironment);
    let mut state = MonitorState::initial();
    let mut means = Vec::with_capacity(batches as usize);
    for _ in 0..batches {
        let mut sum = 0.0;
        for _ in 0..per {
            let u: f64 = env.random();
            let v: f64 = env.random();
            state = stepper(&state, best, &source, d, u, v).1;
            sum += state.reward;
        }
        means.push(sum / per as f64);
    }
    let n = means.len() as f64;
    let mean = means.iter().sum::<f64>() / n;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    let target = quality.mu_star();
    // floor keeps degenerate (zero-variance) sources from demanding an exact match
    if (mean - target).abs() <= 3.0 * se + 1e-9 {
        Ok(())
    } else {
        Err(format!("mean reward {mean} vs {target} over {} slots (3 SE = {})", per * batches, 3.0 * se))
    }
}

/// Runs the property checks on `file` (if given) and on `options.random_instances`
/// random instances.
pub fn run_suite(
    file: Option<&SystemConfig>,
    level: Level,
    options: SuiteOptions,
    stepper: Stepper,
) -> ValidationReport {
    let mut instances: Vec<(SystemConfig, u64, u64, u64)> = vec![];
    let mut tags = stream(options.seed, StreamRole::Warmup);
    if let Some(cfg) = file {
        let capped = cfg.with_horizon(cfg.horizon().min(options.file_horizon_cap)).expect("cap is positive");
        let capped = if capped.horizon() <= capped.num_sources() as u64 {
            capped.with_horizon(capped.num_sources() as u64 + 1).expect("positive horizon")
        } else {
            capped
        };
        let te = pick_te(&capped, &mut tags);
        instances.push((capped, te, cfg.seed(), tags.random()));
    }
    for i in 0..options.random_instances {
        let mut rng = stream(trial_seed(options.seed, i), StreamRole::Warmup);
        let mut cfg = random_instance(&mut rng);
        if cfg.horizon() <= cfg.num_sources() as u64 {
            cfg = cfg.with_horizon(cfg.num_sources() as u64 + 1).expect("positive horizon");
        }
        let te = pick_te(&cfg, &mut rng);
        let seed = cfg.seed();
        instances.push((cfg, te, seed, rng.random()));
    }

    let verdicts: Vec<InstanceVerdicts> = instances
        .par_iter()
        .map(|(cfg, te, seed, extra)| {
            let mut extra_rng = SimRng::seed_from_u64(*extra);
            check_instance(cfg, *te, *seed, stepper, &mut extra_rng)
        })
        .collect();

    let mut checks: Vec<CheckResult> = Check::PROPERTY
        .iter()
        .map(|&check| CheckResult { check, cases: 0, failures: 0, first_failure: None })
        .collect();
    for (i, iv) in verdicts.iter().enumerate() {
        for (check, verdict) in &iv.results {
            let slot = checks.iter_mut().find(|c| c.check == *check).expect("known check");
            slot.cases += 1;
            if let Err(msg) = verdict {
                slot.failures += 1;
                if slot.first_failure.is_none() {
                    let (cfg, te, seed, _) = &instances[i];
                    let p: Vec<f64> = cfg.sources().iter().map(|s| s.p()).collect();
                    let q: Vec<f64> = cfg.sources().iter().map(|s| s.q()).collect();
                    slot.first_failure = Some(format!(
                        "{msg} [p = {p:?}, q = {q:?}, d = {}, horizon = {}, te = {te}, seed = {seed}]",
                        cfg.d().get(),
                        cfg.horizon()
                    ));
                }
            }
        }
    }

    if let (Some(slots), Some(cfg)) = (options.oracle_mean_slots, file) {
        let verdict = oracle_mean(cfg, slots, cfg.seed(), stepper);
        checks.push(CheckResult {
            check: Check::OracleMean,
            cases: 1,
            failures: verdict.is_err() as u64,
            first_failure: verdict.err(),
        });
    }

    ValidationReport { level, random_instances: options.random_instances, checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1() -> SystemConfig {
        SystemConfig::from_pq(&[0.65, 0.7, 0.75, 0.8], &[0.8, 0.75, 0.7, 0.65], 0.8, 30_000, 3).unwrap()
    }

    fn small(n: u64) -> SuiteOptions {
        SuiteOptions { random_instances: n, seed: 11, file_horizon_cap: 500, oracle_mean_slots: None }
    }

    #[test]
    fn clean_model_passes() {
        let report = run_suite(Some(&fig1()), Level::Fast, small(200), model_stepper);
        for c in &report.checks {
            assert!(c.passed(), "{:?}", c);
            assert_eq!(c.cases, 201);
        }
    }

    #[test]
    fn undepreciated_reward_is_caught() {
        let report = run_suite(Some(&fig1()), Level::Fast, small(50), Fault::RewardNotDepreciated.stepper());
        let rec = report.check(Check::RewardRecursion).unwrap();
        assert!(!rec.passed());
        assert!(rec.first_failure.as_ref().unwrap().contains("after a failed slot"));
        assert!(!report.passed());
    }

    #[test]
    fn oracle_mean_tracks_closed_form() {
        let cfg = fig1();
        assert!(oracle_mean(&cfg, 200_000, 1, model_stepper).is_ok());
        assert!(oracle_mean(&cfg, 200_000, 1, Fault::RewardNotDepreciated.stepper()).is_err());
    }

    #[test]
    fn tied_best_sources_are_not_a_constants_failure() {
        let cfg = SystemConfig::from_pq(&[1.0, 1.0], &[1.0, 1.0], 0.5, 50, 0).unwrap();
        assert!(check_constants(&cfg).is_ok());
    }

    #[test]
    fn recursion_check_reads_prev_state() {
        let good = Slot {
            prev: MonitorState { age: 2, last_update: true, reward: 0.5 },
            outcome: SlotOutcome { arm: 0, transmitted: false, update: None, age_after: 3, reward_after: 0.4 },
        };
        assert!(check_recursion(&[good], 0.8).is_ok());
        let bad = Slot { outcome: SlotOutcome { reward_after: 0.5, ..good.outcome }, ..good };
        assert!(check_recursion(&[bad], 0.8).is_err());
    }
}
