//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the criteria execute one after the
//! other and the timing limits are measured without competing tests. Exits
//! nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use aoi_sched::bounds::{eg_upper_bound, etc_upper_bound, instance_constants};
use aoi_sched::experiment::{monte_carlo, monte_carlo_trials, run_trial, spearman, sweep, RunOptions, SweepSpec};
use aoi_sched::oracle::{mu, optimal_source, run_oracle};
use aoi_sched::policies::{PolicyConfig, PolicyKind};
use aoi_sched::rng::{stream, StreamRole};
use aoi_sched::validate::{model_stepper, run_suite, Check, Level, SuiteOptions};
use aoi_sched::SystemConfig;

const HORIZON: u64 = 30_000;
const TRIALS: u64 = 200;

fn k4() -> SystemConfig {
    SystemConfig::from_pq(&[0.65, 0.7, 0.75, 0.8], &[0.8, 0.75, 0.7, 0.65], 0.8, HORIZON, 1).unwrap()
}

fn all_policies(te: u64) -> Vec<PolicyConfig> {
    vec![
        PolicyConfig::etc(te),
        PolicyConfig::new(PolicyKind::EpsGreedy),
        PolicyConfig::new(PolicyKind::Ucb),
        PolicyConfig::new(PolicyKind::Ts),
    ]
}

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn within(elapsed: Duration, limit: Duration) -> bool {
    elapsed < limit
}

fn criterion_1() -> Outcome {
    let cfg = SystemConfig::from_pq(&[0.65], &[0.8], 0.8, 1_000_000, 0).unwrap();
    let start = Instant::now();
    let trace = run_oracle(&cfg, stream(2024, StreamRole::OracleEnvironment));
    let mean = trace.iter().map(|o| o.reward_after).sum::<f64>() / trace.len() as f64;
    let elapsed = start.elapsed();
    // batch means for the 3 sigma figure, batches far longer than the age memory
    let batch: Vec<f64> =
        trace.chunks(10_000).map(|c| c.iter().map(|o| o.reward_after).sum::<f64>() / c.len() as f64).collect();
    let n = batch.len() as f64;
    let var = batch.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let three_sigma = 3.0 * (var / n).sqrt();
    let target = mu(0.65, 0.8, 0.8);
    let err = (mean - target).abs();
    outcome(
        err <= 0.01 && err <= three_sigma.max(0.01) && within(elapsed, Duration::from_secs(1)),
        format!(
            "mean reward {mean:.5} vs {target:.5} (|err| {err:.5}, tol 0.01, 3 sigma {three_sigma:.5}), {:.3} s for 1e6 slots (limit 1 s)",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_2() -> Outcome {
    let cfg = k4();
    let start = Instant::now();
    let mut ok = true;
    let mut lines = vec![];
    for base_seed in [101u64, 202, 303] {
        let regrets: Vec<(PolicyKind, f64)> = all_policies(9000)
            .iter()
            .map(|p| (p.kind, monte_carlo(&cfg, p, TRIALS, base_seed, true).unwrap().series.final_cumulative()))
            .collect();
        let get = |k: PolicyKind| regrets.iter().find(|(p, _)| *p == k).unwrap().1;
        let ts = get(PolicyKind::Ts);
        let ts_below_eg = ts < get(PolicyKind::EpsGreedy);
        let ts_minimal = regrets.iter().filter(|(p, _)| *p != PolicyKind::Ts).all(|(_, r)| ts < *r);
        ok &= ts_below_eg && ts_minimal;
        let listing: Vec<String> = regrets.iter().map(|(p, r)| format!("{p}={r:.1}")).collect();
        lines.push(format!("seed {base_seed}: {}", listing.join(" ")));
    }
    let elapsed = start.elapsed();
    ok &= within(elapsed, Duration::from_secs(120));
    outcome(ok, format!("{}; {:.1} s (limit 120 s)", lines.join("; "), elapsed.as_secs_f64()))
}

/// Criterion 3 also feeds criterion 5.
fn criterion_3() -> (Outcome, f64) {
    let cfg = k4();
    let report = monte_carlo(&cfg, &PolicyConfig::etc(9000), TRIALS, 7, true).unwrap();
    let tail = report.series.mean_instantaneous(27_000, 30_000);
    let best = optimal_source(&cfg).best_index;
    let correct = report.committed_fraction(best);
    let final_regret = report.series.final_cumulative();
    (
        outcome(
            tail < 0.05 && correct >= 0.95,
            format!(
                "mean instantaneous regret over slots 27000-30000 = {tail:.5} (limit 0.05), correct commit {:.1}% (limit 95%), committed histogram {:?}",
                100.0 * correct,
                report.committed
            ),
        ),
        final_regret,
    )
}

fn criterion_4() -> Outcome {
    let options = RunOptions::coupled(true);
    let policies = vec![
        PolicyConfig::new(PolicyKind::Etc),
        PolicyConfig::new(PolicyKind::EpsGreedy),
        PolicyConfig::new(PolicyKind::Ucb),
        PolicyConfig::new(PolicyKind::Ts),
    ];
    let mut ok = true;
    let mut parts = vec![];

    let spec = SweepSpec::delta_cases(HORIZON, 5);
    let rows = sweep(&spec, &policies, TRIALS, 5, options).unwrap();
    for p in &policies {
        let (xs, ys): (Vec<f64>, Vec<f64>) =
            rows.iter().filter(|r| r.policy == p.kind).map(|r| (r.delta.unwrap(), r.cumulative_regret)).unzip();
        let rho = spearman(&xs, &ys);
        let pass = if p.kind == PolicyKind::EpsGreedy { rho > 0.8 } else { rho < -0.8 };
        ok &= pass && xs.len() >= 5;
        parts.push(format!("delta rho {}={rho:.3}", p.kind));
    }

    let spec = SweepSpec::q_cases(HORIZON, 5);
    let rows = sweep(&spec, &policies, TRIALS, 5, options).unwrap();
    for p in &policies {
        let ys: Vec<f64> = rows.iter().filter(|r| r.policy == p.kind).map(|r| r.cumulative_regret).collect();
        let max = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = ys.iter().copied().fold(f64::INFINITY, f64::min);
        let ratio = max / min;
        ok &= min > 0.0 && ratio < 1.5;
        parts.push(format!("q max/min {}={ratio:.3}", p.kind));
    }
    outcome(ok, parts.join(", "))
}

fn criterion_5(etc_empirical: f64) -> Outcome {
    let consts = instance_constants(&k4()).unwrap();
    let c = consts.c.unwrap();
    let c_ok = (c / 4.05e5 - 1.0).abs() < 0.01 && (1e4..=1e6).contains(&c);
    let etc_bound = etc_upper_bound(HORIZON, 1.1, &consts).unwrap();
    let etc_ok = etc_bound > etc_empirical;

    // The epsilon-greedy bound needs T - c ln T + 1 > 1 for its third term.
    // With c near 4e5 that fails below T of several million, so on this
    // instance the ratio is undefined over most of the grid and the clause
    // cannot hold. The same shape check on an instance whose bound is defined
    // everywhere is printed for reference but does not decide the outcome.
    let grid: Vec<u64> = (0..=16).map(|i| 10f64.powf(3.0 + i as f64 / 4.0).round() as u64).collect();
    let (shape_ok, shape_text) = ratio_shape(&grid, &consts);
    let wc = SystemConfig::from_pq(&[0.9, 0.9], &[0.9, 0.3], 0.1, 1000, 0).unwrap();
    let (_, wc_text) = ratio_shape(&grid, &instance_constants(&wc).unwrap());
    outcome(
        c_ok && etc_ok && shape_ok,
        format!(
            "c = {c:.4e} (target 4.05e5, within 1%): {c_ok}; ETC bound {etc_bound:.4e} > empirical {etc_empirical:.1}: {etc_ok}; \
             eg bound / ln^4 T on {} grid points from 1e3 to 1e7: {shape_text} \
             [reference instance p=[0.9,0.9] q=[0.9,0.3] d=0.1: {wc_text}]",
            grid.len()
        ),
    )
}

/// Whether `eg_upper_bound / ln^4 T` is defined, monotone and bounded by
/// twice its limit `mu* K c` over `grid`.
fn ratio_shape(grid: &[u64], consts: &aoi_sched::bounds::InstanceConstants) -> (bool, String) {
    let evals: Vec<Result<f64, String>> = grid
        .iter()
        .map(|&t| eg_upper_bound(t, 1.1, consts).map(|b| b.value / (t as f64).ln().powi(4)).map_err(|e| e.to_string()))
        .collect();
    let defined: Vec<f64> = evals.iter().filter_map(|r| r.as_ref().ok().copied()).collect();
    if defined.len() < grid.len() {
        let first_err = evals.iter().find_map(|r| r.as_ref().err()).unwrap();
        return (false, format!("defined at {} of {} points ({first_err})", defined.len(), grid.len()));
    }
    let limit = consts.mu_star * consts.k as f64 * consts.c.unwrap();
    let up = defined.windows(2).all(|w| w[1] >= w[0]);
    let down = defined.windows(2).all(|w| w[1] <= w[0]);
    let bounded = defined.iter().all(|v| v.is_finite() && *v > 0.0 && *v <= 2.0 * limit);
    let (lo, hi) = defined.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let peak = grid[defined.iter().position(|v| *v == hi).unwrap()];
    (
        (up || down) && bounded,
        format!(
            "range {lo:.4}..{hi:.6} (peak at T = {peak}), limit mu* K c = {limit:.6}, monotone: {}, bounded: {bounded}",
            up || down
        ),
    )
}

fn criterion_6() -> Outcome {
    let single = SystemConfig::from_pq(&[0.65], &[0.8], 0.8, HORIZON, 3).unwrap();
    let mut worst = 0.0f64;
    let mut slots = 0u64;
    for policy in all_policies(1) {
        for seed in 0..5 {
            let trace = run_trial(&single, &policy, seed, true).unwrap();
            slots += trace.regret.len() as u64;
            worst = trace.regret.iter().fold(worst, |m, r| m.max(r.abs()));
        }
        let mc = monte_carlo_trials(&single, &policy, 0..20, 9, RunOptions::coupled(true)).unwrap();
        worst = mc.series.instantaneous.iter().chain(&mc.series.cumulative).fold(worst, |m, r| m.max(r.abs()));
    }
    for seed in 0..5 {
        let trace = run_trial(&k4(), &PolicyConfig::new(PolicyKind::Oracle), seed, true).unwrap();
        slots += trace.regret.len() as u64;
        worst = trace.regret.iter().fold(worst, |m, r| m.max(r.abs()));
    }
    outcome(
        worst == 0.0,
        format!("max |regret| = {worst:e} over {slots} coupled slots (K=1 for all policies, oracle vs oracle)"),
    )
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let options = SuiteOptions { random_instances: 10_000, seed: 77, file_horizon_cap: 0, oracle_mean_slots: None };
    let report = run_suite(None, Level::Full, options, model_stepper);
    let elapsed = start.elapsed();
    let wanted = [
        Check::CountConsistency,
        Check::RewardRecursion,
        Check::TsPosteriorCounts,
        Check::EpsGreedyFreeze,
        Check::UcbOptimism,
        Check::DeterministicReplay,
    ];
    let mut ok = within(elapsed, Duration::from_secs(30));
    let mut parts = vec![];
    for check in wanted {
        let r = report.check(check).unwrap();
        ok &= r.passed() && r.cases == 10_000;
        parts.push(format!("{} {}/{}", check.name(), r.cases - r.failures, r.cases));
        if let Some(msg) = &r.first_failure {
            parts.push(format!("first failure: {msg}"));
        }
    }
    outcome(ok, format!("{}; {:.1} s (limit 30 s)", parts.join(", "), elapsed.as_secs_f64()))
}

fn main() -> ExitCode {
    let mut results: Vec<(u32, Outcome)> = vec![];
    let mut report = |n: u32, o: Outcome| {
        println!("criterion {n}: {} - {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
        results.push((n, o));
    };
    report(1, criterion_1());
    report(2, criterion_2());
    let (c3, etc_regret) = criterion_3();
    report(3, c3);
    report(4, criterion_4());
    report(5, criterion_5(etc_regret));
    report(6, criterion_6());
    report(7, criterion_7());
    let failed: Vec<u32> = results.iter().filter(|(_, o)| !o.passed).map(|(n, _)| *n).collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria pass", results.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failing criteria {failed:?}");
        ExitCode::FAILURE
    }
}
