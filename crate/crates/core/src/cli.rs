//! Command-line front end.
//!
//! Exit codes: 0 success, 1 validation failure, 2 bad input (config,
//! arguments, bound preconditions, unwritable output).

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::bounds::{self, eg_upper_bound, etc_te_schedule, etc_upper_bound, instance_constants, lower_bound};
use crate::config::{parse_config_with, ConfigError, ExperimentFile, Overrides};
use crate::experiment::{monte_carlo_trials, spearman, sweep, MonteCarloReport, RegretSeries, RunOptions, SweepAxis};
use crate::validate::{model_stepper, run_suite, Fault, Level, SuiteOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

fn on_off(s: &str) -> Result<bool, String> {
    match s {
        "on" => Ok(true),
        "off" => Ok(false),
        other => Err(format!("expected on or off, got `{other}`")),
    }
}

#[derive(Debug, Parser)]
#[command(name = "aoi-sched", version, about = "Bandit scheduling of inaccurate sources over an unreliable channel")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Number of Monte Carlo trials.
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    /// Base seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Common random numbers for policy and oracle.
    #[arg(long, global = true, value_parser = on_off, value_name = "on|off")]
    pub coupled: Option<bool>,
    /// ETC exploration length override.
    #[arg(long, global = true, value_name = "N")]
    pub te: Option<u64>,
    /// Output path prefix.
    #[arg(long, global = true, value_name = "PREFIX")]
    pub output: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Regret curves for every configured policy.
    Simulate { config: PathBuf },
    /// Cumulative regret at the checkpoint across sweep cases.
    Sweep { config: PathBuf },
    /// Closed-form constants and regret bounds for the configured instance.
    Bounds {
        config: PathBuf,
        #[arg(long)]
        alpha: f64,
        /// Consistency exponent of the lower bound.
        #[arg(long, default_value_t = 0.5)]
        gamma: f64,
        /// Consistency constant of the lower bound.
        #[arg(long = "C", default_value_t = 1.0)]
        c: f64,
    },
    /// Invariant checks.
    Validate {
        config: PathBuf,
        #[arg(long, default_value = "fast")]
        level: Level,
        #[arg(long, hide = true)]
        inject_fault: Option<Fault>,
    },
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Validation,
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Input(e.to_string())
    }
}

fn io_err(path: &Path, e: io::Error) -> Failure {
    Failure::Input(format!("cannot write {}: {e}", path.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn artifact(prefix: &str, suffix: &str) -> PathBuf {
    PathBuf::from(format!("{prefix}_{suffix}"))
}

/// Shortest representation that parses back to the same `f64`.
fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn series_csv(series: &RegretSeries) -> String {
    let mut out = String::with_capacity(series.len() * 48);
    out.push_str("t,instantaneous_regret,cumulative_regret,stderr\n");
    for i in 0..series.len() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            i + 1,
            num(series.instantaneous[i]),
            num(series.cumulative[i]),
            num(series.cumulative_stderr[i])
        );
    }
    out
}

fn load(path: &Path, cli: &Cli) -> Result<ExperimentFile, Failure> {
    let overrides =
        Overrides { trials: cli.trials, seed: cli.seed, coupled: cli.coupled, te: cli.te, output: cli.output.clone() };
    Ok(parse_config_with(path, &overrides)?)
}

fn options(file: &ExperimentFile) -> RunOptions {
    RunOptions { coupled: file.coupled, warmup: file.warmup }
}

#[derive(Serialize)]
struct PolicySummary<'a> {
    policy: &'a str,
    csv: String,
    final_cumulative_regret: f64,
    final_stderr: f64,
    /// Most frequent committed source (ETC only).
    committed_arm: Option<usize>,
    committed_counts: Option<&'a [u64]>,
    explore_slots: Option<u64>,
    pulls: &'a [u64],
}

fn summary_entry<'a>(report: &'a MonteCarloReport, csv: &Path) -> PolicySummary<'a> {
    let committed = report.explore_slots.is_some();
    let mode = report.committed.iter().enumerate().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0))).map(|(k, _)| k);
    PolicySummary {
        policy: report.policy.name(),
        csv: csv.display().to_string(),
        final_cumulative_regret: report.series.final_cumulative(),
        final_stderr: *report.series.cumulative_stderr.last().unwrap_or(&0.0),
        committed_arm: if committed { mode } else { None },
        committed_counts: committed.then_some(report.committed.as_slice()),
        explore_slots: report.explore_slots,
        pulls: &report.pulls,
    }
}

fn cmd_simulate(cli: &Cli, path: &Path, out: &mut dyn Write) -> Result<(), Failure> {
    let file = load(path, cli)?;
    let started = Instant::now();
    let mut reports = vec![];
    for policy in &file.policies {
        let report = monte_carlo_trials(&file.system, policy, 0..file.trials, file.system.seed(), options(&file))
            .map_err(|e| Failure::Input(e.to_string()))?;
        let csv = artifact(&file.output, &format!("{}.csv", policy.kind.name()));
        write_file(&csv, &series_csv(&report.series))?;
        let _ = writeln!(
            out,
            "{:<10} cumulative regret at T = {}: {} (se {})",
            policy.kind.name(),
            file.system.horizon(),
            num(report.series.final_cumulative()),
            num(*report.series.cumulative_stderr.last().unwrap_or(&0.0))
        );
        reports.push((report, csv));
    }
    let wall = started.elapsed().as_secs_f64();
    let summary = json!({
        "seed": file.system.seed(),
        "trials": file.trials,
        "coupled": file.coupled,
        "wall_time_seconds": wall,
        "policies": reports.iter().map(|(r, csv)| summary_entry(r, csv)).collect::<Vec<_>>(),
        "config": &file,
    });
    let path = artifact(&file.output, "summary.json");
    write_file(&path, &(serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n"))?;
    let _ = writeln!(out, "wrote {}", path.display());
    Ok(())
}

fn cmd_sweep(cli: &Cli, path: &Path, out: &mut dyn Write) -> Result<(), Failure> {
    let file = load(path, cli)?;
    let spec =
        file.sweep.as_ref().ok_or_else(|| Failure::Input(format!("{}: no `sweep = <axis>` entry", path.display())))?;
    let rows = sweep(spec, &file.policies, file.trials, file.system.seed(), options(&file))
        .map_err(|e| Failure::Input(e.to_string()))?;
    let mut csv = String::from("case,label,delta,policy,cumulative_regret,stderr\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            r.case,
            r.label,
            r.delta.map(num).unwrap_or_default(),
            r.policy.name(),
            num(r.cumulative_regret),
            num(r.stderr)
        );
    }
    let csv_path = artifact(&file.output, "sweep.csv");
    write_file(&csv_path, &csv)?;
    let _ = out.write_all(csv.as_bytes());
    if spec.axis == SweepAxis::DeltaCases {
        for policy in &file.policies {
            let (xs, ys): (Vec<f64>, Vec<f64>) = rows
                .iter()
                .filter(|r| r.policy == policy.kind)
                .filter_map(|r| r.delta.map(|d| (d, r.cumulative_regret)))
                .unzip();
            if xs.len() >= 2 {
                let _ = writeln!(out, "spearman(delta, regret) {:<10} {}", policy.kind.name(), num(spearman(&xs, &ys)));
            }
        }
    }
    let _ = writeln!(out, "wrote {}", csv_path.display());
    Ok(())
}

fn result_value<T: Serialize, E: std::fmt::Display>(r: Result<T, E>) -> Value {
    match r {
        Ok(v) => serde_json::to_value(v).expect("serializable"),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

pub fn bounds_report(file: &ExperimentFile, alpha: f64, gamma: f64, c: f64) -> Result<Value, bounds::BoundsError> {
    if !(alpha > 1.0 && alpha.is_finite()) {
        return Err(bounds::BoundsError::InvalidAlpha(alpha));
    }
    let consts = instance_constants(&file.system)?;
    let horizon = file.system.horizon();
    let p: Vec<f64> = file.system.sources().iter().map(|s| s.p()).collect();
    let q: Vec<f64> = file.system.sources().iter().map(|s| s.q()).collect();
    Ok(json!({
        "inputs": {
            "p": p,
            "q": q,
            "d": file.system.d().get(),
            "horizon": horizon,
            "alpha": alpha,
            "gamma": gamma,
            "C": c,
        },
        "delta": consts.delta,
        "delta_p": consts.delta_p,
        "c": consts.c,
        "recommended_te": result_value(etc_te_schedule(horizon, consts.k, &consts)),
        "etc_upper_bound": result_value(etc_upper_bound(horizon, alpha, &consts)),
        "eg_upper_bound": result_value(eg_upper_bound(horizon, alpha, &consts)),
        "lower_bound": result_value(lower_bound(horizon, gamma, c, &consts)),
        "constants": consts,
    }))
}

fn cmd_bounds(cli: &Cli, path: &Path, alpha: f64, gamma: f64, c: f64, out: &mut dyn Write) -> Result<(), Failure> {
    let file = load(path, cli)?;
    let report = bounds_report(&file, alpha, gamma, c).map_err(|e| Failure::Input(e.to_string()))?;
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    write_file(&artifact(&file.output, "bounds.json"), &text)?;
    let _ = out.write_all(text.as_bytes());
    Ok(())
}

fn cmd_validate(
    cli: &Cli,
    path: &Path,
    level: Level,
    fault: Option<Fault>,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let file = load(path, cli)?;
    let stepper = fault.map(Fault::stepper).unwrap_or(model_stepper);
    let started = Instant::now();
    let report = run_suite(Some(&file.system), level, SuiteOptions::for_level(level, file.system.seed()), stepper);
    for c in &report.checks {
        let status = if c.passed() { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "{status} {:<22} {} cases, {} failures", c.check.name(), c.cases, c.failures);
        if let Some(msg) = &c.first_failure {
            let _ = writeln!(out, "     first failure: {msg}");
        }
    }
    let _ = writeln!(out, "{} checks in {:.2} s", report.checks.len(), started.elapsed().as_secs_f64());
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Validation)
    }
}

/// Runs the CLI on `args` and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = out.write_all(rendered.as_bytes());
            } else {
                let _ = err.write_all(rendered.as_bytes());
            }
            return if code == 0 { EXIT_OK } else { EXIT_INPUT };
        }
    };
    let result = match &cli.command {
        Command::Simulate { config } => cmd_simulate(&cli, config, out),
        Command::Sweep { config } => cmd_sweep(&cli, config, out),
        Command::Bounds { config, alpha, gamma, c } => cmd_bounds(&cli, config, *alpha, *gamma, *c, out),
        Command::Validate { config, level, inject_fault } => cmd_validate(&cli, config, *level, *inject_fault, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Validation) => {
            let _ = writeln!(err, "validation failed");
            EXIT_VALIDATION
        }
        Err(Failure::Input(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_INPUT
        }
    }
}
