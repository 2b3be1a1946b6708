//! Experiment files.
//!
//! A flat `key = value` format, one entry per line, `#` starts a comment.
//! Lists are written `[a, b, c]`. Sweep cases repeat the `case` key and
//! override any of `p`, `q` and `d` of the base instance:
//!
//! ```text
//! p = [0.8, 0.8]
//! q = [0.9, 0.5]
//! d = 0.7
//! horizon = 30000
//! seed = 7
//! trials = 200
//! coupled = on
//! policies = [etc, eps_greedy, ucb, ts]
//! te = auto
//! output = results/q_sweep
//! sweep = q_cases
//! checkpoint = 30000
//! case = q=[0.9, 0.5]
//! case = q=[0.8, 0.4]
//! ```
//!
//! Without `case` lines a sweep uses the built-in cases of its axis.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::experiment::{SweepAxis, SweepCase, SweepSpec};
use crate::model::{ModelError, SystemConfig};
use crate::policies::{EpsilonSchedule, ExploreLength, PolicyConfig, PolicyError, PolicyKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigErrorKind {
    #[error("cannot read config: {0}")]
    Io(String),
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{0}` given twice")]
    DuplicateKey(String),
    #[error("missing required field `{0}`")]
    MissingField(&'static str),
    #[error("invalid value for `{key}`: {detail}")]
    InvalidValue { key: String, detail: String },
    #[error("length mismatch: p has {p} entries but q has {q}")]
    LengthMismatch { p: usize, q: usize },
    #[error(transparent)]
    Model(ModelError),
    #[error("{0}")]
    UnknownPolicy(String),
    #[error("ETC exploration te = {te} must be smaller than the horizon {horizon}")]
    ExploreTooLong { te: u64, horizon: u64 },
    #[error("ETC exploration te = {te} must be at least the number of sources {k}")]
    ExploreTooShort { te: u64, k: usize },
    #[error("invalid sweep: {0}")]
    Sweep(String),
}

impl ConfigErrorKind {
    /// Stable identifier of the error class.
    pub fn code(&self) -> &'static str {
        match self {
            ConfigErrorKind::Io(_) => "E001",
            ConfigErrorKind::Syntax(_) => "E002",
            ConfigErrorKind::UnknownKey(_) => "E003",
            ConfigErrorKind::DuplicateKey(_) => "E004",
            ConfigErrorKind::MissingField(_) => "E005",
            ConfigErrorKind::InvalidValue { .. } => "E006",
            ConfigErrorKind::LengthMismatch { .. } => "E007",
            ConfigErrorKind::Model(ModelError::DepreciationOutOfRange(_)) => "E008",
            ConfigErrorKind::Model(_) => "E009",
            ConfigErrorKind::UnknownPolicy(_) => "E010",
            ConfigErrorKind::ExploreTooLong { .. } => "E011",
            ConfigErrorKind::ExploreTooShort { .. } => "E012",
            ConfigErrorKind::Sweep(_) => "E013",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub kind: ConfigErrorKind,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "[{}] line {line}: {}", self.kind.code(), self.kind),
            None => write!(f, "[{}] {}", self.kind.code(), self.kind),
        }
    }
}

impl ConfigError {
    fn at(line: Option<usize>, kind: ConfigErrorKind) -> Self {
        Self { line, kind }
    }
}

/// A parsed and validated experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentFile {
    pub system: SystemConfig,
    pub policies: Vec<PolicyConfig>,
    pub trials: u64,
    pub coupled: bool,
    pub warmup: u64,
    pub output: String,
    pub sweep: Option<SweepSpec>,
}

/// Command-line values that replace file entries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub coupled: Option<bool>,
    pub te: Option<u64>,
    pub output: Option<String>,
}

const KEYS: &[&str] = &[
    "p",
    "q",
    "d",
    "horizon",
    "seed",
    "trials",
    "coupled",
    "policies",
    "te",
    "eps_scale",
    "eps_fixed",
    "warmup",
    "output",
    "sweep",
    "checkpoint",
];

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Scalar(String),
    List(Vec<String>),
}

struct Entry {
    line: usize,
    value: Value,
}

fn parse_value(raw: &str) -> Result<Value, String> {
    let raw = raw.trim();
    if let Some(inner) = raw.strip_prefix('[') {
        let inner = inner.strip_suffix(']').ok_or_else(|| format!("unterminated list `{raw}`"))?;
        if inner.contains('[') || inner.contains(']') {
            return Err(format!("nested lists are not supported: `{raw}`"));
        }
        let items: Vec<String> = inner.split(',').map(|s| s.trim().to_string()).collect();
        if items.len() == 1 && items[0].is_empty() {
            return Ok(Value::List(vec![]));
        }
        if items.iter().any(String::is_empty) {
            return Err(format!("empty list element in `{raw}`"));
        }
        Ok(Value::List(items))
    } else if raw.is_empty() {
        Err("missing value".into())
    } else {
        Ok(Value::Scalar(raw.to_string()))
    }
}

/// Splits `p=[0.9, 0.5] d=0.7` into assignments.
fn parse_case(raw: &str) -> Result<Vec<(String, Value)>, String> {
    let mut rest = raw.trim();
    let mut out = vec![];
    while !rest.is_empty() {
        let eq = rest.find('=').ok_or_else(|| format!("expected `name=value` in case `{raw}`"))?;
        let name = rest[..eq].trim().to_string();
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(format!("bad case field name `{name}`"));
        }
        rest = rest[eq + 1..].trim_start();
        let end = if rest.starts_with('[') {
            rest.find(']').map(|i| i + 1).ok_or_else(|| format!("unterminated list in case `{raw}`"))?
        } else {
            rest.find(char::is_whitespace).unwrap_or(rest.len())
        };
        out.push((name, parse_value(&rest[..end])?));
        rest = rest[end..].trim_start();
    }
    if out.is_empty() {
        return Err("empty case".into());
    }
    Ok(out)
}

fn invalid(line: Option<usize>, key: &str, detail: impl Into<String>) -> ConfigError {
    ConfigError::at(line, ConfigErrorKind::InvalidValue { key: key.to_string(), detail: detail.into() })
}

fn scalar<'a>(key: &str, e: &'a Entry) -> Result<&'a str, ConfigError> {
    match &e.value {
        Value::Scalar(s) => Ok(s),
        Value::List(_) => Err(invalid(Some(e.line), key, "expected a single value, found a list")),
    }
}

fn float_list(key: &str, line: usize, v: &Value) -> Result<Vec<f64>, ConfigError> {
    match v {
        Value::List(items) => items
            .iter()
            .map(|s| s.parse::<f64>().map_err(|_| invalid(Some(line), key, format!("`{s}` is not a number"))))
            .collect(),
        Value::Scalar(_) => Err(invalid(Some(line), key, "expected a list like [0.5, 0.7]")),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, e: &Entry) -> Result<T, ConfigError> {
    let s = scalar(key, e)?;
    s.parse::<T>().map_err(|_| invalid(Some(e.line), key, format!("`{s}` is not a valid number")))
}

fn parse_flag(key: &str, e: &Entry) -> Result<bool, ConfigError> {
    match scalar(key, e)? {
        "on" | "true" | "yes" => Ok(true),
        "off" | "false" | "no" => Ok(false),
        other => Err(invalid(Some(e.line), key, format!("`{other}` is not on/off"))),
    }
}

fn build_system(
    p: &[f64],
    q: &[f64],
    d: f64,
    horizon: u64,
    seed: u64,
    line: Option<usize>,
) -> Result<SystemConfig, ConfigError> {
    if p.len() != q.len() {
        return Err(ConfigError::at(line, ConfigErrorKind::LengthMismatch { p: p.len(), q: q.len() }));
    }
    SystemConfig::from_pq(p, q, d, horizon, seed).map_err(|e| ConfigError::at(line, ConfigErrorKind::Model(e)))
}

pub fn parse_config(path: &Path) -> Result<ExperimentFile, ConfigError> {
    parse_config_with(path, &Overrides::default())
}

pub fn parse_config_with(path: &Path, overrides: &Overrides) -> Result<ExperimentFile, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::at(None, ConfigErrorKind::Io(format!("{}: {e}", path.display()))))?;
    parse_str(&text, overrides)
}

pub fn parse_str(text: &str, overrides: &Overrides) -> Result<ExperimentFile, ConfigError> {
    let mut entries: BTreeMap<&'static str, Entry> = BTreeMap::new();
    let mut cases: Vec<(usize, Vec<(String, Value)>)> = vec![];

    for (i, raw_line) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| {
            ConfigError::at(Some(line), ConfigErrorKind::Syntax(format!("expected `key = value`, found `{content}`")))
        })?;
        let key = key.trim();
        if key == "case" {
            let fields = parse_case(value).map_err(|m| ConfigError::at(Some(line), ConfigErrorKind::Syntax(m)))?;
            cases.push((line, fields));
            continue;
        }
        let known = KEYS
            .iter()
            .copied()
            .find(|k| *k == key)
            .ok_or_else(|| ConfigError::at(Some(line), ConfigErrorKind::UnknownKey(key.to_string())))?;
        let value = parse_value(value).map_err(|m| ConfigError::at(Some(line), ConfigErrorKind::Syntax(m)))?;
        if entries.insert(known, Entry { line, value }).is_some() {
            return Err(ConfigError::at(Some(line), ConfigErrorKind::DuplicateKey(key.to_string())));
        }
    }

    let require = |k: &'static str| entries.get(k).ok_or(ConfigError::at(None, ConfigErrorKind::MissingField(k)));
    let p_entry = require("p")?;
    let q_entry = require("q")?;
    let d_entry = require("d")?;
    let h_entry = require("horizon")?;
    let p = float_list("p", p_entry.line, &p_entry.value)?;
    let q = float_list("q", q_entry.line, &q_entry.value)?;
    let d: f64 = parse_num("d", d_entry)?;
    let horizon: u64 = parse_num("horizon", h_entry)?;
    let seed: u64 = match overrides.seed {
        Some(s) => s,
        None => entries.get("seed").map(|e| parse_num("seed", e)).transpose()?.unwrap_or(1),
    };

    if p.len() != q.len() {
        return Err(ConfigError::at(Some(q_entry.line), ConfigErrorKind::LengthMismatch { p: p.len(), q: q.len() }));
    }
    let model_line = |e: &ModelError| match e {
        ModelError::DepreciationOutOfRange(_) => Some(d_entry.line),
        ModelError::ProbabilityOutOfRange { name: "p", .. } => Some(p_entry.line),
        ModelError::ProbabilityOutOfRange { .. } => Some(q_entry.line),
        ModelError::NoSources => Some(p_entry.line),
        ModelError::ZeroHorizon => Some(h_entry.line),
    };
    let system = SystemConfig::from_pq(&p, &q, d, horizon, seed)
        .map_err(|e| ConfigError::at(model_line(&e), ConfigErrorKind::Model(e)))?;

    let trials = match overrides.trials {
        Some(t) => t,
        None => entries.get("trials").map(|e| parse_num("trials", e)).transpose()?.unwrap_or(200),
    };
    if trials == 0 {
        return Err(invalid(entries.get("trials").map(|e| e.line), "trials", "must be at least 1"));
    }
    let coupled = match overrides.coupled {
        Some(c) => c,
        None => entries.get("coupled").map(|e| parse_flag("coupled", e)).transpose()?.unwrap_or(true),
    };
    let warmup: u64 = entries.get("warmup").map(|e| parse_num("warmup", e)).transpose()?.unwrap_or(0);
    let output = match &overrides.output {
        Some(o) => o.clone(),
        None => entries
            .get("output")
            .map(|e| scalar("output", e).map(str::to_string))
            .transpose()?
            .unwrap_or_else(|| "results/run".into()),
    };

    let (te, te_line) = match overrides.te {
        Some(te) => (ExploreLength::Fixed(te), None),
        None => match entries.get("te") {
            None => (ExploreLength::Auto, None),
            Some(e) => match scalar("te", e)? {
                "auto" => (ExploreLength::Auto, Some(e.line)),
                _ => (ExploreLength::Fixed(parse_num("te", e)?), Some(e.line)),
            },
        },
    };
    let epsilon = match (entries.get("eps_scale"), entries.get("eps_fixed")) {
        (Some(a), Some(_)) => return Err(invalid(Some(a.line), "eps_scale", "eps_scale and eps_fixed are exclusive")),
        (Some(e), None) => {
            let scale: f64 = parse_num("eps_scale", e)?;
            if scale.is_nan() || scale <= 0.0 {
                return Err(invalid(Some(e.line), "eps_scale", "must be positive"));
            }
            EpsilonSchedule::Annealed { scale }
        }
        (None, Some(e)) => {
            let eps: f64 = parse_num("eps_fixed", e)?;
            if !(0.0..=1.0).contains(&eps) {
                return Err(invalid(Some(e.line), "eps_fixed", "must lie in [0, 1]"));
            }
            EpsilonSchedule::Fixed(eps)
        }
        (None, None) => EpsilonSchedule::default(),
    };

    let kinds = match entries.get("policies") {
        None => PolicyKind::LEARNING.to_vec(),
        Some(e) => match &e.value {
            Value::List(items) => items
                .iter()
                .map(|s| {
                    s.parse::<PolicyKind>()
                        .map_err(|err| ConfigError::at(Some(e.line), ConfigErrorKind::UnknownPolicy(err.to_string())))
                })
                .collect::<Result<Vec<_>, _>>()?,
            Value::Scalar(s) => vec![s
                .parse::<PolicyKind>()
                .map_err(|err| ConfigError::at(Some(e.line), ConfigErrorKind::UnknownPolicy(err.to_string())))?],
        },
    };
    if kinds.is_empty() {
        return Err(invalid(entries.get("policies").map(|e| e.line), "policies", "at least one policy is required"));
    }
    let policies: Vec<PolicyConfig> = kinds.iter().map(|&kind| PolicyConfig { kind, t_explore: te, epsilon }).collect();

    let sweep = match entries.get("sweep") {
        None => {
            if let Some((line, _)) = cases.first() {
                return Err(ConfigError::at(
                    Some(*line),
                    ConfigErrorKind::Sweep("`case` lines need a `sweep = <axis>` entry".into()),
                ));
            }
            None
        }
        Some(e) => {
            let axis: SweepAxis = scalar("sweep", e)?
                .parse()
                .map_err(|m: String| ConfigError::at(Some(e.line), ConfigErrorKind::Sweep(m)))?;
            let checkpoint: u64 =
                entries.get("checkpoint").map(|c| parse_num("checkpoint", c)).transpose()?.unwrap_or(horizon);
            if checkpoint == 0 || checkpoint > horizon {
                return Err(ConfigError::at(
                    entries.get("checkpoint").map(|c| c.line),
                    ConfigErrorKind::Sweep(format!("checkpoint {checkpoint} must lie in [1, {horizon}]")),
                ));
            }
            let spec_cases = if cases.is_empty() {
                let preset = match axis {
                    SweepAxis::DeltaCases => SweepSpec::delta_cases(horizon, seed),
                    SweepAxis::PCases => SweepSpec::p_cases(horizon, seed),
                    SweepAxis::QCases => SweepSpec::q_cases(horizon, seed),
                    SweepAxis::DGrid => SweepSpec::d_grid(horizon, seed),
                };
                preset.cases
            } else {
                cases
                    .iter()
                    .enumerate()
                    .map(|(i, (line, fields))| {
                        let (mut cp, mut cq, mut cd) = (p.clone(), q.clone(), d);
                        for (name, value) in fields {
                            match name.as_str() {
                                "p" => cp = float_list("case.p", *line, value)?,
                                "q" => cq = float_list("case.q", *line, value)?,
                                "d" => {
                                    let e = Entry { line: *line, value: value.clone() };
                                    cd = parse_num("case.d", &e)?;
                                }
                                other => {
                                    return Err(ConfigError::at(
                                        Some(*line),
                                        ConfigErrorKind::UnknownKey(format!("case.{other}")),
                                    ))
                                }
                            }
                        }
                        if cp.len() != p.len() {
                            return Err(ConfigError::at(
                                Some(*line),
                                ConfigErrorKind::Sweep("every case must keep the number of sources".into()),
                            ));
                        }
                        Ok(SweepCase {
                            label: format!("case {}", i + 1),
                            config: build_system(&cp, &cq, cd, horizon, seed, Some(*line))?,
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?
            };
            Some(SweepSpec { axis, cases: spec_cases, checkpoint })
        }
    };

    let file = ExperimentFile { system, policies, trials, coupled, warmup, output, sweep };
    file.check_policies(te_line)?;
    Ok(file)
}

impl ExperimentFile {
    fn check_policies(&self, te_line: Option<usize>) -> Result<(), ConfigError> {
        let configs: Vec<&SystemConfig> = match &self.sweep {
            Some(s) => s.cases.iter().map(|c| &c.config).collect(),
            None => vec![&self.system],
        };
        for policy in self.policies.iter().filter(|p| p.kind == PolicyKind::Etc) {
            for cfg in &configs {
                match policy.resolve_explore(cfg) {
                    Ok(_) => {}
                    Err(PolicyError::ExploreTooLong { te, horizon }) => {
                        return Err(ConfigError::at(te_line, ConfigErrorKind::ExploreTooLong { te, horizon }))
                    }
                    Err(PolicyError::ExploreTooShort { te, k }) => {
                        return Err(ConfigError::at(te_line, ConfigErrorKind::ExploreTooShort { te, k }))
                    }
                    Err(PolicyError::Bounds(e)) => {
                        return Err(invalid(te_line, "te", format!("automatic exploration length unavailable: {e}")))
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG1: &str = "\
# four sources
p = [0.65, 0.7, 0.75, 0.8]
q = [0.8, 0.75, 0.7, 0.65]
d = 0.8
horizon = 30000
trials = 200
te = 9000
";

    fn parse(s: &str) -> Result<ExperimentFile, ConfigError> {
        parse_str(s, &Overrides::default())
    }

    #[test]
    fn parses_fig1() {
        let f = parse(FIG1).unwrap();
        assert_eq!(f.system.num_sources(), 4);
        assert_eq!(f.system.horizon(), 30_000);
        assert_eq!(f.trials, 200);
        assert!(f.coupled);
        assert_eq!(f.policies.len(), 4);
        assert_eq!(f.policies[0].t_explore, ExploreLength::Fixed(9000));
        assert!(f.sweep.is_none());
    }

    #[test]
    fn rejects_d_of_one_with_line() {
        let err = parse(&FIG1.replace("d = 0.8", "d = 1.0")).unwrap_err();
        assert_eq!(err.line, Some(4));
        assert_eq!(err.kind.code(), "E008");
        assert!(err.to_string().contains("depreciating factor must lie strictly inside (0,1)"));
    }

    #[test]
    fn rejects_length_mismatch() {
        let err = parse(&FIG1.replace("q = [0.8, 0.75, 0.7, 0.65]", "q = [0.8, 0.75, 0.7, 0.65, 0.6]")).unwrap_err();
        assert_eq!(err.kind, ConfigErrorKind::LengthMismatch { p: 4, q: 5 });
        assert_eq!(err.line, Some(3));
    }

    #[test]
    fn rejects_missing_field() {
        let err = parse(&FIG1.replace("horizon = 30000\n", "")).unwrap_err();
        assert_eq!(err.kind, ConfigErrorKind::MissingField("horizon"));
    }

    #[test]
    fn rejects_te_at_horizon() {
        let err = parse(&FIG1.replace("te = 9000", "te = 30000")).unwrap_err();
        assert_eq!(err.kind, ConfigErrorKind::ExploreTooLong { te: 30_000, horizon: 30_000 });
        assert_eq!(err.line, Some(7));
    }

    #[test]
    fn error_codes_are_distinct() {
        let cases = [
            FIG1.replace("d = 0.8", "d = 1.0"),
            FIG1.replace("horizon = 30000\n", ""),
            FIG1.replace("te = 9000", "te = 30000"),
            FIG1.replace("q = [0.8, 0.75, 0.7, 0.65]", "q = [0.8]"),
            format!("{FIG1}bogus = 1\n"),
            format!("{FIG1}d = 0.5\n"),
            format!("{FIG1}policies = [etc, greedy]\n"),
            format!("{FIG1}this line has no equals\n"),
        ];
        let codes: std::collections::HashSet<_> = cases.iter().map(|c| parse(c).unwrap_err().kind.code()).collect();
        assert_eq!(codes.len(), cases.len());
    }

    #[test]
    fn overrides_win() {
        let o = Overrides {
            trials: Some(3),
            seed: Some(9),
            coupled: Some(false),
            te: Some(100),
            output: Some("x/y".into()),
        };
        let f = parse_str(FIG1, &o).unwrap();
        assert_eq!(f.trials, 3);
        assert_eq!(f.system.seed(), 9);
        assert!(!f.coupled);
        assert_eq!(f.policies[0].t_explore, ExploreLength::Fixed(100));
        assert_eq!(f.output, "x/y");
    }

    #[test]
    fn sweep_cases_override_base() {
        let text = "\
p = [0.8, 0.8]
q = [0.9, 0.5]
d = 0.7
horizon = 1000
policies = [ts, ucb]
sweep = q_cases
checkpoint = 900
case = q=[0.9, 0.5]
case = q=[0.8, 0.4] d=0.6
";
        let f = parse(text).unwrap();
        let s = f.sweep.unwrap();
        assert_eq!(s.axis, SweepAxis::QCases);
        assert_eq!(s.checkpoint, 900);
        assert_eq!(s.cases.len(), 2);
        assert_eq!(s.cases[1].config.sources()[1].q(), 0.4);
        assert_eq!(s.cases[1].config.d().get(), 0.6);
    }

    #[test]
    fn sweep_without_cases_uses_preset() {
        let text = "p = [0.8, 0.8]\nq = [0.9, 0.5]\nd = 0.7\nhorizon = 1000\nsweep = p_cases\n";
        let s = parse(text).unwrap().sweep.unwrap();
        assert_eq!(s.cases.len(), 5);
        assert_eq!(s.cases[4].config.sources()[1].p(), 0.1);
    }

    #[test]
    fn bad_case_reports_its_line() {
        let text = "p = [0.8, 0.8]\nq = [0.9, 0.5]\nd = 0.7\nhorizon = 1000\nsweep = q_cases\ncase = q=[0.9, 1.5]\n";
        let err = parse(text).unwrap_err();
        assert_eq!(err.line, Some(6));
    }
}
