//! Closed-form regret bound evaluators.
//!
//! The expressions are evaluated as stated, including in regimes where they
//! are vacuous or change sign. Those regimes are reported through
//! [`Diagnostic`]s rather than patched.

use serde::Serialize;
use thiserror::Error;

use crate::model::SystemConfig;
use crate::oracle::optimal_source;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("degenerate gap: the best two sources have equal quality, so c is undefined")]
    DegenerateGap,
    #[error("at least two sources are required for {0}")]
    RequiresTwoSources(&'static str),
    #[error("alpha > 1 required by the upper bounds, got {0}")]
    InvalidAlpha(f64),
    #[error("gamma must lie in (0,1), got {0}")]
    InvalidGamma(f64),
    #[error("the consistency constant C must be positive, got {0}")]
    InvalidConsistencyConstant(f64),
    #[error("horizon {horizon} is below the minimum {min} for this bound")]
    HorizonTooSmall { horizon: u64, min: u64 },
    #[error("term {term} is outside its domain: {detail}")]
    Domain { term: usize, detail: String },
    #[error("no exploration length fits in [{k}, {horizon} - 1]")]
    ExploreWindowEmpty { k: usize, horizon: u64 },
}

/// A non-fatal remark about an evaluated bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    /// 1-based term index within the bound, when the remark concerns one term.
    pub term: Option<usize>,
    pub message: String,
}

impl Diagnostic {
    fn new(term: Option<usize>, message: impl Into<String>) -> Self {
        Self { term, message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceConstants {
    pub k: usize,
    pub d: f64,
    pub best_index: usize,
    pub mu: Vec<f64>,
    pub mu_star: f64,
    pub mu_min: f64,
    pub p_star: f64,
    pub q_star: f64,
    pub p_min: f64,
    pub q_min: f64,
    /// `mu* - max_{k != k*} mu_k`.
    pub delta: Option<f64>,
    /// `min_{k != k*} p_k - p_{k*}`.
    pub delta_p: Option<f64>,
    /// `-2 / ln(d (1 - p*))`, taken as 0 when `p* = 1`.
    pub c_age_term: f64,
    /// `4 K / (Delta^2 (1 - d)^2)`.
    pub c_gap_term: Option<f64>,
    /// Max of the two terms above.
    pub c: Option<f64>,
}

impl InstanceConstants {
    fn require_c(&self, what: &'static str) -> Result<f64, BoundsError> {
        self.c.ok_or(BoundsError::RequiresTwoSources(what))
    }
}

pub fn instance_constants(config: &SystemConfig) -> Result<InstanceConstants, BoundsError> {
    let quality = optimal_source(config);
    let d = config.d().get();
    let k = config.num_sources();
    let best = quality.best_index;
    let sources = config.sources();
    let (p_star, q_star) = (sources[best].p(), sources[best].q());
    let p_min = sources.iter().map(|s| s.p()).fold(f64::INFINITY, f64::min);
    let q_min = sources.iter().map(|s| s.q()).fold(f64::INFINITY, f64::min);
    let mu_min = quality.mu.iter().copied().fold(f64::INFINITY, f64::min);

    let age_arg = d * (1.0 - p_star);
    let c_age_term = if age_arg > 0.0 { -2.0 / age_arg.ln() } else { 0.0 };

    let delta = quality.gap;
    if delta == Some(0.0) {
        return Err(BoundsError::DegenerateGap);
    }
    let delta_p = (k >= 2).then(|| {
        sources.iter().enumerate().filter(|&(i, _)| i != best).map(|(_, s)| s.p()).fold(f64::INFINITY, f64::min)
            - p_star
    });
    let c_gap_term = delta.map(|g| 4.0 * k as f64 / (g * g * (1.0 - d) * (1.0 - d)));
    let c = c_gap_term.map(|g| g.max(c_age_term));

    Ok(InstanceConstants {
        k,
        d,
        best_index: best,
        mu_star: quality.mu_star(),
        mu: quality.mu,
        mu_min,
        p_star,
        q_star,
        p_min,
        q_min,
        delta,
        delta_p,
        c_age_term,
        c_gap_term,
        c,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExploreSchedule {
    pub slots: u64,
    /// `c ln T` before rounding and clamping.
    pub raw: f64,
    pub diagnostics: Vec<Diagnostic>,
}

/// ETC exploration length `round(c ln T)`, clamped to `[K, T - 1]`.
pub fn etc_te_schedule(horizon: u64, k: usize, consts: &InstanceConstants) -> Result<ExploreSchedule, BoundsError> {
    if horizon <= k as u64 {
        return Err(BoundsError::ExploreWindowEmpty { k, horizon });
    }
    let (lo, hi) = (k as u64, horizon - 1);
    let Some(c) = consts.c else {
        return Ok(ExploreSchedule {
            slots: lo,
            raw: f64::NAN,
            diagnostics: vec![Diagnostic::new(None, "single source: c is undefined, exploring each source once")],
        });
    };
    let raw = c * (horizon as f64).ln();
    let rounded = raw.round();
    let mut diagnostics = vec![];
    let slots = if rounded > hi as f64 {
        diagnostics.push(Diagnostic::new(None, format!("c ln T = {raw:.6e} exceeds T - 1, clamped to {hi}")));
        hi
    } else if rounded < lo as f64 {
        diagnostics.push(Diagnostic::new(None, format!("c ln T = {raw:.6e} is below K, clamped to {lo}")));
        lo
    } else {
        rounded as u64
    };
    Ok(ExploreSchedule { slots, raw, diagnostics })
}

fn check_alpha(alpha: f64) -> Result<(), BoundsError> {
    if alpha > 1.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(BoundsError::InvalidAlpha(alpha))
    }
}

/// ETC upper bound `mu* [alpha c ln T (1 + K/T^4) + K/T + 1/T^3]`.
pub fn etc_upper_bound(horizon: u64, alpha: f64, consts: &InstanceConstants) -> Result<f64, BoundsError> {
    check_alpha(alpha)?;
    if horizon < 2 {
        return Err(BoundsError::HorizonTooSmall { horizon, min: 2 });
    }
    let c = consts.require_c("the ETC bound")?;
    let t = horizon as f64;
    let k = consts.k as f64;
    Ok(consts.mu_star * (alpha * c * t.ln() * (1.0 + k / t.powi(4)) + (k / t + 1.0 / t.powi(3))))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundEvaluation {
    pub value: f64,
    /// Bracketed terms before scaling by `mu*`.
    pub terms: Vec<f64>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Five-term epsilon-greedy upper bound, scaled by `mu*`.
///
/// Terms, with `x = c / K` and `L = ln T`:
/// 1. `alpha c L`
/// 2. `(K - 1) x / (1 - x) * (1 / ((alpha - 1) c L + 1))^((1 - x) / x)`
/// 3. `K c L ln^3(T - c L + 1)`
/// 4. `1 / T`
/// 5. `c^2 L (K - 1) / T^2 * exp(-ln^3(alpha c L - c L + 1) / x)`
///
/// Term 3 needs `T - c L + 1 > 1`; outside that the evaluation fails. When
/// `x > 1` term 2 changes sign; it is still evaluated and flagged.
pub fn eg_upper_bound(horizon: u64, alpha: f64, consts: &InstanceConstants) -> Result<BoundEvaluation, BoundsError> {
    check_alpha(alpha)?;
    if horizon < 2 {
        return Err(BoundsError::HorizonTooSmall { horizon, min: 2 });
    }
    let c = consts.require_c("the epsilon-greedy bound")?;
    let t = horizon as f64;
    let k = consts.k as f64;
    let ln_t = t.ln();
    let x = c / k;
    let mut diagnostics = vec![];

    if x == 1.0 {
        return Err(BoundsError::Domain { term: 2, detail: "c / K = 1 makes x / (1 - x) infinite".into() });
    }
    let remaining = t - c * ln_t + 1.0;
    if remaining <= 1.0 {
        return Err(BoundsError::Domain { term: 3, detail: format!("T - c ln T + 1 = {remaining:.6e} must exceed 1") });
    }
    if x > 1.0 {
        diagnostics.push(Diagnostic::new(
            Some(2),
            format!("c / K = {x:.6e} >= 1: exponent (1 - c/K)/(c/K) is negative and the coefficient changes sign"),
        ));
    }

    let t1 = alpha * c * ln_t;
    let t2 = (k - 1.0) * (x / (1.0 - x)) * (1.0 / ((alpha - 1.0) * c * ln_t + 1.0)).powf((1.0 - x) / x);
    let t3 = k * c * ln_t * remaining.ln().powi(3);
    let t4 = 1.0 / t;
    let t5 = c * c * ln_t * (k - 1.0) / (t * t) * (-((alpha - 1.0) * c * ln_t + 1.0).ln().powi(3) / x).exp();
    let terms = vec![t1, t2, t3, t4, t5];
    if let Some(i) = terms.iter().position(|v| !v.is_finite()) {
        return Err(BoundsError::Domain { term: i + 1, detail: "evaluates to a non-finite value".into() });
    }
    let value = consts.mu_star * terms.iter().sum::<f64>();
    Ok(BoundEvaluation { value, terms, diagnostics })
}

/// Bernoulli KL divergence `a ln(a/b) + (1-a) ln((1-a)/(1-b))`, `0 ln 0 = 0`.
///
/// Infinite when `b` is 0 or 1 and `a` puts mass where `b` has none.
pub fn bernoulli_kl(a: f64, b: f64) -> f64 {
    fn part(x: f64, y: f64) -> f64 {
        if x == 0.0 {
            0.0
        } else if y == 0.0 {
            f64::INFINITY
        } else {
            x * (x / y).ln()
        }
    }
    part(a, b) + part(1.0 - a, 1.0 - b)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowerBound {
    /// `(K-1) D(mu) Delta_p / Delta * mu* * d ((1-gamma) ln T - ln(4 K C))`.
    pub log_component: f64,
    /// `(p* q* - p_min q_min) T`.
    pub linear_component: f64,
    pub total: f64,
    /// `Delta / (K KL(mu_min, (mu* + 1)/2))`; `None` for a single source.
    pub d_mu: Option<f64>,
    pub diagnostics: Vec<Diagnostic>,
}

pub fn lower_bound(
    horizon: u64,
    gamma: f64,
    consistency: f64,
    consts: &InstanceConstants,
) -> Result<LowerBound, BoundsError> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(BoundsError::InvalidGamma(gamma));
    }
    if !(consistency > 0.0 && consistency.is_finite()) {
        return Err(BoundsError::InvalidConsistencyConstant(consistency));
    }
    if horizon < 2 {
        return Err(BoundsError::HorizonTooSmall { horizon, min: 2 });
    }
    let t = horizon as f64;
    let k = consts.k as f64;
    let mut diagnostics = vec![];
    let linear_component = (consts.p_star * consts.q_star - consts.p_min * consts.q_min) * t;

    let (log_component, d_mu) = match (consts.delta, consts.delta_p) {
        (Some(delta), Some(delta_p)) => {
            let kl = bernoulli_kl(consts.mu_min, (consts.mu_star + 1.0) / 2.0);
            let d_mu = if kl.is_infinite() { 0.0 } else { delta / (k * kl) };
            let log_term = (1.0 - gamma) * t.ln() - (4.0 * k * consistency).ln();
            if delta_p < 0.0 {
                diagnostics.push(Diagnostic::new(Some(1), format!("Delta_p = {delta_p:.6} is negative")));
            }
            if log_term < 0.0 {
                diagnostics.push(Diagnostic::new(
                    Some(1),
                    format!("(1 - gamma) ln T - ln(4 K C) = {log_term:.6} is negative at this horizon"),
                ));
            }
            ((k - 1.0) * d_mu * delta_p / delta * consts.mu_star * consts.d * log_term, Some(d_mu))
        }
        _ => (0.0, None),
    };
    Ok(LowerBound { log_component, linear_component, total: log_component + linear_component, d_mu, diagnostics })
}
