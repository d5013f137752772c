//! Model primitives and Bayesian beliefs of unsure voters.
//!
//! All state-odds computations run in natural-log space. The posterior
//! probability of state `H` is recovered with a logistic transform whose
//! argument is clamped to `±LOG_ODDS_CLAMP`, so very large electorates never
//! overflow.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest magnitude of log-odds fed to the logistic transform.
pub const LOG_ODDS_CLAMP: f64 = 700.0;

/// Aggregate state of the world.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum State {
    H,
    L,
}

impl State {
    pub const BOTH: [State; 2] = [State::H, State::L];

    pub fn as_str(self) -> &'static str {
        match self {
            State::H => "H",
            State::L => "L",
        }
    }
}

impl std::fmt::Display for State {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Unvalidated parameter candidate, as read from a config file.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawParams {
    pub q0: f64,
    pub rho_h: f64,
    pub rho_l: f64,
    pub lambda: f64,
    pub r: f64,
    pub s: f64,
    pub z: f64,
}

impl RawParams {
    /// Reference parameter set used throughout the test suite and as the CLI default.
    pub const CANONICAL: RawParams = RawParams {
        q0: 0.6,
        rho_h: 0.8,
        rho_l: 0.2,
        lambda: 1.0,
        r: 0.1,
        s: 1.0,
        z: 2.0,
    };

    pub fn g(&self) -> f64 {
        self.lambda * self.z
    }

    pub fn validate(self) -> Result<ModelParams, ValidationError> {
        ModelParams::new(self)
    }
}

impl Default for RawParams {
    fn default() -> Self {
        RawParams::CANONICAL
    }
}

/// One violated standing assumption.
#[derive(Clone, Debug, PartialEq, Error)]
pub enum Violation {
    #[error("field `{0}` is not finite")]
    NonFinite(&'static str),
    #[error("prior q0 = {0} is outside (0, 1)")]
    PriorOutOfRange(f64),
    #[error("type probabilities must satisfy 0 < rho_L < rho_H < 1 (rho_H = {rho_h}, rho_L = {rho_l})")]
    TypeProbOrder { rho_h: f64, rho_l: f64 },
    #[error("rho_H*g > s > rho_L*g > 0 fails (rho_H*g = {high}, s = {s}, rho_L*g = {low})")]
    Assumption1Violated { high: f64, s: f64, low: f64 },
    #[error("q0*rho_H*g + (1-q0)*rho_L*g > s fails ({lhs} <= {s})")]
    Assumption2Violated { lhs: f64, s: f64 },
    #[error("`{name}` = {value} must be > 0")]
    NonpositiveRate { name: &'static str, value: f64 },
}

impl Violation {
    /// Variant name, stable for reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Violation::NonFinite(_) => "NonFinite",
            Violation::PriorOutOfRange(_) => "PriorOutOfRange",
            Violation::TypeProbOrder { .. } => "TypeProbOrder",
            Violation::Assumption1Violated { .. } => "Assumption1Violated",
            Violation::Assumption2Violated { .. } => "Assumption2Violated",
            Violation::NonpositiveRate { .. } => "NonpositiveRate",
        }
    }
}

/// Every assumption a candidate parameter set violated.
#[derive(Clone, Debug, PartialEq, Error)]
#[error("invalid model parameters: {}", .violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
pub struct ValidationError {
    pub violations: Vec<Violation>,
}

impl ValidationError {
    pub fn contains(&self, pred: impl Fn(&Violation) -> bool) -> bool {
        self.violations.iter().any(pred)
    }
}

/// A single named inequality with its two sides, for reporting.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssumptionCheck {
    pub name: &'static str,
    pub statement: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs - rhs`; positive iff the strict inequality holds.
    pub margin: f64,
    pub holds: bool,
}

impl AssumptionCheck {
    fn new(name: &'static str, statement: &'static str, lhs: f64, rhs: f64) -> Self {
        let margin = lhs - rhs;
        AssumptionCheck {
            name,
            statement,
            lhs,
            rhs,
            margin,
            holds: margin > 0.0,
        }
    }
}

/// The inequalities behind [`ModelParams::new`], each with its margin.
pub fn assumption_report(raw: &RawParams) -> Vec<AssumptionCheck> {
    let g = raw.g();
    let mixed = raw.q0 * raw.rho_h * g + (1.0 - raw.q0) * raw.rho_l * g;
    vec![
        AssumptionCheck::new("prior_lower", "q0 > 0", raw.q0, 0.0),
        AssumptionCheck::new("prior_upper", "1 > q0", 1.0, raw.q0),
        AssumptionCheck::new("rho_h_below_one", "1 > rho_H", 1.0, raw.rho_h),
        AssumptionCheck::new("rho_order", "rho_H > rho_L", raw.rho_h, raw.rho_l),
        AssumptionCheck::new("rho_l_positive", "rho_L > 0", raw.rho_l, 0.0),
        AssumptionCheck::new("lambda_positive", "lambda > 0", raw.lambda, 0.0),
        AssumptionCheck::new("r_positive", "r > 0", raw.r, 0.0),
        AssumptionCheck::new("s_positive", "s > 0", raw.s, 0.0),
        AssumptionCheck::new("z_positive", "z > 0", raw.z, 0.0),
        AssumptionCheck::new("eq1_high", "rho_H*g > s", raw.rho_h * g, raw.s),
        AssumptionCheck::new("eq1_low", "s > rho_L*g", raw.s, raw.rho_l * g),
        AssumptionCheck::new("eq2", "q0*rho_H*g + (1-q0)*rho_L*g > s", mixed, raw.s),
    ]
}

/// Validated model primitives.
///
/// The expected risky flow `g = lambda * z` is always derived, never stored.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    raw: RawParams,
}

impl ModelParams {
    pub fn new(raw: RawParams) -> Result<Self, ValidationError> {
        let mut violations = Vec::new();
        let fields = [
            ("q0", raw.q0),
            ("rho_h", raw.rho_h),
            ("rho_l", raw.rho_l),
            ("lambda", raw.lambda),
            ("r", raw.r),
            ("s", raw.s),
            ("z", raw.z),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                violations.push(Violation::NonFinite(name));
            }
        }
        if !violations.is_empty() {
            return Err(ValidationError { violations });
        }

        if !(raw.q0 > 0.0 && raw.q0 < 1.0) {
            violations.push(Violation::PriorOutOfRange(raw.q0));
        }
        if !(raw.rho_l > 0.0 && raw.rho_h > raw.rho_l && raw.rho_h < 1.0) {
            violations.push(Violation::TypeProbOrder {
                rho_h: raw.rho_h,
                rho_l: raw.rho_l,
            });
        }
        for (name, value) in [("lambda", raw.lambda), ("r", raw.r), ("s", raw.s), ("z", raw.z)] {
            if value <= 0.0 {
                violations.push(Violation::NonpositiveRate { name, value });
            }
        }

        let g = raw.g();
        let (high, low) = (raw.rho_h * g, raw.rho_l * g);
        if !(high > raw.s && raw.s > low && low > 0.0) {
            violations.push(Violation::Assumption1Violated { high, s: raw.s, low });
        }
        let lhs = raw.q0 * high + (1.0 - raw.q0) * low;
        if !(lhs > raw.s) {
            violations.push(Violation::Assumption2Violated { lhs, s: raw.s });
        }

        if violations.is_empty() {
            Ok(ModelParams { raw })
        } else {
            Err(ValidationError { violations })
        }
    }

    pub fn canonical() -> Self {
        ModelParams::new(RawParams::CANONICAL).expect("canonical parameters are valid")
    }

    pub fn raw(&self) -> RawParams {
        self.raw
    }
    pub fn q0(&self) -> f64 {
        self.raw.q0
    }
    pub fn rho_h(&self) -> f64 {
        self.raw.rho_h
    }
    pub fn rho_l(&self) -> f64 {
        self.raw.rho_l
    }
    pub fn lambda(&self) -> f64 {
        self.raw.lambda
    }
    pub fn r(&self) -> f64 {
        self.raw.r
    }
    pub fn s(&self) -> f64 {
        self.raw.s
    }
    pub fn z(&self) -> f64 {
        self.raw.z
    }
    pub fn g(&self) -> f64 {
        self.raw.g()
    }

    pub fn rho(&self, state: State) -> f64 {
        match state {
            State::H => self.raw.rho_h,
            State::L => self.raw.rho_l,
        }
    }

    /// Probability that a good type has seen at least one lump sum by `t`: `1 - e^{-lambda t}`.
    pub fn arrival_cdf(&self, t: f64) -> f64 {
        -(-self.raw.lambda * t).exp_m1()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Error)]
pub enum BeliefError {
    #[error("time must be finite and non-negative, got {0}")]
    NegativeTime(f64),
    #[error("sure-winner count {k} exceeds population {n}")]
    CountOutOfRange { n: u64, k: u64 },
    #[error("{0} sure winners at t = 0 is a probability-zero event")]
    DegenerateEvent(u64),
}

fn check_event(n: u64, k: u64, t: f64) -> Result<(), BeliefError> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(BeliefError::NegativeTime(t));
    }
    if k > n {
        return Err(BeliefError::CountOutOfRange { n, k });
    }
    if k >= 1 && t == 0.0 {
        return Err(BeliefError::DegenerateEvent(k));
    }
    Ok(())
}

/// `Pr(good | state, t)` for an agent who has seen no lump sum by `t`.
pub fn p_good_given_state(params: &ModelParams, state: State, t: f64) -> f64 {
    let rho = params.rho(state);
    let survive = (-params.lambda() * t).exp();
    rho * survive / (rho * survive + 1.0 - rho)
}

/// Natural-log posterior odds of `H` against `L` given `k` sure winners among `n` at `t`.
pub fn log_posterior_odds(params: &ModelParams, n: u64, k: u64, t: f64) -> Result<f64, BeliefError> {
    check_event(n, k, t)?;
    let x = params.arrival_cdf(t);
    let prior = params.q0().ln() - (-params.q0()).ln_1p();
    let winners = if k == 0 {
        0.0
    } else {
        k as f64 * (params.rho_h().ln() - params.rho_l().ln())
    };
    let unsure = (n - k) as f64 * ((-params.rho_h() * x).ln_1p() - (-params.rho_l() * x).ln_1p());
    Ok(prior + winners + unsure)
}

/// Logistic transform with the log-odds clamped to `±LOG_ODDS_CLAMP`.
pub fn logistic(log_odds: f64) -> f64 {
    let l = log_odds.clamp(-LOG_ODDS_CLAMP, LOG_ODDS_CLAMP);
    if l >= 0.0 {
        1.0 / (1.0 + (-l).exp())
    } else {
        let e = l.exp();
        e / (1.0 + e)
    }
}

/// Posterior probability of `H` given `k` sure winners among `n` at `t`.
pub fn p_state_h(params: &ModelParams, n: u64, k: u64, t: f64) -> Result<f64, BeliefError> {
    log_posterior_odds(params, n, k, t).map(logistic)
}

/// An unsure voter's belief that her type is good given `k` sure winners at `t`.
pub fn p_good_given_winners(params: &ModelParams, n: u64, k: u64, t: f64) -> Result<f64, BeliefError> {
    belief_point(params, n, k, t).map(|b| b.p_good)
}

/// Every intermediate quantity of the belief computation at one `(t, k)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BeliefPoint {
    pub t: f64,
    pub k: u64,
    pub p_good_h: f64,
    pub p_good_l: f64,
    pub log_odds_h: f64,
    pub p_h: f64,
    pub p_good: f64,
}

pub fn belief_point(params: &ModelParams, n: u64, k: u64, t: f64) -> Result<BeliefPoint, BeliefError> {
    let log_odds_h = log_posterior_odds(params, n, k, t)?;
    let p_h = logistic(log_odds_h);
    let p_good_h = p_good_given_state(params, State::H, t);
    let p_good_l = p_good_given_state(params, State::L, t);
    Ok(BeliefPoint {
        t,
        k,
        p_good_h,
        p_good_l,
        log_odds_h,
        p_h,
        p_good: p_h * p_good_h + (1.0 - p_h) * p_good_l,
    })
}
