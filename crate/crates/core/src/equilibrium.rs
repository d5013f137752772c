//! Finite-population equilibrium cut-off.
//!
//! At the cut-off an unsure voter, conditioning on being pivotal (exactly
//! `M - 1` sure winners), is indifferent between the safe flow `s` and
//!
//! ```text
//! f(t) = P1 * lambda * [ z + (g - s)/r + (N - M) * (P2*g - s)/r ]
//! ```
//!
//! with `P1 = Pr(good | M-1, t)` and `P2 = Pr(good | M, t)`. `f` starts above
//! `s`, tends to zero, and is strictly decreasing wherever it is positive, so
//! the crossing is unique and bisection finds it.

use serde::Serialize;
use thiserror::Error;

use crate::model::{belief_point, p_good_given_winners, BeliefError, ModelParams};

/// Default relative tolerance on the cut-off time.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Largest relative tolerance `solve_cutoff` accepts.
pub const MAX_TOL: f64 = 1e-3;
/// Iteration budget shared by bracket expansion and bisection.
pub const MAX_ITERATIONS: u32 = 200;

// absorbs rounding in k*N so that e.g. 0.3 * 10 gives M = 3
const QUORUM_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Error)]
pub enum RuleError {
    #[error("threshold k = {0} is outside (0, 1]")]
    ThresholdOutOfRange(f64),
    #[error("population must be at least 1")]
    EmptyPopulation,
}

/// Qualified-majority rule: `R` is implemented iff at least `M = ceil(k N)` agents vote for it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuorumRule {
    k: f64,
    n: u64,
    m: u64,
}

impl QuorumRule {
    pub fn new(k: f64, n: u64) -> Result<Self, RuleError> {
        if !(k > 0.0 && k <= 1.0) {
            return Err(RuleError::ThresholdOutOfRange(k));
        }
        if n == 0 {
            return Err(RuleError::EmptyPopulation);
        }
        let m = ((k * n as f64 - QUORUM_SLACK).ceil() as u64).clamp(1, n);
        Ok(QuorumRule { k, n, m })
    }

    pub fn k(&self) -> f64 {
        self.k
    }
    pub fn n(&self) -> u64 {
        self.n
    }
    /// Integer vote threshold.
    pub fn m(&self) -> u64 {
        self.m
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Error)]
pub enum SolveError {
    #[error("tolerance {0} is outside (0, 1e-3]")]
    InvalidTolerance(f64),
    #[error("f(t) <= s already at t = {at}: no interior equilibrium")]
    NoInteriorEquilibrium { at: f64 },
    #[error("bisection did not converge after {iterations} iterations (bracket [{lo}, {hi}], residual {residual})")]
    NonConvergence {
        iterations: u32,
        lo: f64,
        hi: f64,
        residual: f64,
    },
    #[error(transparent)]
    Belief(#[from] BeliefError),
}

/// Right side of the indifference condition at time `t > 0`.
pub fn indifference_rhs(params: &ModelParams, rule: &QuorumRule, t: f64) -> Result<f64, BeliefError> {
    let (n, m) = (rule.n(), rule.m());
    let p1 = p_good_given_winners(params, n, m - 1, t)?;
    let (g, s, r) = (params.g(), params.s(), params.r());
    let others = if m < n {
        let p2 = p_good_given_winners(params, n, m, t)?;
        (n - m) as f64 * (p2 * g - s) / r
    } else {
        0.0
    };
    Ok(p1 * params.lambda() * (params.z() + (g - s) / r + others))
}

/// Equilibrium cut-off with solver diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CutoffSolution {
    pub t_hat: f64,
    /// `f(t_hat) - s`, in payoff-rate units.
    pub residual: f64,
    pub bracket_lo: f64,
    pub bracket_hi: f64,
    pub iterations: u32,
    /// `Pr(good | M-1, t_hat)`.
    pub pivotal_belief: f64,
}

/// Solves `f(t) = s` for the unique equilibrium cut-off.
///
/// The upper bracket starts at `1/lambda` and doubles until `f < s`; bisection
/// then runs until the bracket is narrower than `tol * max(t, 1/lambda)` and
/// the residual is within `tol * s`. For very large populations `f` can be so
/// steep that no double meets the residual bound; the bracket then shrinks to
/// adjacent floats and the endpoint with the smaller residual is returned.
pub fn solve_cutoff(params: &ModelParams, rule: &QuorumRule, tol: f64) -> Result<CutoffSolution, SolveError> {
    if !(tol > 0.0 && tol <= MAX_TOL) {
        return Err(SolveError::InvalidTolerance(tol));
    }
    let s = params.s();
    let scale = 1.0 / params.lambda();
    let excess = |t: f64| indifference_rhs(params, rule, t).map(|f| f - s);

    let eps = 1e-12 * scale;
    if excess(eps)? <= 0.0 {
        return Err(SolveError::NoInteriorEquilibrium { at: eps });
    }

    let mut iterations = 0;
    let mut lo = eps;
    let mut hi = scale;
    while excess(hi)? >= 0.0 {
        lo = hi;
        hi *= 2.0;
        iterations += 1;
        if iterations >= MAX_ITERATIONS || !hi.is_finite() {
            return Err(SolveError::NonConvergence {
                iterations,
                lo,
                hi,
                residual: excess(hi)?,
            });
        }
    }

    loop {
        let mid = 0.5 * (lo + hi);
        let residual = excess(mid)?;
        let (bracket_lo, bracket_hi) = (lo, hi);
        iterations += 1;
        if hi - lo <= tol * mid.max(scale) && residual.abs() <= tol * s {
            return Ok(CutoffSolution {
                t_hat: mid,
                residual,
                bracket_lo,
                bracket_hi,
                iterations,
                pivotal_belief: belief_point(params, rule.n(), rule.m() - 1, mid)?.p_good,
            });
        }
        if mid <= lo || mid >= hi {
            // bracket is down to adjacent floats: the closer endpoint is the best representable root
            let (t_hat, residual) = [(lo, excess(lo)?), (hi, excess(hi)?)]
                .into_iter()
                .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                .expect("two candidates");
            return Ok(CutoffSolution {
                t_hat,
                residual,
                bracket_lo,
                bracket_hi,
                iterations,
                pivotal_belief: belief_point(params, rule.n(), rule.m() - 1, t_hat)?.p_good,
            });
        }
        if iterations >= MAX_ITERATIONS {
            return Err(SolveError::NonConvergence {
                iterations,
                lo,
                hi,
                residual,
            });
        }
        if residual > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}
