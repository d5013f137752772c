//! Large-population limits: myopic and limit cut-offs, the quorum thresholds
//! that separate their regimes, limit winner fractions, and the aggregation
//! classification.
//!
//! Every quantity has a closed form. The interior limit cut-off solves
//!
//! ```text
//! (rho_H/rho_L)^k * [(1 - rho_H x)/(1 - rho_L x)]^(1-k) = 1,   x = 1 - e^{-lambda t}
//! ```
//!
//! which rearranges to `x = (A - 1)/(A rho_H - rho_L)` with
//! `A = (rho_H/rho_L)^(k/(1-k))`.

use serde::Serialize;
use thiserror::Error;

use crate::model::{ModelParams, State};

#[derive(Clone, Copy, Debug, PartialEq, Error)]
pub enum DomainError {
    #[error("k = {k} is outside (0, k_hat = {k_hat}); the interior equation has no root")]
    OutsideInteriorRange { k: f64, k_hat: f64 },
    #[error("k = {0} is outside (0, 1]")]
    ThresholdOutOfRange(f64),
}

/// Which regime the limit cut-off is in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Interior,
    Myopic,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Interior => "interior",
            Branch::Myopic => "myopic",
        }
    }
}

/// Whether the equilibrium sequence aggregates information at a given quorum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Aggregation {
    Aggregates,
    FailsInH,
}

/// Cut-off of a myopic single agent certain the state is `H`: `Pr(good | H, t) = s/g`.
pub fn myopic_cutoff(params: &ModelParams) -> f64 {
    let (rho, g, s) = (params.rho_h(), params.g(), params.s());
    (rho * (g - s) / (s * (1.0 - rho))).ln() / params.lambda()
}

/// Quorum at which the pivotal likelihood ratio stays above one for every `t`.
pub fn k_hat(params: &ModelParams) -> f64 {
    let (lr_win, lr_unsure) = log_ratios(params);
    lr_unsure / (lr_win + lr_unsure)
}

/// `(ln(rho_H/rho_L), ln((1-rho_L)/(1-rho_H)))`.
fn log_ratios(params: &ModelParams) -> (f64, f64) {
    let (h, l) = (params.rho_h(), params.rho_l());
    (h.ln() - l.ln(), (-l).ln_1p() - (-h).ln_1p())
}

/// Limit cumulative-arrival fraction `x_k` on the interior branch, together with `1 - x_k`.
fn interior_x(params: &ModelParams, k: f64) -> Result<(f64, f64), DomainError> {
    let k_hat = k_hat(params);
    if !(k > 0.0 && k < k_hat) {
        return Err(DomainError::OutsideInteriorRange { k, k_hat });
    }
    let (h, l) = (params.rho_h(), params.rho_l());
    let a = (k / (1.0 - k) * (h.ln() - l.ln())).exp();
    let denom = a * h - l;
    // 1 - x written without cancellation: (1 - rho_L) - A (1 - rho_H), over the same denominator
    let one_minus_x = ((1.0 - l) - a * (1.0 - h)) / denom;
    Ok(((a - 1.0) / denom, one_minus_x))
}

/// Interior limit cut-off for `0 < k < k_hat`.
pub fn limit_cutoff_interior(params: &ModelParams, k: f64) -> Result<f64, DomainError> {
    let (_, one_minus_x) = interior_x(params, k)?;
    Ok(-one_minus_x.ln() / params.lambda())
}

/// `x_k = 1 - e^{-lambda t'_k}` on the interior branch.
pub fn interior_arrival_fraction(params: &ModelParams, k: f64) -> Result<f64, DomainError> {
    interior_x(params, k).map(|(x, _)| x)
}

/// Quorum at which the interior limit cut-off reaches the myopic one.
///
/// Inverts the closed form for `x_k` at `x = 1 - e^{-lambda t_bar}`.
pub fn k_bar(params: &ModelParams) -> f64 {
    let x = params.arrival_cdf(myopic_cutoff(params));
    let (h, l) = (params.rho_h(), params.rho_l());
    let ln_a = (-l * x).ln_1p() - (-h * x).ln_1p();
    let a = ln_a / (h.ln() - l.ln());
    a / (1.0 + a)
}

fn check_threshold(k: f64) -> Result<(), DomainError> {
    if k > 0.0 && k <= 1.0 {
        Ok(())
    } else {
        Err(DomainError::ThresholdOutOfRange(k))
    }
}

/// Limit cut-off and its branch.
pub fn limit_cutoff_with_branch(params: &ModelParams, k: f64) -> Result<(f64, Branch), DomainError> {
    check_threshold(k)?;
    if k < k_bar(params) {
        Ok((limit_cutoff_interior(params, k)?, Branch::Interior))
    } else {
        Ok((myopic_cutoff(params), Branch::Myopic))
    }
}

/// Large-population limit of the equilibrium cut-off.
pub fn limit_cutoff(params: &ModelParams, k: f64) -> Result<f64, DomainError> {
    limit_cutoff_with_branch(params, k).map(|(t, _)| t)
}

/// Highest quorum (exclusive) at which information is aggregated: `(rho_H g - s)/(g - s)`.
pub fn aggregation_threshold(params: &ModelParams) -> f64 {
    let (g, s) = (params.g(), params.s());
    (params.rho_h() * g - s) / (g - s)
}

/// Limit fraction of sure winners at the limit cut-off in `state`.
pub fn winner_fraction_limit(params: &ModelParams, state: State, k: f64) -> Result<f64, DomainError> {
    let t = limit_cutoff(params, k)?;
    Ok(params.rho(state) * params.arrival_cdf(t))
}

// k within this distance of k* counts as the boundary, which fails
const BOUNDARY_SLACK: f64 = 1e-12;

/// `Aggregates` iff `k < k*`; the boundary itself fails.
pub fn classify_aggregation(params: &ModelParams, k: f64) -> Result<Aggregation, DomainError> {
    check_threshold(k)?;
    Ok(if k < aggregation_threshold(params) - BOUNDARY_SLACK {
        Aggregation::Aggregates
    } else {
        Aggregation::FailsInH
    })
}

/// Optimal stopping time of a single forward-looking agent certain of state `H`.
pub fn undominated_sincerity_cutoff(params: &ModelParams) -> f64 {
    let (g, s, r, lambda) = (params.g(), params.s(), params.r(), params.lambda());
    let c = r * s / ((r + lambda) * g - lambda * s);
    let rho = params.rho_h();
    (rho * (1.0 - c) / (c * (1.0 - rho))).ln() / lambda
}

/// Probability that none of `n` agents is a sure winner at `t` in `state`.
pub fn prob_no_winner(params: &ModelParams, state: State, t: f64, n: u64) -> f64 {
    let p = params.rho(state) * params.arrival_cdf(t);
    (n as f64 * (-p).ln_1p()).exp()
}

/// Limit quantities at one quorum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuorumLimit {
    pub k: f64,
    pub t_hat_k: f64,
    pub branch: Branch,
    pub x_k: f64,
    pub frac_h: f64,
    pub frac_l: f64,
    pub aggregation: Aggregation,
}

/// Parameter-level limit quantities plus per-quorum rows.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AsymptoticProfile {
    pub t_bar: f64,
    pub k_hat: f64,
    pub k_bar: f64,
    pub k_star: f64,
    pub t_tilde: f64,
    pub quorums: Vec<QuorumLimit>,
}

impl AsymptoticProfile {
    pub fn new(params: &ModelParams, ks: &[f64]) -> Result<Self, DomainError> {
        let quorums = ks
            .iter()
            .map(|&k| quorum_limit(params, k))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(AsymptoticProfile {
            t_bar: myopic_cutoff(params),
            k_hat: k_hat(params),
            k_bar: k_bar(params),
            k_star: aggregation_threshold(params),
            t_tilde: undominated_sincerity_cutoff(params),
            quorums,
        })
    }
}

pub fn quorum_limit(params: &ModelParams, k: f64) -> Result<QuorumLimit, DomainError> {
    let (t_hat_k, branch) = limit_cutoff_with_branch(params, k)?;
    let x_k = params.arrival_cdf(t_hat_k);
    Ok(QuorumLimit {
        k,
        t_hat_k,
        branch,
        x_k,
        frac_h: params.rho_h() * x_k,
        frac_l: params.rho_l() * x_k,
        aggregation: classify_aggregation(params, k)?,
    })
}
