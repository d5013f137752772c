//! Seeded Monte Carlo of the voting game.
//!
//! Only each agent's first lump-sum arrival is drawn: it alone decides
//! sure-winner status. Payoffs are expected discounted values given type and
//! the path event, so later arrivals enter only through their mean flow `g`.

pub mod rng;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::asymptotics::{prob_no_winner, DomainError};
use crate::equilibrium::{solve_cutoff, QuorumRule, SolveError};
use crate::model::{ModelParams, State};
use crate::stats::{binomial_cdf_lt, binomial_tail_ge, wilson_interval, Interval, Z_95};

pub use rng::{Stratum, SubstreamKey, WorldStream};

/// Smallest replicate count accepted by the estimators.
pub const MIN_REPLICATES: u64 = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Error)]
pub enum SimError {
    #[error("need at least {MIN_REPLICATES} replicates, got {0}")]
    TooFewReplicates(u64),
    #[error("t1 = {t1} must lie in (0, t_hat = {t_hat})")]
    InvalidT1 { t1: f64, t_hat: f64 },
    #[error("cut-off {0} must be finite and non-negative")]
    InvalidCutoff(f64),
    #[error("population sizes must be strictly increasing")]
    PopulationsNotIncreasing,
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// Collective action in force after the decisive vote.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Implemented {
    #[serde(rename = "R_forever")]
    RForever,
    #[serde(rename = "S_forever")]
    SForever,
}

impl Implemented {
    pub fn as_str(self) -> &'static str {
        match self {
            Implemented::RForever => "R_forever",
            Implemented::SForever => "S_forever",
        }
    }
}

/// One realisation of state, types and first arrivals.
#[derive(Clone, Debug, PartialEq)]
pub struct WorldDraw {
    pub state: State,
    pub good: Vec<bool>,
    /// First lump-sum time; `+inf` for bad types.
    pub first_arrival: Vec<f64>,
    pub key: SubstreamKey,
}

impl WorldDraw {
    pub fn n(&self) -> u64 {
        self.good.len() as u64
    }

    pub fn good_count(&self) -> u64 {
        self.good.iter().filter(|&&g| g).count() as u64
    }
}

fn resolve_state(params: &ModelParams, stratum: Stratum, u: f64) -> State {
    match stratum {
        Stratum::Forced(state) => state,
        Stratum::Sampled if u < params.q0() => State::H,
        Stratum::Sampled => State::L,
    }
}

fn first_arrival(params: &ModelParams, state: State, (u_type, u_arrival): (f64, f64)) -> Option<f64> {
    (u_type < params.rho(state)).then(|| -u_arrival.ln() / params.lambda())
}

/// Draws a world with the state sampled from the prior, on replicate 0 of `seed`.
pub fn draw_world(params: &ModelParams, n: u64, seed: u64) -> WorldDraw {
    draw_world_with(params, n, SubstreamKey::new(seed, 0, Stratum::Sampled))
}

pub fn draw_world_with(params: &ModelParams, n: u64, key: SubstreamKey) -> WorldDraw {
    let mut stream = WorldStream::new(key);
    let state = resolve_state(params, key.stratum, stream.state_uniform());
    let mut good = Vec::with_capacity(n as usize);
    let mut arrivals = Vec::with_capacity(n as usize);
    for _ in 0..n {
        match first_arrival(params, state, stream.agent_uniforms()) {
            Some(t) => {
                good.push(true);
                arrivals.push(t);
            }
            None => {
                good.push(false);
                arrivals.push(f64::INFINITY);
            }
        }
    }
    WorldDraw {
        state,
        good,
        first_arrival: arrivals,
        key,
    }
}

/// Number of agents whose first lump sum arrived by `t`.
pub fn winners_at(world: &WorldDraw, t: f64) -> u64 {
    world.first_arrival.iter().filter(|&&a| a <= t).count() as u64
}

/// Sure-winner counts at several times, read straight off the substream.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WorldScan<const T: usize> {
    pub state: State,
    pub good: u64,
    pub winners: [u64; T],
}

/// Same numbers as [`draw_world_with`] + [`winners_at`], without materialising the agents.
pub fn scan_world<const T: usize>(params: &ModelParams, n: u64, key: SubstreamKey, times: [f64; T]) -> WorldScan<T> {
    let mut stream = WorldStream::new(key);
    let state = resolve_state(params, key.stratum, stream.state_uniform());
    let mut good = 0;
    let mut winners = [0u64; T];
    for _ in 0..n {
        if let Some(a) = first_arrival(params, state, stream.agent_uniforms()) {
            good += 1;
            for (w, &t) in winners.iter_mut().zip(times.iter()) {
                if a <= t {
                    *w += 1;
                }
            }
        }
    }
    WorldScan { state, good, winners }
}

/// Result of playing one world to absorption.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GameOutcome {
    pub state: State,
    /// Sure winners when the decisive vote was taken.
    pub winners_at_cutoff: u64,
    pub implemented_after: Implemented,
    pub aggregated_correctly: bool,
    pub per_capita_payoff: f64,
}

/// Average expected discounted payoff when `R` runs on `[0, cutoff)` and `after` is then fixed forever.
///
/// Good types earn `g` per unit time in expectation while `R` runs; bad types earn nothing.
pub fn per_capita_payoff(params: &ModelParams, n: u64, good: u64, cutoff: f64, after: Implemented) -> f64 {
    let (g, s, r) = (params.g(), params.s(), params.r());
    let decay = (-r * cutoff).exp();
    let before = good as f64 * g * -(-r * cutoff).exp_m1() / r;
    let later = match after {
        Implemented::RForever => good as f64 * g / r * decay,
        Implemented::SForever => n as f64 * s / r * decay,
    };
    (before + later) / n as f64
}

fn outcome_from_counts(params: &ModelParams, n: u64, state: State, good: u64, winners: u64, m: u64, cutoff: f64) -> GameOutcome {
    let implemented_after = if winners >= m {
        Implemented::RForever
    } else {
        Implemented::SForever
    };
    GameOutcome {
        state,
        winners_at_cutoff: winners,
        implemented_after,
        aggregated_correctly: matches!(
            (state, implemented_after),
            (State::H, Implemented::RForever) | (State::L, Implemented::SForever)
        ),
        per_capita_payoff: per_capita_payoff(params, n, good, cutoff, implemented_after),
    }
}

/// Irreversible game: `R` until `cutoff`, then `R` forever iff at least `M` sure winners.
pub fn run_irreversible(params: &ModelParams, rule: &QuorumRule, cutoff: f64, world: &WorldDraw) -> GameOutcome {
    assert_eq!(world.n(), rule.n(), "world and rule disagree on N");
    let winners = winners_at(world, cutoff);
    outcome_from_counts(params, world.n(), world.state, world.good_count(), winners, rule.m(), cutoff)
}

/// Planner's choice knowing state and types; ties go to `R`.
pub fn first_best_outcome(world: &WorldDraw, params: &ModelParams) -> Implemented {
    first_best_from_count(params, world.n(), world.good_count())
}

fn first_best_from_count(params: &ModelParams, n: u64, good: u64) -> Implemented {
    if good as f64 * params.g() >= n as f64 * params.s() {
        Implemented::RForever
    } else {
        Implemented::SForever
    }
}

/// The constructed reversible-game profile: vote `S` at `t1`, and if nobody has
/// won yet stay on `S`; otherwise return to `R` until the equilibrium cut-off.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReversibleProfile {
    pub t1: f64,
    pub t_hat: f64,
}

impl ReversibleProfile {
    pub fn new(params: &ModelParams, rule: &QuorumRule, t1: f64, tol: f64) -> Result<Self, SimError> {
        let t_hat = solve_cutoff(params, rule, tol)?.t_hat;
        Self::with_cutoff(t1, t_hat)
    }

    pub fn with_cutoff(t1: f64, t_hat: f64) -> Result<Self, SimError> {
        if t1 > 0.0 && t1 < t_hat {
            Ok(ReversibleProfile { t1, t_hat })
        } else {
            Err(SimError::InvalidT1 { t1, t_hat })
        }
    }

    /// `t1 = t_hat / 2`.
    pub fn midpoint(params: &ModelParams, rule: &QuorumRule, tol: f64) -> Result<Self, SimError> {
        let t_hat = solve_cutoff(params, rule, tol)?.t_hat;
        Self::with_cutoff(0.5 * t_hat, t_hat)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ReversibleBranch {
    /// No sure winner at `t1`: `S` from `t1` on.
    NoWinnerAtT1,
    /// At least one sure winner at `t1`: play resumes until the cut-off.
    ContinuedToCutoff,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReversibleOutcome {
    pub outcome: GameOutcome,
    pub branch: ReversibleBranch,
}

fn reversible_from_counts(
    params: &ModelParams,
    rule: &QuorumRule,
    profile: &ReversibleProfile,
    state: State,
    good: u64,
    at_t1: u64,
    at_t_hat: u64,
) -> ReversibleOutcome {
    let n = rule.n();
    if at_t1 == 0 {
        ReversibleOutcome {
            outcome: outcome_from_counts(params, n, state, good, 0, rule.m(), profile.t1),
            branch: ReversibleBranch::NoWinnerAtT1,
        }
    } else {
        ReversibleOutcome {
            outcome: outcome_from_counts(params, n, state, good, at_t_hat, rule.m(), profile.t_hat),
            branch: ReversibleBranch::ContinuedToCutoff,
        }
    }
}

pub fn run_reversible_constructed(
    params: &ModelParams,
    rule: &QuorumRule,
    profile: &ReversibleProfile,
    world: &WorldDraw,
) -> ReversibleOutcome {
    assert_eq!(world.n(), rule.n(), "world and rule disagree on N");
    reversible_from_counts(
        params,
        rule,
        profile,
        world.state,
        world.good_count(),
        winners_at(world, profile.t1),
        winners_at(world, profile.t_hat),
    )
}

fn check_replicates(replicates: u64) -> Result<(), SimError> {
    if replicates < MIN_REPLICATES {
        Err(SimError::TooFewReplicates(replicates))
    } else {
        Ok(())
    }
}

/// Counts replicates in a forced-state stratum for which `hit` holds.
///
/// The sum of integer indicators is the same for every schedule, so the
/// result does not depend on the worker count.
fn count_hits<const T: usize>(
    params: &ModelParams,
    n: u64,
    seed: u64,
    state: State,
    replicates: u64,
    times: [f64; T],
    hit: impl Fn(&WorldScan<T>) -> bool + Sync,
) -> u64 {
    (0..replicates)
        .into_par_iter()
        .map(|rep| {
            let scan = scan_world(params, n, SubstreamKey::new(seed, rep, Stratum::Forced(state)), times);
            hit(&scan) as u64
        })
        .sum()
}

/// Monte Carlo frequencies of the two aggregation events next to their exact values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AggregationEstimate {
    pub k: f64,
    pub n: u64,
    pub m: u64,
    pub cutoff_used: f64,
    pub replicates: u64,
    pub successes_h: u64,
    pub successes_l: u64,
    /// Frequency of `W >= M` in state `H`.
    pub p_agg_h: f64,
    /// Frequency of `W < M` in state `L`.
    pub p_agg_l: f64,
    pub ci_h: Interval,
    pub ci_l: Interval,
    pub oracle_h: f64,
    pub oracle_l: f64,
}

/// Exact `Pr(W >= M | H)` and `Pr(W < M | L)` at `cutoff`.
pub fn aggregation_oracle(params: &ModelParams, rule: &QuorumRule, cutoff: f64) -> (f64, f64) {
    let x = params.arrival_cdf(cutoff);
    (
        binomial_tail_ge(rule.n(), params.rho_h() * x, rule.m()),
        binomial_cdf_lt(rule.n(), params.rho_l() * x, rule.m()),
    )
}

/// Stratified estimate: `replicates` worlds forced to `H` and as many forced to `L`.
pub fn estimate_aggregation(
    params: &ModelParams,
    rule: &QuorumRule,
    cutoff: f64,
    replicates: u64,
    seed: u64,
) -> Result<AggregationEstimate, SimError> {
    check_replicates(replicates)?;
    if !(cutoff >= 0.0 && cutoff.is_finite()) {
        return Err(SimError::InvalidCutoff(cutoff));
    }
    let (n, m) = (rule.n(), rule.m());
    let successes_h = count_hits(params, n, seed, State::H, replicates, [cutoff], |s| s.winners[0] >= m);
    let successes_l = count_hits(params, n, seed, State::L, replicates, [cutoff], |s| s.winners[0] < m);
    let (oracle_h, oracle_l) = aggregation_oracle(params, rule, cutoff);
    let reps = replicates as f64;
    Ok(AggregationEstimate {
        k: rule.k(),
        n,
        m,
        cutoff_used: cutoff,
        replicates,
        successes_h,
        successes_l,
        p_agg_h: successes_h as f64 / reps,
        p_agg_l: successes_l as f64 / reps,
        ci_h: wilson_interval(successes_h, replicates, Z_95),
        ci_l: wilson_interval(successes_l, replicates, Z_95),
        oracle_h,
        oracle_l,
    })
}

/// One population size of a convergence study.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: u64,
    pub t_hat_n: f64,
    pub t_hat_limit: f64,
    pub gap: f64,
    pub estimate: AggregationEstimate,
}

/// Solves the finite-`N` cut-off for each population, measures its distance
/// to the limit, and estimates aggregation at that cut-off.
pub fn convergence_study(
    params: &ModelParams,
    k: f64,
    populations: &[u64],
    replicates: u64,
    seed: u64,
    tol: f64,
) -> Result<Vec<ConvergenceRow>, SimError> {
    if populations.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SimError::PopulationsNotIncreasing);
    }
    let t_hat_limit = crate::asymptotics::limit_cutoff(params, k)?;
    populations
        .iter()
        .map(|&n| {
            let rule = QuorumRule::new(k, n).map_err(|_| DomainError::ThresholdOutOfRange(k))?;
            let t_hat_n = solve_cutoff(params, &rule, tol)?.t_hat;
            Ok(ConvergenceRow {
                n,
                t_hat_n,
                t_hat_limit,
                gap: (t_hat_n - t_hat_limit).abs(),
                estimate: estimate_aggregation(params, &rule, t_hat_n, replicates, seed)?,
            })
        })
        .collect()
}

/// `Pr(S forever | state)` under the constructed reversible profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReversibleStateEstimate {
    pub state: State,
    pub replicates: u64,
    pub s_forever: u64,
    /// Replicates absorbed in `S` because nobody had won by `t1`.
    pub no_winner_at_t1: u64,
    pub estimate: f64,
    pub ci: Interval,
    pub oracle: f64,
    /// `Pr(no sure winner by t1)`, a lower bound for `oracle`.
    pub lower_bound: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReversibleStudy {
    pub k: f64,
    pub n: u64,
    pub m: u64,
    pub t1: f64,
    pub t_hat: f64,
    pub h: ReversibleStateEstimate,
    pub l: ReversibleStateEstimate,
}

/// Exact `Pr(S forever | state)` for the constructed reversible profile.
///
/// `S` wins either because nobody has won by `t1`, or because somebody has but
/// fewer than `M` have by `t_hat`. Given no winner at `t1`, each agent wins in
/// `(t1, t_hat]` independently with probability
/// `rho (e^{-lambda t1} - e^{-lambda t_hat}) / (1 - rho (1 - e^{-lambda t1}))`.
pub fn reversible_s_forever_oracle(params: &ModelParams, rule: &QuorumRule, profile: &ReversibleProfile, state: State) -> f64 {
    let (n, m) = (rule.n(), rule.m());
    let rho = params.rho(state);
    let lambda = params.lambda();
    let p0 = prob_no_winner(params, state, profile.t1, n);
    let short = binomial_cdf_lt(n, rho * params.arrival_cdf(profile.t_hat), m);
    let late = rho * ((-lambda * profile.t1).exp() - (-lambda * profile.t_hat).exp())
        / (1.0 - rho * params.arrival_cdf(profile.t1));
    let short_given_none = binomial_cdf_lt(n, late, m);
    p0 + short - p0 * short_given_none
}

pub fn estimate_reversible(
    params: &ModelParams,
    rule: &QuorumRule,
    profile: &ReversibleProfile,
    replicates: u64,
    seed: u64,
) -> Result<ReversibleStudy, SimError> {
    check_replicates(replicates)?;
    let per_state = |state: State| {
        let (s_forever, no_winner_at_t1) = (0..replicates)
            .into_par_iter()
            .map(|rep| {
                let key = SubstreamKey::new(seed, rep, Stratum::Forced(state));
                let scan = scan_world(params, rule.n(), key, [profile.t1, profile.t_hat]);
                let out = reversible_from_counts(params, rule, profile, scan.state, scan.good, scan.winners[0], scan.winners[1]);
                (
                    (out.outcome.implemented_after == Implemented::SForever) as u64,
                    (out.branch == ReversibleBranch::NoWinnerAtT1) as u64,
                )
            })
            .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
        ReversibleStateEstimate {
            state,
            replicates,
            s_forever,
            no_winner_at_t1,
            estimate: s_forever as f64 / replicates as f64,
            ci: wilson_interval(s_forever, replicates, Z_95),
            oracle: reversible_s_forever_oracle(params, rule, profile, state),
            lower_bound: prob_no_winner(params, state, profile.t1, rule.n()),
        }
    };
    Ok(ReversibleStudy {
        k: rule.k(),
        n: rule.n(),
        m: rule.m(),
        t1: profile.t1,
        t_hat: profile.t_hat,
        h: per_state(State::H),
        l: per_state(State::L),
    })
}

/// Welfare of the irreversible equilibrium with the state drawn from the prior.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WelfareEstimate {
    pub replicates: u64,
    pub cutoff_used: f64,
    pub draws_h: u64,
    pub mean_payoff: f64,
    /// Mean per-capita payoff of the informed planner, who fixes an action at time 0.
    pub mean_first_best_payoff: f64,
    /// Share of worlds where the equilibrium ends on the planner's action.
    pub first_best_agreement: f64,
    pub aggregated_correctly: f64,
}

pub fn estimate_welfare(
    params: &ModelParams,
    rule: &QuorumRule,
    cutoff: f64,
    replicates: u64,
    seed: u64,
) -> Result<WelfareEstimate, SimError> {
    check_replicates(replicates)?;
    if !(cutoff >= 0.0 && cutoff.is_finite()) {
        return Err(SimError::InvalidCutoff(cutoff));
    }
    let n = rule.n();
    // collected in replicate order so the floating-point sums are schedule independent
    let rows: Vec<(GameOutcome, f64, bool)> = (0..replicates)
        .into_par_iter()
        .map(|rep| {
            let scan = scan_world(params, n, SubstreamKey::new(seed, rep, Stratum::Sampled), [cutoff]);
            let out = outcome_from_counts(params, n, scan.state, scan.good, scan.winners[0], rule.m(), cutoff);
            let best = first_best_from_count(params, n, scan.good);
            let best_payoff = per_capita_payoff(params, n, scan.good, 0.0, best);
            (out, best_payoff, best == out.implemented_after)
        })
        .collect();
    let reps = replicates as f64;
    Ok(WelfareEstimate {
        replicates,
        cutoff_used: cutoff,
        draws_h: rows.iter().filter(|r| r.0.state == State::H).count() as u64,
        mean_payoff: rows.iter().map(|r| r.0.per_capita_payoff).sum::<f64>() / reps,
        mean_first_best_payoff: rows.iter().map(|r| r.1).sum::<f64>() / reps,
        first_best_agreement: rows.iter().filter(|r| r.2).count() as f64 / reps,
        aggregated_correctly: rows.iter().filter(|r| r.0.aggregated_correctly).count() as f64 / reps,
    })
}
