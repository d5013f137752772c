//! The six subcommands. Each turns a resolved config into named output payloads
//! and a short human-readable summary; nothing here touches the filesystem.

use std::fmt::Write as _;

use collexp::asymptotics::{aggregation_threshold, k_bar, limit_cutoff, myopic_cutoff, quorum_limit, QuorumLimit};
use collexp::model::{assumption_report, ModelParams, State};
use collexp::simulator::{convergence_study, estimate_aggregation, estimate_reversible, estimate_welfare, ReversibleProfile};
use collexp::{solve_cutoff, QuorumRule};
use rayon::prelude::*;

use crate::config::{CutoffSource, RunConfig};
use crate::numfmt::num;
use crate::output::Table;
use crate::svg::{self, Chart, Series};
use crate::{Command, HarnessError};

pub const FIG1_HEADER: [&str; 3] = ["k", "t_hat_k", "branch"];
pub const FIG2_HEADER: [&str; 4] = ["k", "frac_H", "frac_L", "diagonal"];
pub const VALIDATE_HEADER: [&str; 6] = ["check", "statement", "lhs", "rhs", "margin", "holds"];
pub const SOLVE_HEADER: [&str; 9] = [
    "k", "n", "m", "t_hat", "residual", "bracket_lo", "bracket_hi", "iterations", "pivotal_belief",
];
pub const CONVERGE_HEADER: [&str; 13] = [
    "n", "m", "t_hat_n", "t_hat_limit", "gap", "p_agg_h", "ci_h_lo", "ci_h_hi", "oracle_h", "p_agg_l", "ci_l_lo",
    "ci_l_hi", "oracle_l",
];
pub const AGGREGATION_HEADER: [&str; 12] = [
    "state", "event", "k", "n", "m", "cutoff", "replicates", "successes", "estimate", "ci_lo", "ci_hi", "oracle",
];
pub const WELFARE_HEADER: [&str; 10] = [
    "k",
    "n",
    "m",
    "cutoff",
    "replicates",
    "draws_h",
    "mean_payoff",
    "mean_first_best_payoff",
    "first_best_agreement",
    "aggregated_correctly",
];
pub const REVERSIBLE_HEADER: [&str; 14] = [
    "state",
    "k",
    "n",
    "m",
    "t1",
    "t_hat",
    "replicates",
    "s_forever",
    "no_winner_at_t1",
    "estimate",
    "ci_lo",
    "ci_hi",
    "oracle",
    "lower_bound",
];

pub struct CommandResult {
    /// `(file name, payload)` in write order.
    pub files: Vec<(String, Vec<u8>)>,
    pub summary: String,
    /// False only for `validate` on a parameter set that fails some assumption.
    pub assumptions_hold: bool,
}

pub fn execute(command: Command, config: &RunConfig) -> Result<CommandResult, HarnessError> {
    if command == Command::Validate {
        return validate(config);
    }
    let params = config.params.validate()?;
    match command {
        Command::Validate => unreachable!(),
        Command::Solve => solve(&params, config),
        Command::Sweep => sweep(&params, config),
        Command::Converge => converge(&params, config),
        Command::Simulate => simulate(&params, config),
        Command::Reversible => reversible(&params, config),
    }
}

fn done(files: Vec<(String, Vec<u8>)>, summary: String) -> Result<CommandResult, HarnessError> {
    Ok(CommandResult {
        files,
        summary,
        assumptions_hold: true,
    })
}

fn rule(config: &RunConfig, n: u64) -> Result<QuorumRule, HarnessError> {
    QuorumRule::new(config.k, n).map_err(|e| HarnessError::Config(e.to_string()))
}

fn validate(config: &RunConfig) -> Result<CommandResult, HarnessError> {
    let checks = assumption_report(&config.params);
    let mut table = Table::new(&VALIDATE_HEADER);
    let mut summary = String::new();
    for c in &checks {
        table.push(vec![
            c.name.to_string(),
            c.statement.to_string(),
            num(c.lhs),
            num(c.rhs),
            num(c.margin),
            c.holds.to_string(),
        ]);
        let verdict = if c.holds { "pass" } else { "FAIL" };
        let _ = writeln!(summary, "{verdict:4} {:16} {:36} margin {}", c.name, c.statement, num(c.margin));
    }
    let outcome = config.params.validate();
    if let Err(e) = &outcome {
        for v in &e.violations {
            let _ = writeln!(summary, "violation {}: {v}", v.kind());
        }
    }
    Ok(CommandResult {
        files: vec![("validate.csv".into(), table.to_bytes())],
        summary,
        assumptions_hold: outcome.is_ok(),
    })
}

fn solve(params: &ModelParams, config: &RunConfig) -> Result<CommandResult, HarnessError> {
    let rule = rule(config, config.n)?;
    let sol = solve_cutoff(params, &rule, config.tol)?;
    let mut table = Table::new(&SOLVE_HEADER);
    table.push(vec![
        num(rule.k()),
        rule.n().to_string(),
        rule.m().to_string(),
        num(sol.t_hat),
        num(sol.residual),
        num(sol.bracket_lo),
        num(sol.bracket_hi),
        sol.iterations.to_string(),
        num(sol.pivotal_belief),
    ]);
    let limit = limit_cutoff(params, rule.k())?;
    let summary = format!(
        "k = {}, N = {}, M = {}\nt_hat = {}\nresidual = {}\npivotal belief = {}\nlimit cut-off = {}\n",
        num(rule.k()),
        rule.n(),
        rule.m(),
        num(sol.t_hat),
        num(sol.residual),
        num(sol.pivotal_belief),
        num(limit)
    );
    done(vec![("solve.csv".into(), table.to_bytes())], summary)
}

/// Limit quantities on the configured k-grid, in grid order.
pub fn sweep_rows(params: &ModelParams, ks: &[f64]) -> Result<Vec<QuorumLimit>, HarnessError> {
    Ok(ks.par_iter().map(|&k| quorum_limit(params, k)).collect::<Result<Vec<_>, _>>()?)
}

fn sweep(params: &ModelParams, config: &RunConfig) -> Result<CommandResult, HarnessError> {
    let rows = sweep_rows(params, &config.grid.values())?;
    let meta = format!(
        "k_bar={}, k_star={}, t_bar={}",
        num(k_bar(params)),
        num(aggregation_threshold(params)),
        num(myopic_cutoff(params))
    );
    let mut fig1 = Table::new(&FIG1_HEADER);
    let mut fig2 = Table::new(&FIG2_HEADER);
    fig1.comments.push(meta.clone());
    fig2.comments.push(meta.clone());
    for q in &rows {
        fig1.push(vec![num(q.k), num(q.t_hat_k), q.branch.as_str().to_string()]);
        fig2.push(vec![num(q.k), num(q.frac_h), num(q.frac_l), num(q.k)]);
    }
    let (fig1, fig2) = (fig1.to_bytes(), fig2.to_bytes());
    let mut files = Vec::new();
    if config.svg {
        let text = |b: &[u8]| String::from_utf8(b.to_vec()).expect("csv is utf-8");
        let chart1 = Chart {
            title: "Limit cut-off",
            x_column: "k",
            y_label: "t_hat_k",
            series: vec![Series { column: "t_hat_k", color: "black", dashed: false }],
            marker: "k_bar",
        };
        let chart2 = Chart {
            title: "Fraction of sure winners",
            x_column: "k",
            y_label: "fraction",
            series: vec![
                Series { column: "frac_H", color: "red", dashed: false },
                Series { column: "frac_L", color: "green", dashed: false },
                Series { column: "diagonal", color: "gray", dashed: true },
            ],
            marker: "k_star",
        };
        files.push(("fig1.svg".to_string(), svg::render(&text(&fig1), &chart1).map_err(HarnessError::Render)?.into_bytes()));
        files.push(("fig2.svg".to_string(), svg::render(&text(&fig2), &chart2).map_err(HarnessError::Render)?.into_bytes()));
    }
    files.insert(0, ("fig1.csv".into(), fig1));
    files.insert(1, ("fig2.csv".into(), fig2));
    let summary = format!("{} grid points\n{meta}\n", rows.len());
    done(files, summary)
}

fn converge(params: &ModelParams, config: &RunConfig) -> Result<CommandResult, HarnessError> {
    let rows = convergence_study(params, config.k, &config.n_list, config.replicates, config.seed, config.tol)?;
    let mut table = Table::new(&CONVERGE_HEADER);
    let mut summary = format!("k = {}, limit cut-off = {}\n", num(config.k), num(rows[0].t_hat_limit));
    for r in &rows {
        let e = &r.estimate;
        table.push(vec![
            r.n.to_string(),
            e.m.to_string(),
            num(r.t_hat_n),
            num(r.t_hat_limit),
            num(r.gap),
            num(e.p_agg_h),
            num(e.ci_h.lo),
            num(e.ci_h.hi),
            num(e.oracle_h),
            num(e.p_agg_l),
            num(e.ci_l.lo),
            num(e.ci_l.hi),
            num(e.oracle_l),
        ]);
        let _ = writeln!(
            summary,
            "N = {:>7}  t_hat_N = {}  gap = {}  p_agg_H = {}  p_agg_L = {}",
            r.n,
            num(r.t_hat_n),
            num(r.gap),
            num(e.p_agg_h),
            num(e.p_agg_l)
        );
    }
    done(vec![("converge.csv".into(), table.to_bytes())], summary)
}

fn simulate(params: &ModelParams, config: &RunConfig) -> Result<CommandResult, HarnessError> {
    let rule = rule(config, config.n)?;
    let cutoff = match config.cutoff {
        CutoffSource::Finite => solve_cutoff(params, &rule, config.tol)?.t_hat,
        CutoffSource::Limit => limit_cutoff(params, rule.k())?,
    };
    let agg = estimate_aggregation(params, &rule, cutoff, config.replicates, config.seed)?;
    let welfare = estimate_welfare(params, &rule, cutoff, config.replicates, config.seed)?;

    let mut table = Table::new(&AGGREGATION_HEADER);
    for (state, event, hits, est, ci, oracle) in [
        (State::H, "R_forever", agg.successes_h, agg.p_agg_h, agg.ci_h, agg.oracle_h),
        (State::L, "S_forever", agg.successes_l, agg.p_agg_l, agg.ci_l, agg.oracle_l),
    ] {
        table.push(vec![
            state.as_str().to_string(),
            event.to_string(),
            num(agg.k),
            agg.n.to_string(),
            agg.m.to_string(),
            num(cutoff),
            agg.replicates.to_string(),
            hits.to_string(),
            num(est),
            num(ci.lo),
            num(ci.hi),
            num(oracle),
        ]);
    }
    let mut wtable = Table::new(&WELFARE_HEADER);
    wtable.push(vec![
        num(rule.k()),
        rule.n().to_string(),
        rule.m().to_string(),
        num(cutoff),
        welfare.replicates.to_string(),
        welfare.draws_h.to_string(),
        num(welfare.mean_payoff),
        num(welfare.mean_first_best_payoff),
        num(welfare.first_best_agreement),
        num(welfare.aggregated_correctly),
    ]);
    let summary = format!(
        "cut-off = {}\nPr(R forever | H) = {} [{}, {}], exact {}\nPr(S forever | L) = {} [{}, {}], exact {}\nmean per-capita payoff = {} (informed planner {})\n",
        num(cutoff),
        num(agg.p_agg_h),
        num(agg.ci_h.lo),
        num(agg.ci_h.hi),
        num(agg.oracle_h),
        num(agg.p_agg_l),
        num(agg.ci_l.lo),
        num(agg.ci_l.hi),
        num(agg.oracle_l),
        num(welfare.mean_payoff),
        num(welfare.mean_first_best_payoff)
    );
    done(
        vec![("aggregation.csv".into(), table.to_bytes()), ("welfare.csv".into(), wtable.to_bytes())],
        summary,
    )
}

fn reversible(params: &ModelParams, config: &RunConfig) -> Result<CommandResult, HarnessError> {
    let rule = rule(config, config.n)?;
    let profile = match config.t1 {
        Some(t1) => ReversibleProfile::new(params, &rule, t1, config.tol)?,
        None => ReversibleProfile::midpoint(params, &rule, config.tol)?,
    };
    let study = estimate_reversible(params, &rule, &profile, config.replicates, config.seed)?;
    let mut table = Table::new(&REVERSIBLE_HEADER);
    for e in [&study.h, &study.l] {
        table.push(vec![
            e.state.as_str().to_string(),
            num(study.k),
            study.n.to_string(),
            study.m.to_string(),
            num(study.t1),
            num(study.t_hat),
            e.replicates.to_string(),
            e.s_forever.to_string(),
            e.no_winner_at_t1.to_string(),
            num(e.estimate),
            num(e.ci.lo),
            num(e.ci.hi),
            num(e.oracle),
            num(e.lower_bound),
        ]);
    }
    let h = &study.h;
    let verdict = if h.ci.lo > 0.0 {
        "the 95% interval for Pr(S forever | H) excludes 0: S is implemented in state H with positive probability"
    } else {
        "the 95% interval for Pr(S forever | H) does not exclude 0"
    };
    let summary = format!(
        "k = {}, N = {}, M = {}, t1 = {}, t_hat = {}\nPr(S forever | H) = {} [{}, {}], exact {}, lower bound {}\nPr(S forever | L) = {} [{}, {}], exact {}\n{verdict}\n",
        num(study.k),
        study.n,
        study.m,
        num(study.t1),
        num(study.t_hat),
        num(h.estimate),
        num(h.ci.lo),
        num(h.ci.hi),
        num(h.oracle),
        num(h.lower_bound),
        num(study.l.estimate),
        num(study.l.ci.lo),
        num(study.l.ci.hi),
        num(study.l.oracle)
    );
    done(
        vec![
            ("reversible.csv".into(), table.to_bytes()),
            ("reversible_summary.txt".into(), summary.clone().into_bytes()),
        ],
        summary,
    )
}
