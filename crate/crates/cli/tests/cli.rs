use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use collexp::equilibrium::indifference_rhs;
use collexp::model::ModelParams;
use collexp::QuorumRule;
use collexp_cli::output::sha256_hex;
use collexp_cli::svg;
use serde_json::Value;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_collexp")).args(args).output().expect("binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut full = args.to_vec();
    let out = dir.to_str().unwrap();
    full.extend(["--out", out]);
    cli(&full)
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn header_of(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().find(|l| !l.starts_with('#')).unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn golden_csv_headers() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", "replicates = 1000\nn = 40\nn_list = [20, 40]\nt1 = 0.2\n");
    let cfg = cfg.to_str().unwrap();
    let expected = [
        ("validate", "validate.csv", "check,statement,lhs,rhs,margin,holds"),
        ("solve", "solve.csv", "k,n,m,t_hat,residual,bracket_lo,bracket_hi,iterations,pivotal_belief"),
        ("sweep", "fig1.csv", "k,t_hat_k,branch"),
        ("sweep", "fig2.csv", "k,frac_H,frac_L,diagonal"),
        (
            "converge",
            "converge.csv",
            "n,m,t_hat_n,t_hat_limit,gap,p_agg_h,ci_h_lo,ci_h_hi,oracle_h,p_agg_l,ci_l_lo,ci_l_hi,oracle_l",
        ),
        ("simulate", "aggregation.csv", "state,event,k,n,m,cutoff,replicates,successes,estimate,ci_lo,ci_hi,oracle"),
        (
            "simulate",
            "welfare.csv",
            "k,n,m,cutoff,replicates,draws_h,mean_payoff,mean_first_best_payoff,first_best_agreement,aggregated_correctly",
        ),
        (
            "reversible",
            "reversible.csv",
            "state,k,n,m,t1,t_hat,replicates,s_forever,no_winner_at_t1,estimate,ci_lo,ci_hi,oracle,lower_bound",
        ),
    ];
    for (cmd, file, header) in expected {
        let dir = tmp.path().join(cmd);
        let o = run_in(&dir, &[cmd, "--config", cfg]);
        assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(header_of(&dir.join(file)), header, "{cmd} {file}");
    }
}

#[test]
fn sweep_metadata_comment() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(run_in(tmp.path(), &["sweep"]).status.success());
    for f in ["fig1.csv", "fig2.csv"] {
        let first = std::fs::read_to_string(tmp.path().join(f)).unwrap().lines().next().unwrap().to_string();
        assert_eq!(first, "# k_bar=0.352218924458, k_star=0.6, t_bar=1.38629436112");
    }
    let rows = std::fs::read_to_string(tmp.path().join("fig1.csv")).unwrap().lines().count();
    assert_eq!(rows, 2 + 400);
}

#[test]
fn validate_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let ok = run_in(&tmp.path().join("a"), &["validate"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).contains("eq2"));
    assert!(stdout(&ok).contains("margin 0.12"));

    let bad = write_config(tmp.path(), "bad.toml", "[params]\nq0 = 0.4\n");
    let o = run_in(&tmp.path().join("b"), &["validate", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("Assumption2Violated"));

    let malformed = write_config(tmp.path(), "mal.toml", "k = = 3\n");
    assert_eq!(cli(&["validate", "--config", malformed.to_str().unwrap()]).status.code(), Some(1));
    let unknown = write_config(tmp.path(), "unk.toml", "kk = 0.3\n");
    assert_eq!(cli(&["validate", "--config", unknown.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(cli(&["validate", "--config", "/nonexistent/c.toml"]).status.code(), Some(1));
}

#[test]
fn other_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(cli(&["explode"]).status.code(), Some(1));
    assert_eq!(cli(&["solve", "--k", "abc"]).status.code(), Some(1));
    assert_eq!(cli(&["--help"]).status.code(), Some(0));
    assert_eq!(cli(&["solve", "--k", "1.5"]).status.code(), Some(1));
    assert_eq!(cli(&["reversible", "--t1", "0"]).status.code(), Some(1));
    assert_eq!(cli(&["simulate", "--replicates", "10"]).status.code(), Some(1));

    let bad = write_config(tmp.path(), "bad.toml", "[params]\nrho_l = 0.9\n");
    assert_eq!(run_in(&tmp.path().join("s"), &["solve", "--config", bad.to_str().unwrap()]).status.code(), Some(2));

    let o = run_in(&tmp.path().join("r"), &["reversible", "--k", "0.5", "--n", "20", "--t1", "50", "--replicates", "1000"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("t1"));
}

fn csv_row(path: &Path) -> Vec<(String, String)> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path).unwrap();
    let header = r.headers().unwrap().clone();
    let row = r.records().next().unwrap().unwrap();
    header.iter().map(String::from).zip(row.iter().map(String::from)).collect()
}

fn field(row: &[(String, String)], name: &str) -> f64 {
    row.iter().find(|(h, _)| h == name).unwrap().1.parse().unwrap()
}

#[test]
fn solve_single_agent_matches_grid_scan() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(run_in(tmp.path(), &["solve", "--k", "1", "--n", "1"]).status.success());
    let t_hat = field(&csv_row(&tmp.path().join("solve.csv")), "t_hat");

    let p = ModelParams::canonical();
    let rule = QuorumRule::new(1.0, 1).unwrap();
    let h = |t: f64| indifference_rhs(&p, &rule, t).unwrap() - p.s();
    let step = 1e-4;
    let mut t = step;
    while h(t + step) > 0.0 {
        t += step;
    }
    let scan = t + step * h(t) / (h(t) - h(t + step));
    assert!((t_hat - scan).abs() < 1e-6, "{t_hat} vs {scan}");
}

#[test]
fn solve_large_population_is_near_the_limit() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(run_in(tmp.path(), &["solve", "--k", "0.5", "--n", "10000"]).status.success());
    let t_hat = field(&csv_row(&tmp.path().join("solve.csv")), "t_hat");
    assert!(((t_hat - 4f64.ln()) / 4f64.ln()).abs() < 0.02);
}

#[test]
fn flags_override_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", "k = 0.3\nn = 50\n");
    let dir = tmp.path().join("o");
    assert!(run_in(&dir, &["solve", "--config", cfg.to_str().unwrap(), "--n", "60"]).status.success());
    let row = csv_row(&dir.join("solve.csv"));
    assert_eq!(field(&row, "k"), 0.3);
    assert_eq!(field(&row, "n"), 60.0);
}

#[test]
fn manifest_lists_outputs_and_hash_recomputes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", "seed = 12\nreplicates = 1000\nn = 30\n");
    let dir = tmp.path().join("o");
    assert!(run_in(&dir, &["simulate", "--config", cfg.to_str().unwrap(), "--workers", "2"]).status.success());
    let manifest: Value = serde_json::from_slice(&std::fs::read(dir.join("manifest.json")).unwrap()).unwrap();

    let hashed = serde_json::json!({ "command": manifest["command"], "config": manifest["config"] });
    assert_eq!(manifest["input_sha256"].as_str().unwrap(), sha256_hex(&serde_json::to_vec(&hashed).unwrap()));
    assert_eq!(manifest["config"]["seed"], 12);
    assert_eq!(manifest["config"]["replicates"], 1000);
    assert!(manifest["defaulted"].as_array().unwrap().iter().any(|d| d == "params.q0"));
    assert!(manifest["wall_clock_seconds"].as_f64().unwrap() >= 0.0);

    let mut listed: Vec<&str> = manifest["outputs"].as_array().unwrap().iter().map(|o| o["file"].as_str().unwrap()).collect();
    for o in manifest["outputs"].as_array().unwrap() {
        let bytes = std::fs::read(dir.join(o["file"].as_str().unwrap())).unwrap();
        assert_eq!(o["sha256"].as_str().unwrap(), sha256_hex(&bytes));
        assert_eq!(o["bytes"].as_u64().unwrap(), bytes.len() as u64);
    }
    let mut on_disk: Vec<String> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|f| f != "manifest.json")
        .collect();
    listed.sort();
    on_disk.sort();
    assert_eq!(listed, on_disk);
}

#[test]
fn input_hash_ignores_output_dir_and_workers() {
    let tmp = tempfile::tempdir().unwrap();
    let read = |d: &Path| -> Value { serde_json::from_slice(&std::fs::read(d.join("manifest.json")).unwrap()).unwrap() };
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    assert!(run_in(&a, &["solve", "--workers", "1"]).status.success());
    assert!(run_in(&b, &["solve", "--workers", "2"]).status.success());
    assert!(run_in(&c, &["solve", "--seed", "3"]).status.success());
    assert_eq!(read(&a)["input_sha256"], read(&b)["input_sha256"]);
    assert_ne!(read(&a)["input_sha256"], read(&c)["input_sha256"]);
}

#[test]
fn svg_is_rendered_from_the_csv() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(run_in(tmp.path(), &["sweep", "--svg"]).status.success());
    let csv_text = std::fs::read_to_string(tmp.path().join("fig1.csv")).unwrap();
    let chart = svg::Chart {
        title: "Limit cut-off",
        x_column: "k",
        y_label: "t_hat_k",
        series: vec![svg::Series { column: "t_hat_k", color: "black", dashed: false }],
        marker: "k_bar",
    };
    let expected = svg::render(&csv_text, &chart).unwrap();
    assert_eq!(std::fs::read_to_string(tmp.path().join("fig1.svg")).unwrap(), expected);
    let fig2 = std::fs::read_to_string(tmp.path().join("fig2.svg")).unwrap();
    assert!(fig2.starts_with("<svg xmlns=\"http://www.w3.org/2000/svg\""));
    assert_eq!(fig2.matches("<polyline").count(), 3);
}

#[test]
fn reversible_summary_reports_positive_probability() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_in(tmp.path(), &["reversible", "--k", "0.5", "--n", "20", "--t1", "0.1", "--replicates", "20000"]);
    assert!(o.status.success());
    let summary = std::fs::read_to_string(tmp.path().join("reversible_summary.txt")).unwrap();
    assert!(summary.contains("excludes 0"), "{summary}");
}

#[test]
fn default_t1_is_half_the_cutoff() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(run_in(tmp.path(), &["reversible", "--k", "0.5", "--n", "20", "--replicates", "1000"]).status.success());
    let row = csv_row(&tmp.path().join("reversible.csv"));
    assert!((field(&row, "t1") - 0.5 * field(&row, "t_hat")).abs() < 1e-11);
}
