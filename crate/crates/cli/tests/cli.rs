//! End-to-end runs of the `medgraph` binary on the repository fixtures.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name);
    root.to_str().expect("utf-8 path").to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_medgraph")).args(args).env_remove("MEDGRAPH_SEED").output().expect("binary runs")
}

fn json_ok(args: &[&str]) -> Value {
    let out = run(args);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn json_err(args: &[&str], code: i32) -> Value {
    let out = run(args);
    assert_eq!(out.status.code(), Some(code), "stdout: {}", String::from_utf8_lossy(&out.stdout));
    serde_json::from_slice::<Value>(&out.stderr).expect("stderr is JSON")["error"].clone()
}

fn dir() -> (tempfile::TempDir, PathBuf) {
    let t = tempfile::tempdir().unwrap();
    let p = t.path().join("out");
    (t, p)
}

#[test]
fn check_verifies_catalog_mediation_graphs() {
    for f in ["basic_mediation.lig", "latent_confounded_mediation.lig"] {
        let v = json_ok(&["check", &fixture(f)]);
        assert_eq!(v["command"], "check");
        assert_eq!(v["result"]["all_verified"], true, "{f}");
        assert_eq!(v["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    }
    let v = json_ok(&["check", "--treatment-driven-covariate", &fixture("covariate_mediation.lig")]);
    assert_eq!(v["result"]["all_verified"], true);
}

#[test]
fn delta_separation_on_lagged_cycle() {
    let v = json_ok(&["sep", "--from", "S", "--target", "R", "--given", "Q", &fixture("lagged_cycle.lig")]);
    assert_eq!(v["result"]["separated"], true);
    let v = json_ok(&["sep", "--from", "S", "--target", "R", &fixture("lagged_cycle.lig")]);
    assert_eq!(v["result"]["result"], "connected");
    assert!(v["result"]["witness"].as_str().unwrap().starts_with('S'));
}

#[test]
fn d_separation_on_unrolling_uses_lag_labels() {
    let v = json_ok(&[
        "sep",
        "--flavor",
        "d",
        "--lags",
        "2",
        "--from",
        "S@0",
        "--target",
        "R@2",
        "--given",
        "Q@1,Q@0",
        &fixture("lagged_cycle.lig"),
    ]);
    assert_eq!(v["result"]["lags"], 2);
    assert!(v["result"]["separated"].is_boolean());
}

#[test]
fn unroll_is_deterministic_and_carries_provenance() {
    let a = run(&["unroll", "--lags", "3", &fixture("contemporaneous_cycle.lig")]);
    let b = run(&["unroll", "--lags", "3", &fixture("contemporaneous_cycle.lig")]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.starts_with("# medgraph "));
    assert!(text.contains("sha256"));
    let v = json_ok(&["unroll", "--lags", "1", "--format", "json", &fixture("lagged_cycle.lig")]);
    assert!(v["result"]["nodes"].as_array().unwrap().iter().any(|n| n == "S@1"));
}

#[test]
fn simulate_gformula_matches_interventional_truth() {
    let v = json_ok(&["simulate", "--scm", &fixture("basic_mediation_scm.json")]);
    assert_eq!(v["result"]["diagnostics"]["within_tol"], true);
    let values = v["result"]["values"].as_array().unwrap();
    assert!(values.iter().all(|x| (0.0..=1.0).contains(&x.as_f64().unwrap())));
    let v = json_ok(&["simulate", "--scm", &fixture("basic_mediation_scm.json"), "--query", "assumptions"]);
    assert_eq!(v["result"]["a1"], true);
}

#[test]
fn simulate_random_model_records_seed() {
    let a = json_ok(&["simulate", "--graph", &fixture("basic_mediation.lig"), "--lags", "2", "--seed", "4"]);
    let b = json_ok(&["simulate", "--graph", &fixture("basic_mediation.lig"), "--lags", "2", "--seed", "4"]);
    assert_eq!(a["seed"], 4);
    assert_eq!(a["result"], b["result"]);
}

#[test]
fn simulate_csv_picks_grid_time() {
    let out = run(&["simulate", "--scm", &fixture("basic_mediation_scm.json"), "--format", "csv", "--t", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.starts_with("t,value\n2.0000000000000000e0,"));
    json_err(&["simulate", "--scm", &fixture("basic_mediation_scm.json"), "--t", "1.5"], 2);
}

#[test]
fn estimate_writes_curves_and_fit() {
    let (_t, out) = dir();
    let o = out.to_str().unwrap();
    let args = [
        "estimate",
        "--data",
        &fixture("two_arm_repeated_mediator.csv"),
        "--mediator-col",
        "marker",
        "--boot",
        "20",
        "--seed",
        "3",
        "--out",
        o,
    ];
    let v = json_ok(&args);
    assert_eq!(v["seed"], 3);
    assert_eq!(v["result"]["artifacts"].as_array().unwrap().len(), 3);
    let effects = std::fs::read_to_string(out.join("effects.csv")).unwrap();
    let header = effects.lines().next().unwrap();
    assert_eq!(header, "t,sde,sde_lower,sde_upper,sie,sie_lower,sie_upper,total,total_lower,total_upper");
    for line in effects.lines().skip(1) {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert!((cells[1] * cells[4] - cells[7]).abs() <= 1e-12 * cells[7].abs().max(1.0), "{line}");
    }
    let fit: Value = serde_json::from_str(&std::fs::read_to_string(out.join("fit.json")).unwrap()).unwrap();
    assert_eq!(fit["result"]["bootstrap"]["requested"], 20);
    // Same seed, same bands.
    let again = json_ok(&[&args[..], &["--force"]].concat());
    assert_eq!(again["result"]["artifacts"], v["result"]["artifacts"]);
}

#[test]
fn estimate_refuses_to_overwrite() {
    let (_t, out) = dir();
    let o = out.to_str().unwrap();
    let args =
        ["estimate", "--data", &fixture("two_arm_repeated_mediator.csv"), "--mediator-col", "marker", "--boot", "0", "--out", o];
    json_ok(&args);
    let e = json_err(&args, 2);
    assert_eq!(e["code"], "exists");
}

#[test]
fn estimate_reports_missing_column_as_domain_error() {
    let (_t, out) = dir();
    let e = json_err(
        &[
            "estimate",
            "--data",
            &fixture("two_arm_repeated_mediator.csv"),
            "--mediator-col",
            "nope",
            "--boot",
            "0",
            "--out",
            out.to_str().unwrap(),
        ],
        1,
    );
    assert_eq!(e["code"], "data");
}

#[test]
fn hawkes_exact_identification_recovers_weights() {
    let (_t, out) = dir();
    let v = json_ok(&["hawkes", "--model", &fixture("mediation_hawkes.json"), "--identify", "--out", out.to_str().unwrap()]);
    let id = &v["result"]["identified"];
    assert!((id["direct"].as_f64().unwrap() - 0.2).abs() < 1e-8);
    assert!((id["mediated"].as_f64().unwrap() - 0.2).abs() < 1e-8);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out.join("identify.json")).unwrap()).unwrap();
    assert_eq!(report["result"]["source"], "exact");
}

#[test]
fn hawkes_simulation_writes_events() {
    let (_t, out) = dir();
    let v = json_ok(&[
        "hawkes",
        "--model",
        &fixture("mediation_hawkes.json"),
        "--simulate",
        "500",
        "--seed",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(v["seed"], 2);
    let events = std::fs::read_to_string(out.join("events.csv")).unwrap();
    assert_eq!(events.lines().next(), Some("time,process"));
    let times: Vec<f64> = events.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert!(times.windows(2).all(|w| w[0] <= w[1]));
    assert!(times.iter().all(|&t| (0.0..=500.0).contains(&t)));
}

#[test]
fn selftest_is_reproducible() {
    let a = run(&["selftest", "--seed", "7"]);
    let b = run(&["selftest", "--seed", "7"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stdout));
    assert_eq!(a.stdout, b.stdout);
    assert!(String::from_utf8(a.stdout).unwrap().contains("seed=7"));
}

#[test]
fn usage_errors_exit_two_with_json() {
    let e = json_err(&["sep", "--flavour", "d", &fixture("lagged_cycle.lig")], 2);
    assert_eq!(e["code"], "usage");
    let e = json_err(&["sep", "--from", "S", "--target", "R", "--lags", "2", &fixture("lagged_cycle.lig")], 2);
    assert_eq!(e["location"], "--lags");
    let e = json_err(&["check", "no_such_file.lig"], 2);
    assert_eq!(e["code"], "missing_file");
    let e = json_err(&["check", "--format", "csv", &fixture("basic_mediation.lig")], 2);
    assert_eq!(e["code"], "format");
}

#[test]
fn domain_errors_exit_one() {
    let e = json_err(&["sep", "--from", "S", "--target", "Nope", &fixture("lagged_cycle.lig")], 1);
    assert_eq!(e["code"], "query");
    let e = json_err(&["check", &fixture("lagged_cycle.lig")], 1);
    assert_eq!(e["code"], "roles");
    let t = tempfile::tempdir().unwrap();
    let bad = t.path().join("bad.lig");
    std::fs::write(&bad, "node P\nP => Q\n").unwrap();
    let e = json_err(&["check", bad.to_str().unwrap()], 1);
    assert_eq!(e["code"], "parse");
    assert!(e["location"].as_str().unwrap().ends_with(":2"));
}

#[test]
fn output_flag_writes_file_and_guards_it() {
    let t = tempfile::tempdir().unwrap();
    let path = t.path().join("r.json");
    let p = path.to_str().unwrap();
    let out = run(&["check", "-o", p, &fixture("basic_mediation.lig")]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["result"]["all_verified"], true);
    assert_eq!(json_err(&["check", "-o", p, &fixture("basic_mediation.lig")], 2)["code"], "exists");
    assert_eq!(run(&["check", "-o", p, "--force", &fixture("basic_mediation.lig")]).status.code(), Some(0));
}
