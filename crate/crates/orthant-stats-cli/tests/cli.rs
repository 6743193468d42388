use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name).display().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orthant-stats"))
        .args(args)
        .env_remove("ORTHANT_STATS_THREADS")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("{v} is not a number"))
}

#[test]
fn validate_accepts_q5() {
    let out = run(&["validate", "--space", &data("q5.json")]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["valid"], true);
    assert_eq!(v["num_strata"], 11);
    assert_eq!(v["max_dim"], 2);
}

#[test]
fn validate_reports_flag_violation() {
    let out = run(&["validate", "--space", &data("triangle.json")]);
    assert_eq!(code(&out), 2);
    let v = json(&out);
    assert_eq!(v["valid"], false);
    assert_eq!(v["error"]["kind"], "flag_violation");
    assert_eq!(v["error"]["orthant"], serde_json::json!([0, 1, 2]));
}

#[test]
fn geodesic_through_cone_point() {
    let out = run(&["geodesic", "--space", &data("q5.json"), "--from", &data("p1.json"), "--to", &data("p2.json"), "--t", "0.5", "--oracle"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert!((num(&v["length"]) - 2.0).abs() < 1e-12);
    assert!((num(&v["oracle_length"]) - 2.0).abs() < 1e-6);
    assert_eq!(v["support"]["k"], 1);
    assert_eq!(v["point"]["coords"], serde_json::json!({}));
}

#[test]
fn geodesic_within_one_orthant() {
    let out = run(&["geodesic", "--space", &data("q5.json"), "--from", &data("base.csv"), "--to", &data("origin.json")]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert!((num(&v["length"]) - 2f64.sqrt()).abs() < 1e-12);
    assert_eq!(v["support"]["k"], 0);
}

#[test]
fn logmap_across_two_orthants() {
    let out = run(&["logmap", "--space", &data("q5.json"), "--base", &data("base.csv"), "--point", &data("far.json"), "--derivative"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let phi: Vec<f64> = v["phi"].as_array().unwrap().iter().map(num).collect();
    assert_eq!(phi, [-2.0, -1.0, 0.0, 0.0, 0.0]);
    let log: Vec<f64> = v["log"].as_array().unwrap().iter().map(num).collect();
    assert_eq!(log, [-3.0, -2.0, 0.0, 0.0, 0.0]);
    assert_eq!(v["in_d"], false);
    assert_eq!(v["matrix"].as_array().unwrap().len(), 5);
}

#[test]
fn logmap_directional_limit_on_a_page() {
    let out = run(&[
        "logmap",
        "--space",
        &data("book.json"),
        "--base",
        &data("spine_point.json"),
        "--point",
        &data("page.json"),
        "--direction",
        &data("spine_direction.json"),
    ]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["direction"]["tau"], serde_json::json!([0, 1]));
    assert!(v["psi"].is_array());
    assert!(v["psi_support"]["k"].is_u64());
}

#[test]
fn verify_mean_at_cone_point() {
    let out = run(&["verify-mean", "--space", &data("q5.json"), "--measure", &data("example4.json"), "--point", &data("origin.json")]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["pass"], true);
    assert_eq!(v["certificate"]["stratum"], serde_json::json!([]));
}

#[test]
fn verify_mean_rejects_an_atom() {
    let out = run(&["verify-mean", "--space", &data("q5.json"), "--measure", &data("example4.json"), "--point", &data("p1.json")]);
    assert_eq!(code(&out), 2);
    assert_eq!(json(&out)["pass"], false);
}

#[test]
fn frechet_mean_of_flat_csv_is_euclidean() {
    let out = run(&["frechet-mean", "--space", &data("q5.json"), "--measure", &data("flat.csv")]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert!((num(&v["point"]["coords"]["0"]) - 2.95).abs() < 1e-10);
    assert!((num(&v["point"]["coords"]["1"]) - 2.925).abs() < 1e-10);
}

#[test]
fn frechet_mean_sticks_to_spine() {
    let out = run(&["frechet-mean", "--space", &data("book.json"), "--measure", &data("book.csv"), "--theta", "0,1"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["stratum"], serde_json::json!([0]));
    assert!((num(&v["point"]["coords"]["0"]) - 0.875).abs() < 1e-12);
    assert_eq!(v["theta"]["summary"]["kind"], "full");
}

#[test]
fn frechet_mean_verify_only() {
    let out = run(&[
        "frechet-mean",
        "--space",
        &data("q5.json"),
        "--measure",
        &data("example4.json"),
        "--verify-only",
        &data("origin.json"),
        "--theta",
        "0,4",
    ]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["mode"], "verify");
    assert!((num(&v["value"]) - 0.5).abs() < 1e-12);
}

#[test]
fn theta_on_example_is_a_partial_arc() {
    let out = run(&["theta", "--space", &data("q5.json"), "--measure", &data("example4.json"), "--point", &data("origin.json"), "--tau", "{0,4}"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["summary"]["kind"], "partial");
    assert_eq!(v["contiguous"], true);
    assert_eq!(v["points"].as_array().unwrap().len(), 64);
}

#[test]
fn clt_sim_is_deterministic_across_thread_counts() {
    let dir = std::env::temp_dir().join(format!("orthant-stats-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let mut reports = Vec::new();
    let mut tables = Vec::new();
    for threads in ["1", "4"] {
        let csv = dir.join(format!("draws-{threads}.csv"));
        let out = run(&[
            "clt-sim",
            "--space",
            &data("book.json"),
            "--measure",
            &data("book.csv"),
            "--n",
            "200",
            "--reps",
            "60",
            "--seed",
            "9",
            "--predict",
            "--threads",
            threads,
            "--out",
            csv.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        reports.push(String::from_utf8(out.stdout).unwrap().replace(&format!("draws-{threads}"), "draws"));
        tables.push(std::fs::read_to_string(&csv).unwrap());
    }
    std::fs::remove_dir_all(&dir).ok();
    assert_eq!(reports[0], reports[1]);
    assert_eq!(tables[0], tables[1]);
    assert_eq!(tables[0].lines().count(), 61);
    assert!(tables[0].starts_with("rep,stratum,z0,z1,z2,z3\n"));
    let v: Value = serde_json::from_str(&reports[0]).unwrap();
    assert_eq!(v["prediction"]["support"]["violations"], serde_json::json!([]));
    assert!(v["prediction"]["masses"].is_array());
}

#[test]
fn clt_sim_declines_masses_without_a_single_root() {
    let out = run(&["clt-sim", "--space", &data("q5.json"), "--measure", &data("example4.json"), "--n", "20", "--reps", "10", "--predict"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    let reason = v["prediction"]["masses"]["unavailable"].as_str().unwrap();
    assert!(reason.starts_with("hypothesis not met"), "{reason}");
    assert!(v["prediction"]["pieces"].as_array().unwrap().len() > 1);
}

#[test]
fn reals_carry_seventeen_significant_digits() {
    let out = run(&["geodesic", "--space", &data("q5.json"), "--from", &data("base.csv"), "--to", &data("origin.json")]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"length\": 1.4142135623730951e0"), "{text}");
}

#[test]
fn every_subcommand_has_a_schema() {
    for sub in ["validate", "geodesic", "logmap", "frechet-mean", "verify-mean", "theta", "clt-sim"] {
        let out = run(&[sub, "--schema"]);
        assert_eq!(code(&out), 0, "{sub}");
        let v = json(&out);
        assert_eq!(v["type"], "object", "{sub}");
        assert!(v["$schema"].is_string(), "{sub}");
    }
}

#[test]
fn output_flag_writes_a_file() {
    let path = std::env::temp_dir().join(format!("orthant-stats-validate-{}.json", std::process::id()));
    let out = run(&["validate", "--space", &data("q5.json"), "-o", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    std::fs::remove_file(&path).ok();
    assert_eq!(v["valid"], true);
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(code(&run(&["nonsense"])), 64);
    assert_eq!(code(&run(&["geodesic", "--space", &data("q5.json")])), 64);
    assert_eq!(code(&run(&["--tol", "-1", "validate", "--space", &data("q5.json")])), 64);
    assert_eq!(code(&run(&["verify-mean", "--grid", "0", "--space", "a", "--measure", "b", "--point", "c"])), 64);
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
}

#[test]
fn threads_env_is_parsed() {
    let out = Command::new(env!("CARGO_BIN_EXE_orthant-stats"))
        .args(["validate", "--space", &data("q5.json")])
        .env("ORTHANT_STATS_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&out), 64);
    let out = Command::new(env!("CARGO_BIN_EXE_orthant-stats"))
        .args(["validate", "--space", &data("q5.json")])
        .env("ORTHANT_STATS_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
}

#[test]
fn runtime_errors_exit_1() {
    let out = run(&["validate", "--space", &data("missing.json")]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot read"));
    let out = run(&["geodesic", "--space", &data("q5.json"), "--from", &data("p1.json"), "--to", &data("page.json")]);
    assert_eq!(code(&out), 1);
}
