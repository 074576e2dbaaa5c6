//! End-to-end tests of the `qoc` binary: output values, exit codes, and
//! byte determinism.

use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    let mut path = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    path.push("tests/fixtures");
    path.push(name);
    path.to_str().unwrap().to_string()
}

fn qoc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qoc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(output: &Output) -> serde_json::Value {
    assert!(
        output.status.success(),
        "exit {:?}, stderr: {}",
        output.status.code(),
        String::from_utf8_lossy(&output.stderr)
    );
    serde_json::from_slice(&output.stdout).expect("stdout is JSON")
}

#[test]
fn count_reports_the_exact_fraction() {
    let out = qoc(&["count", &fixture("interpolation_p3_d1.json"), "--q", "1"]);
    let report = stdout_json(&out);
    assert_eq!(report["counting"]["probability"], "7/9");
    assert_eq!(report["counting"]["quotient_order"], "9");
    assert!(report["counting"]["witnesses"].is_null());
}

#[test]
fn count_witnesses_lists_every_winning_payoff() {
    let out = qoc(&[
        "count",
        &fixture("extrapolation_p3_d1.json"),
        "--q",
        "1",
        "--witnesses",
    ]);
    let report = stdout_json(&out);
    assert_eq!(report["counting"]["probability"], "2/3");
    let witnesses = report["counting"]["witnesses"].as_array().unwrap();
    assert_eq!(witnesses.len(), 2);
    let zs: Vec<_> = witnesses.iter().map(|w| w["z"].clone()).collect();
    assert_eq!(serde_json::json!([[[1]], [[2]]]), serde_json::json!(zs));
}

#[test]
fn bound_reports_the_tight_threshold_case() {
    let out = qoc(&["bound", &fixture("extrapolation_p5_d3.json"), "--q", "2"]);
    let report = stdout_json(&out);
    assert_eq!(report["bracket"]["exact"], true);
    assert_eq!(report["bracket"]["lower"]["fraction"], "2/5");
    assert_eq!(report["bracket"]["upper"]["fraction"], "2/5");
}

#[test]
fn check_passes_on_a_healthy_instance() {
    let out = qoc(&[
        "check",
        &fixture("extrapolation_p3_d1.json"),
        "--q",
        "1",
        "--trials",
        "5",
    ]);
    let report = stdout_json(&out);
    let verdicts = report["verdicts"].as_array().unwrap();
    assert_eq!(verdicts.len(), 8);
    assert!(verdicts.iter().all(|v| v["passed"] == true));
}

#[test]
fn check_flags_a_dependent_basis() {
    let out = qoc(&[
        "check",
        &fixture("custom_dependent.json"),
        "--q",
        "1",
        "--trials",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let verdicts = report["verdicts"].as_array().unwrap();
    let free = verdicts.iter().find(|v| v["name"] == "free_module").unwrap();
    assert_eq!(free["passed"], false);
    assert!(String::from_utf8_lossy(&out.stderr).contains("free_module"));
}

#[test]
fn malformed_instance_exits_2() {
    let out = qoc(&["count", &fixture("garbage.json"), "--q", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));
}

#[test]
fn bound_rejects_custom_instances() {
    let out = qoc(&["bound", &fixture("custom_dependent.json"), "--q", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no closed form"));
}

#[test]
fn capacity_guard_exits_3() {
    let out = qoc(&[
        "count",
        &fixture("interpolation_p3_d1.json"),
        "--q",
        "3",
        "--capacity",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn reports_are_byte_deterministic() {
    let count = fixture("interpolation_p3_d1.json");
    let check = fixture("summation_m4_z2.json");
    let sweep = fixture("extrapolation_p5_d3.json");
    let cases: Vec<Vec<&str>> = vec![
        vec!["count", &count, "--q", "1"],
        vec![
            "check", &check, "--q", "1", "--seed", "7", "--trials", "3",
        ],
        vec![
            "sweep", &sweep, "--q-min", "0", "--q-max", "2", "--format", "json",
        ],
    ];
    for args in &cases {
        let first = qoc(args);
        let second = qoc(args);
        assert_eq!(first.status.code(), second.status.code());
        assert_eq!(first.stdout, second.stdout, "stdout differs for {args:?}");
    }
}

#[test]
fn sweep_csv_matches_the_known_column() {
    let out = qoc(&[
        "sweep",
        &fixture("summation_m4_z2.json"),
        "--q-min",
        "0",
        "--q-max",
        "4",
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "q,lower,upper,exact,counting,decimal,simulator"
    );
    let counting: Vec<&str> = lines.map(|l| l.split(',').nth(4).unwrap()).collect();
    assert_eq!(counting, vec!["1/2", "1/2", "1/1", "1/1", "1/1"]);
}

#[test]
fn target_set_sweep_reports_per_set_and_max() {
    let out = qoc(&[
        "count",
        &fixture("interrogation_m3_z2.json"),
        "--q",
        "1",
        "--all-target-sets",
    ]);
    let report = stdout_json(&out);
    let sets = report["target_sets"]["sets"].as_array().unwrap();
    assert_eq!(sets.len(), 3); // the 2-subsets of {0, 1, 2}
    for set in sets {
        assert_eq!(set["probability"], "3/4");
    }
    assert_eq!(report["target_sets"]["max"]["probability"], "3/4");

    // rejected on families without a target set
    let out = qoc(&[
        "count",
        &fixture("interpolation_p3_d1.json"),
        "--q",
        "1",
        "--all-target-sets",
    ]);
    assert_eq!(out.status.code(), Some(2));
}
