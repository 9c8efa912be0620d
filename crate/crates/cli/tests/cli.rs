//! End-to-end checks of the binary surface: exit codes and JSON shapes.

use std::process::Command;

fn mconv() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mconv"))
}

#[test]
fn catalog_list_names_everything() {
    let out = mconv().args(["catalog", "list"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 74);
    assert!(text.contains("S4"));
}

#[test]
fn e_in_rigid_triple_exits_zero() {
    let dir = std::env::temp_dir().join("mconv-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let group_path = dir.join("s3.json");
    let show = mconv().args(["catalog", "show", "--name", "S3"]).output().unwrap();
    assert!(show.status.success());
    std::fs::write(&group_path, &show.stdout).unwrap();
    let out = mconv()
        .args([
            "rigidity",
            "e-in",
            "--group",
            group_path.to_str().unwrap(),
            "--classes",
            "2A,2A,3A",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "e-in must exit 0 with a JSON report");
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["class_count"], 1);
    assert_eq!(v["rigid"], true);
}

#[test]
fn pipeline_reports_check_failure_with_exit_one() {
    // the quadratic-type check fails by design, so the verdict is fail
    let out = mconv()
        .args(["pipeline", "so-general-q", "--q", "7", "--m", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["verdict"], "fail");
    let failing: Vec<&str> = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["status"] == "fail")
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(failing, vec!["34_form_type_plus"]);
}

#[test]
fn malformed_input_exits_two() {
    let dir = std::env::temp_dir().join("mconv-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.json");
    std::fs::write(&bad, "{not json").unwrap();
    let out = mconv()
        .args(["mc", "apply", "--lambda", "-1", "--in", bad.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn rigidity_index_of_the_closed_seed_tuple() {
    use mconv_core::braid::close_with_inverse_product;
    use mconv_core::field::FiniteField;
    let field = FiniteField::prime(7).unwrap();
    let t0_aug = close_with_inverse_product(&mconv_core::pipeline::build_t0(&field, 2));
    let dir = std::env::temp_dir().join("mconv-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("t0_aug.json");
    std::fs::write(&path, serde_json::to_string(&t0_aug.to_json()).unwrap()).unwrap();
    let out = mconv()
        .args(["rigidity", "index", "--in", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["index"], 2);
    assert_eq!(v["linearly_rigid"], true);
}

#[test]
fn env_budget_overrides_orbit_cap() {
    let dir = std::env::temp_dir().join("mconv-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let group_path = dir.join("s3-budget.json");
    let show = mconv().args(["catalog", "show", "--name", "S3"]).output().unwrap();
    std::fs::write(&group_path, &show.stdout).unwrap();
    // the (2A,2A,3A)-style triple 1,2,4 has an orbit of size 3 > 1
    let out = mconv()
        .env("MCONV_BUDGET", "1")
        .args([
            "braid",
            "orbit",
            "--group",
            group_path.to_str().unwrap(),
            "--tuple",
            "1,2,4",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "budget violation must be reported");
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("budget"), "stderr should name the budget: {err}");
}

#[test]
fn parameter_violation_exits_two() {
    let out = mconv()
        .args(["pipeline", "so-div4", "--p", "5", "--m", "2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
