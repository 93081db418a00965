use std::process::Command;

fn uavfog() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_uavfog"));
    c.env_clear();
    c
}

#[test]
fn simulate_writes_outputs_and_report_reaggregates() {
    let dir = tempfile::tempdir().unwrap();
    let out = uavfog()
        .args(["simulate", "--runs", "2", "--seed", "3", "--policies", "RAN,TDO", "--plots", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("TDO") && stdout.contains("RAN"));
    for f in ["report.csv", "summary.csv", "manifest.toml", "reduction.csv", "plots/reduction.svg"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let report = uavfog().args(["report", "--out"]).arg(dir.path()).output().unwrap();
    assert!(report.status.success(), "{}", String::from_utf8_lossy(&report.stderr));
    assert!(String::from_utf8(report.stdout).unwrap().contains("TDO"));
}

#[test]
fn plan_and_assign_print_results() {
    let plan = uavfog().args(["plan", "--seed", "5"]).output().unwrap();
    assert!(plan.status.success());
    let text = String::from_utf8(plan.stdout).unwrap();
    assert!(text.contains("R = ") && text.contains('S') && text.contains('G'));
    let dir = tempfile::tempdir().unwrap();
    let costs = dir.path().join("costs.csv");
    let assign = uavfog().args(["assign", "--seed", "5", "--costs"]).arg(&costs).output().unwrap();
    assert!(assign.status.success());
    assert!(String::from_utf8(assign.stdout).unwrap().contains("after"));
    let text = std::fs::read_to_string(&costs).unwrap();
    assert!(text.starts_with("md,task,chosen,md_delay"));
    assert!(text.lines().count() >= 2);
}

#[test]
fn bad_policy_and_env_override() {
    let bad = uavfog().args(["simulate", "--policies", "NOPE"]).output().unwrap();
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("unknown policy"));
    let env = uavfog().args(["assign"]).env("UAVFOG__SCENARIO__MD_COUNT", "0").output().unwrap();
    assert!(!env.status.success());
}

#[test]
fn config_file_is_read() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[experiment]\nruns = 1\npolicies = [\"RAN\"]\n").unwrap();
    let out = uavfog().args(["simulate", "--config"]).arg(&cfg).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = std::fs::read_to_string(dir.path().join("o/summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 2);
}

#[test]
fn shipped_config_matches_defaults() {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/desk.toml");
    let dir = tempfile::tempdir().unwrap();
    let out = uavfog()
        .args(["simulate", "--runs", "1", "--policies", "TDO", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let with_file = std::fs::read(dir.path().join("report.csv")).unwrap();
    let dir2 = tempfile::tempdir().unwrap();
    let out = uavfog().args(["simulate", "--runs", "1", "--policies", "TDO", "--seed", "1", "--out"]).arg(dir2.path()).output().unwrap();
    assert!(out.status.success());
    assert_eq!(with_file, std::fs::read(dir2.path().join("report.csv")).unwrap());
}
