use std::process::{Command, Output};

fn isomeric(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isomeric")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn verify_writes_report_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = isomeric(&["verify", "--suite", "cartan", "--p", "5", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("0 failed"));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["suite"], "cartan");
    assert_eq!(report["summary"]["fail"], 0);
    assert!(report["cases"][0].get("ms").is_none());
}

#[test]
fn report_goes_to_stdout_without_out() {
    let o = isomeric(&["verify", "--suite", "kkt", "--p", "0", "--window", "0,1,2", "--order", "4"]);
    assert_eq!(code(&o), 0);
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["environment"]["field"], "Q(sqrt(2), sqrt(6))");
}

#[test]
fn timings_are_opt_in() {
    let o = isomeric(&["verify", "--suite", "cartan", "--p", "3", "--timings"]);
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(report["cases"][0].get("ms").is_some());
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"suite":"bubbles","p":3,"seed":7,"samples":{"characters":10}}"#).unwrap();
    let a = isomeric(&["verify", "--config", cfg.to_str().unwrap()]);
    let b = isomeric(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let c = isomeric(&["verify", "--config", cfg.to_str().unwrap(), "--p", "5"]);
    let report: serde_json::Value = serde_json::from_slice(&c.stdout).unwrap();
    assert_eq!(report["config_echo"]["p"], 5);
}

#[test]
fn configuration_errors_exit_2() {
    for args in [
        vec!["verify", "--suite", "qhc", "--p", "4"],
        vec!["verify", "--suite", "qhc"],
        vec!["verify", "--suite", "bogus", "--p", "5"],
        vec!["verify", "--suite", "qhc", "--p", "5", "--order", "1"],
        vec!["verify", "--config", "/nonexistent/config.json"],
        vec!["show-cartan", "--p", "6"],
        vec!["frobnicate"],
    ] {
        assert_eq!(code(&isomeric(&args)), 2, "{args:?}");
    }
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, "{ not json").unwrap();
    assert_eq!(code(&isomeric(&["verify", "--config", cfg.to_str().unwrap()])), 2);
}

#[test]
fn show_cartan_tables() {
    let o = isomeric(&["show-cartan", "--p", "3", "--window", "0,1", "--json"]);
    assert_eq!(code(&o), 0);
    let t: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(t["matrix"], serde_json::json!([[2, -4], [-1, 2]]));
    assert_eq!(t["colours"][0]["dynkin"], "TwistedA2");
    let o = isomeric(&["show-cartan", "--p", "0", "--window", "0,1,2,3", "--json"]);
    let t: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(t["colours"][0]["dynkin"], "BInfinity");
    assert_eq!(t["matrix"][0], serde_json::json!([2, -2, 0, 0]));
    let o = isomeric(&["show-cartan", "--p", "5", "--json"]);
    let t: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(t["colours"], serde_json::json!([]));
}

#[test]
fn weights_act_traces() {
    let o = isomeric(&["weights-act", "--char", "1", "--ops", "P_0,Q_0", "--p", "5"]);
    assert_eq!(code(&o), 0);
    let t: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(t[1]["weight"], serde_json::json!({"0": 2, "1": -1}));
    assert_eq!(t[2]["weight"], serde_json::json!({}));
    let o = isomeric(&["weights-act", "--char", "m=1:1;kappa=-2", "--ops", "P_1", "--p", "5"]);
    assert_eq!(code(&o), 0);
    let bad = isomeric(&["weights-act", "--char", "m=1:1;kappa=0", "--ops", "P_1", "--p", "5"]);
    assert_eq!(code(&bad), 2);
    assert!(String::from_utf8_lossy(&bad.stderr).contains("deg"));
}
