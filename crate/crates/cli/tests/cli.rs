use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn advosc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_advosc"))
        .args(args)
        .env_remove("ADVOSC_HORIZON")
        .output()
        .expect("binary runs")
}

fn report(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn fractional_example_has_property_a() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let cfg = config("fractional.json");
    let o = advosc(&["analyze", cfg.to_str().unwrap(), "--criteria", "T2_1", "--report", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["property_a"]["verdict"], "satisfied");
    assert_eq!(r["property_a"]["granted_by"][0], "T2_1");
}

#[test]
fn family_point_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let csv = dir.path().join("s.csv");
    let cfg = config("euler_family.json");
    let o = advosc(&[
        "analyze",
        cfg.to_str().unwrap(),
        "--report",
        out.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["oscillatory"]["verdict"], "satisfied");
    assert_eq!(r["oscillatory"]["granted_by"][0], "T2_8");
    let text = std::fs::read_to_string(csv).unwrap();
    assert!(text.starts_with("criterion,t,value,threshold\n"));
    assert!(text.lines().any(|l| l.starts_with("E2_33,")));
}

#[test]
fn json_goes_to_stdout_without_a_report_path() {
    let cfg = config("euler_family.json");
    let o = advosc(&["analyze", cfg.to_str().unwrap(), "--criteria", "T2_7"]);
    assert_eq!(o.status.code(), Some(0));
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["results"][0]["verdict"], "not_satisfied");
}

#[test]
fn malformed_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"equation\": 3}").unwrap();
    assert_eq!(advosc(&["analyze", bad.to_str().unwrap()]).status.code(), Some(2));
    let cfg = config("euler_family.json");
    let o = advosc(&["analyze", cfg.to_str().unwrap(), "--criteria", "T9_9"]);
    assert_eq!(o.status.code(), Some(2));
    let o = advosc(&["analyze", cfg.to_str().unwrap(), "--tol", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(advosc(&["analyze", "/nonexistent/config.json"]).status.code(), Some(2));
}

#[test]
fn hypothesis_failure_exits_3_and_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(config("euler_family.json")).unwrap();
    // r1 = t^(1/2) makes the first tail diverge
    let canonical = text.replacen("\"exp\": 2.0", "\"exp\": 0.5", 1);
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, canonical).unwrap();
    let out = dir.path().join("r.json");
    let o = advosc(&["analyze", cfg.to_str().unwrap(), "--report", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let r = report(&out);
    assert_eq!(r["status"], "hypothesis_failed");
    assert!(r["error"].as_str().unwrap().contains("canonical"));
}

#[test]
fn environment_sets_the_default_horizon() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let cfg = config("euler_family.json");
    let o = Command::new(env!("CARGO_BIN_EXE_advosc"))
        .args(["analyze", cfg.to_str().unwrap(), "--report", out.to_str().unwrap()])
        .env("ADVOSC_HORIZON", "1000")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(report(&out)["settings"]["horizon"], 1000.0);
    let o = Command::new(env!("CARGO_BIN_EXE_advosc"))
        .args(["analyze", cfg.to_str().unwrap()])
        .env("ADVOSC_HORIZON", "lots")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn cross_check_runs_both_paths() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let cfg = config("euler_family.json");
    let o = advosc(&["analyze", cfg.to_str().unwrap(), "--criteria", "T2_8", "--cross-check", "--report", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    let window = &r["results"][0]["components"][1];
    assert_eq!(window["path"], "euler");
    let kinds: Vec<&str> = window["evidence"].as_array().unwrap().iter().map(|e| e["kind"].as_str().unwrap()).collect();
    assert!(kinds.contains(&"reduction") && kinds.contains(&"limit"), "{kinds:?}");
}

#[test]
fn reports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("fractional.json");
    let mut bodies = Vec::new();
    for name in ["a.json", "b.json"] {
        let out = dir.path().join(name);
        let o = advosc(&["analyze", cfg.to_str().unwrap(), "--report", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        let mut r = report(&out);
        r.as_object_mut().unwrap().remove("run");
        bodies.push(serde_json::to_string(&r).unwrap());
    }
    assert_eq!(bodies[0], bodies[1]);
}
