use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn epwb(args: &[&str], tol: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_epwb"));
    cmd.args(args).env_remove("EPWB_TOL");
    if let Some(t) = tol {
        cmd.env("EPWB_TOL", t);
    }
    cmd.output().expect("binary runs")
}

fn scenario(dir: &Path, name: &str, json: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, json).unwrap();
    p.to_str().unwrap().to_string()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn equilibrium_simulation_writes_constant_orbit() {
    let dir = TempDir::new().unwrap();
    let f = scenario(
        dir.path(),
        "eq.json",
        r#"{"kind":"simulate","phi":"1","g":"1","x0":1,"interval":[0,10],
            "outputs":{"csv":"out/eq.csv","report":"out/eq.json"}}"#,
    );
    let o = epwb(&["run", &f], None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("out/eq.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,x,xdot"));
    let mut rows = 0;
    for line in lines {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert!(
            (cols[1] - 1.0).abs() < 1e-12 && cols[2].abs() < 1e-12,
            "{line}"
        );
        rows += 1;
    }
    assert_eq!(rows, 201);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/eq.json")).unwrap()).unwrap();
    assert_eq!(report["verdict"], "pass");
}

#[test]
fn shifted_coefficient_breaks_the_symmetry() {
    let dir = TempDir::new().unwrap();
    let f = scenario(
        dir.path(),
        "neg.json",
        r#"{"kind":"verify-symmetry","interval":[0,1],
            "equation":{"g":"(1+t)^4","c0":1,"m":1,"phi_shift":0.1},
            "symmetry":"gamma-s"}"#,
    );
    let o = epwb(&["run", &f], None);
    assert_eq!(code(&o), 2);
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(report["max_residual"].as_f64().unwrap() >= 1e-2);
    assert_eq!(report["verdict"], "fail");
    assert!(String::from_utf8_lossy(&o.stderr).contains("exceeds threshold"));
}

#[test]
fn unshifted_coefficient_keeps_the_symmetry() {
    let dir = TempDir::new().unwrap();
    let f = scenario(
        dir.path(),
        "pos.json",
        r#"{"kind":"verify-symmetry","interval":[0,1],
            "equation":{"g":"(1+t)^4","c0":1,"m":1},
            "symmetry":"gamma-s"}"#,
    );
    let o = epwb(&["run", &f], None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn syntax_error_reports_offset_and_exits_one() {
    let dir = TempDir::new().unwrap();
    let f = scenario(
        dir.path(),
        "bad.json",
        r#"{"kind":"simulate","phi":"sin(","g":"1","x0":1,"interval":[0,1]}"#,
    );
    let o = epwb(&["run", &f], None);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("byte 4"), "{err}");
    assert!(err.contains("phi"), "{err}");
}

#[test]
fn unknown_fields_and_missing_files_exit_one() {
    let dir = TempDir::new().unwrap();
    let f = scenario(
        dir.path(),
        "typo.json",
        r#"{"kind":"simulate","phi":"1","g":"1","x0":1,"interval":[0,1],"thresold":1}"#,
    );
    assert_eq!(code(&epwb(&["run", &f], None)), 1);
    let missing = dir.path().join("nope.json");
    assert_eq!(code(&epwb(&["run", missing.to_str().unwrap()], None)), 1);
    assert_eq!(code(&epwb(&["frobnicate"], None)), 1);
}

#[test]
fn outputs_may_not_overwrite_the_scenario() {
    let dir = TempDir::new().unwrap();
    let f = scenario(
        dir.path(),
        "self.json",
        r#"{"kind":"simulate","phi":"1","g":"1","x0":1,"interval":[0,1],
            "outputs":{"report":"self.json"}}"#,
    );
    let before = fs::read(&f).unwrap();
    assert_eq!(code(&epwb(&["run", &f], None)), 1);
    assert_eq!(fs::read(&f).unwrap(), before);
}

#[test]
fn tolerance_comes_from_the_environment() {
    let dir = TempDir::new().unwrap();
    let f = scenario(
        dir.path(),
        "inv.json",
        r#"{"kind":"verify-invariant","invariant":"lorentz","phi":"1+0.5*sin(3*t)","interval":[0,20]}"#,
    );
    assert_eq!(code(&epwb(&["run", &f], None)), 2);
    assert_eq!(code(&epwb(&["run", &f], Some("10"))), 0);
    assert_eq!(code(&epwb(&["run", &f], Some("tight"))), 1);
    assert_eq!(code(&epwb(&["run", &f], Some("-1"))), 1);
}

#[test]
fn scenario_threshold_beats_the_environment() {
    let dir = TempDir::new().unwrap();
    let f = scenario(
        dir.path(),
        "inv.json",
        r#"{"kind":"verify-invariant","invariant":"lorentz","phi":"1+0.5*sin(3*t)",
            "interval":[0,20],"threshold":1e-6}"#,
    );
    assert_eq!(code(&epwb(&["run", &f], Some("10"))), 2);
}

#[test]
fn reduction_and_central_field_runs_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let red = scenario(
        dir.path(),
        "red.json",
        r#"{"kind":"reduce","g":"exp(4*t)","c0":1,"m":1,"x0":1,"interval":[0,5],
            "outputs":{"csv":"orbit.csv","report":"orbit.json"}}"#,
    );
    let eg = scenario(
        dir.path(),
        "eg.json",
        r#"{"kind":"eliezer-grey","phi":"1+0.5*sin(t)","k":"0.1","r0":1,"thetadot0":1,
            "interval":[0,20],"outputs":{"csv":"eg.csv","report":"eg-report.json"}}"#,
    );
    let mut first = Vec::new();
    for f in [&red, &eg] {
        let o = epwb(&["run", f], None);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        first.push(o.stdout);
    }
    let names = ["orbit.csv", "orbit.json", "eg.csv", "eg-report.json"];
    let snap: Vec<Vec<u8>> = names
        .iter()
        .map(|n| fs::read(dir.path().join(n)).unwrap())
        .collect();
    assert!(fs::read_to_string(dir.path().join("orbit.csv"))
        .unwrap()
        .starts_with("T,X,V\n"));
    assert!(fs::read_to_string(dir.path().join("eg.csv"))
        .unwrap()
        .starts_with("t,r,rdot,theta,L\n"));

    for (i, f) in [&red, &eg].into_iter().enumerate() {
        let o = epwb(&["run", f], None);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(o.stdout, first[i]);
    }
    for (n, before) in names.iter().zip(&snap) {
        assert_eq!(
            &fs::read(dir.path().join(n)).unwrap(),
            before,
            "{n} changed between runs"
        );
    }
}

#[test]
fn audit_ledger_is_written_and_stable() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("ledger.json");
    let o = epwb(&["audit-all", "--out", out.to_str().unwrap()], None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let a = fs::read(&out).unwrap();
    let ledger: serde_json::Value = serde_json::from_slice(&a).unwrap();
    let entries = ledger["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 7);
    assert!(entries.iter().all(|e| e["verdict"] != "unresolved"));

    let o = epwb(&["audit-all", "--out", out.to_str().unwrap()], None);
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read(&out).unwrap(), a);
}

#[test]
fn grammar_is_printed() {
    let o = epwb(&["print-grammar"], None);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    for word in ["sin", "exp", "^"] {
        assert!(text.contains(word), "grammar lacks {word}");
    }
}

#[test]
fn bundled_scenarios_have_documented_outcomes() {
    let src = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let expected = [
        ("equilibrium.json", 0),
        ("lewis.json", 0),
        ("lorentz_fast.json", 2),
        ("gamma_s.json", 0),
        ("gamma_s_shifted.json", 2),
        ("reduce_quartic.json", 0),
        ("torque.json", 0),
        ("ledger.json", 0),
    ];
    let dir = TempDir::new().unwrap();
    for (name, want) in expected {
        let copy = dir.path().join(name);
        fs::copy(src.join(name), &copy).unwrap();
        let o = epwb(&["run", copy.to_str().unwrap()], None);
        assert_eq!(code(&o), want, "{name}: {}", String::from_utf8_lossy(&o.stderr));
    }
    assert!(dir.path().join("out/reduce_quartic.csv").exists());
    assert!(dir.path().join("out/ledger.json").exists());
}
