use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_abelgas");

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).env_remove("ABELGAS_SEED_DIR").args(args).output().unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn json(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&read(dir, "report.json")).unwrap()
}

#[test]
fn full_system_route() {
    let out = tempfile::tempdir().unwrap();
    let o = run(&["run", scenario("table1.json").to_str().unwrap(), out.path().to_str().unwrap(), "--routes", "full-system"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(out.path(), "full-system.csv");
    assert!(csv.starts_with("t,x1,x2,s1,s2,a,c,f_m\n"));
    assert!(!csv.contains('\r'));
    assert_eq!(csv.lines().nth(1).unwrap().split(',').count(), 8);
    let report = read(out.path(), "report.txt");
    assert!(report.contains("PASS full-system nonnegativity"));
    assert!(report.contains("placeholder parameters: mu2max"));
    assert!(out.path().join("plot_routes.py").is_file());
}

#[test]
fn washout_comparison_writes_four_series_and_flags_case1() {
    let out = tempfile::tempdir().unwrap();
    let o = run(&[
        "run",
        scenario("table1-washout.json").to_str().unwrap(),
        out.path().to_str().unwrap(),
        "--routes",
        "upper-ode,abel-time,abel-w,case1",
        "--compare",
    ]);
    // case1 does not solve the model at these parameters: exit 3, report still written
    assert_eq!(o.status.code(), Some(3));
    for r in ["upper-ode", "abel-time", "abel-w", "case1"] {
        assert!(read(out.path(), &format!("{r}.csv")).starts_with("t,s1_upper\n"));
    }
    let rep = json(out.path());
    let pairs = rep["comparison"]["pairs"].as_array().unwrap();
    assert_eq!(pairs.len(), 6);
    for p in pairs {
        let closed = p["a"] == "case1" || p["b"] == "case1";
        let dev = p["max_abs"].as_f64().unwrap();
        if closed {
            assert!(dev > 1e-5);
        } else {
            assert!(dev <= 1e-6, "{p}");
        }
        assert_eq!(p["lo"].as_f64(), Some(0.0));
        assert_eq!(p["hi"].as_f64(), Some(10.0));
    }
    assert_eq!(rep["sign_audit"]["passing"].as_array().unwrap().len(), 0);
    assert_eq!(rep["routes"].as_array().unwrap().len(), 4);
}

#[test]
fn zero_forcing_case1_passes_everything() {
    let out = tempfile::tempdir().unwrap();
    let o = run(&["run", scenario("zero-forcing.json").to_str().unwrap(), out.path().to_str().unwrap(), "--compare"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rep = json(out.path());
    assert_eq!(rep["sign_audit"]["passing"], serde_json::json!(["derived"]));
    assert!(rep["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
}

#[test]
fn paper_literal_flag_fails_on_zero_forcing() {
    let out = tempfile::tempdir().unwrap();
    let o = run(&[
        "run",
        scenario("zero-forcing.json").to_str().unwrap(),
        out.path().to_str().unwrap(),
        "--routes",
        "case1",
        "--paper-literal-signs",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(json(out.path())["sign_convention"], "paper-literal");
}

#[test]
fn invalid_scenario_names_the_field() {
    let out = tempfile::tempdir().unwrap();
    let o = run(&["run", scenario("bad.json").to_str().unwrap(), out.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpha"));
    assert!(!out.path().join("report.txt").exists());
}

#[test]
fn usage_errors_exit_1() {
    let out = tempfile::tempdir().unwrap();
    let o = run(&["run", scenario("table1.json").to_str().unwrap(), out.path().to_str().unwrap(), "--routes", "nope"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    let o = run(&["run", "no-such-file.json", out.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["run", scenario("table1.json").to_str().unwrap(), out.path().to_str().unwrap(), "--tol-cross", "-1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn failing_route_exits_2() {
    // closed forms need X1(0) = 0
    let out = tempfile::tempdir().unwrap();
    let o = run(&["run", scenario("table1.json").to_str().unwrap(), out.path().to_str().unwrap(), "--routes", "upper-ode,case1"]);
    assert_eq!(o.status.code(), Some(2));
    let rep = json(out.path());
    assert_eq!(rep["routes"][1]["ok"], false);
    assert!(out.path().join("upper-ode.csv").is_file());
}

#[test]
fn reports_are_deterministic_apart_from_timestamp() {
    let strip = |s: String| s.lines().filter(|l| !l.contains("generated_at")).collect::<Vec<_>>().join("\n");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        run(&["run", scenario("table1.json").to_str().unwrap(), d.path().to_str().unwrap(), "--compare"]);
    }
    for f in ["report.txt", "report.json", "abel-w.csv", "full-system.csv", "plot_routes.py"] {
        assert_eq!(strip(read(a.path(), f)), strip(read(b.path(), f)), "{f}");
    }
}

#[test]
fn seed_dir_lookup() {
    let out = tempfile::tempdir().unwrap();
    let o = Command::new(BIN)
        .env("ABELGAS_SEED_DIR", Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios"))
        .args(["run", "table1", out.path().to_str().unwrap(), "--routes", "upper-ode"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.path().join("upper-ode.csv").is_file());
}
