use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn suite(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("../../configs/suite/{name}.json"))
}

fn webfem(args: &[&str]) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_webfem"));
    cmd.args(args).env_remove("WEBFEM_OUT").env("RUST_LOG", "off");
    cmd
}

fn run(args: &[&str]) -> Output {
    webfem(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Writes a variant of a bundled config with `edit` applied.
fn variant(dir: &Path, base: &str, name: &str, edit: impl FnOnce(&mut Value)) -> PathBuf {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(suite(base)).unwrap()).unwrap();
    v["name"] = Value::from(name);
    edit(&mut v);
    let path = dir.join(format!("{name}.json"));
    std::fs::write(&path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    path
}

fn report(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(name).join("report.json")).unwrap()).unwrap()
}

fn without_timing(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("timing");
    v
}

#[test]
fn bundled_poisson_study_writes_all_outputs() {
    let out = TempDir::new().unwrap();
    let o = run(&["run", suite("disk_poisson_deg2").to_str().unwrap(), "--check", "--out", out.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("h1"));
    let dir = out.path().join("disk_poisson_deg2");
    for f in ["report.json", "report.txt", "levels.csv"] {
        assert!(dir.join(f).is_file(), "{f} missing");
    }
    let r = report(out.path(), "disk_poisson_deg2");
    assert_eq!(r["levels"].as_array().unwrap().len(), 4);
    assert_eq!(r["eoc"]["h1"].as_array().unwrap().len(), 3);
    assert_eq!(r["passed"], Value::Bool(true));
    let csv = std::fs::read_to_string(dir.join("levels.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.lines().next().unwrap().contains("h1"));
}

#[test]
fn inadmissible_exponent_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = variant(dir.path(), "plap_p3", "bad_p", |v| v["problem"]["p"] = Value::from(0.5));
    let o = run(&["run", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("(1, inf)"), "{}", stderr(&o));
    assert!(!dir.path().join("bad_p").exists());
}

#[test]
fn malformed_and_missing_configs_are_config_errors() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"name\": \"x\", \"problem\": ").unwrap();
    assert_eq!(code(&run(&["run", bad.to_str().unwrap()])), 2);
    let missing = dir.path().join("missing.json");
    assert_eq!(code(&run(&["run", missing.to_str().unwrap()])), 2);
    let unknown = variant(dir.path(), "disk_poisson_deg2", "unknown", |v| v["colour"] = Value::from("red"));
    assert_eq!(code(&run(&["run", unknown.to_str().unwrap()])), 2);
}

#[test]
fn describe_prints_index_sets_without_solving() {
    let out = TempDir::new().unwrap();
    let o = webfem(&["run", suite("disk_poisson_deg2").to_str().unwrap(), "--describe"])
        .env("WEBFEM_OUT", out.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("|I|") && text.contains("|J|"));
    // level 0: 16 inner and 20 outer B-splines
    let row = text.lines().find(|l| l.trim_start().starts_with("0 ")).unwrap();
    let cols: Vec<&str> = row.split_whitespace().collect();
    assert_eq!(&cols[3..6], &["36", "16", "20"]);
    assert_eq!(text.lines().count(), 6);
    assert!(std::fs::read_dir(out.path()).unwrap().next().is_none());
}

#[test]
fn output_directory_comes_from_the_environment_unless_overridden() {
    let env_dir = TempDir::new().unwrap();
    let flag_dir = TempDir::new().unwrap();
    let cfg = suite("jackson_disk");
    let o = webfem(&["run", cfg.to_str().unwrap()]).env("WEBFEM_OUT", env_dir.path()).output().unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(env_dir.path().join("jackson_disk/report.json").is_file());
    let o = webfem(&["run", cfg.to_str().unwrap(), "--out", flag_dir.path().to_str().unwrap()])
        .env("WEBFEM_OUT", env_dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(flag_dir.path().join("jackson_disk/report.json").is_file());
}

#[test]
fn matrices_are_dumped_as_triplets() {
    let out = TempDir::new().unwrap();
    let o = run(&["run", suite("jackson_disk").to_str().unwrap(), "--dump-matrices", "--out", out.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let dir = out.path().join("jackson_disk/matrices");
    for level in 0..3 {
        let m = std::fs::read_to_string(dir.join(format!("jackson_disk_level{level}_matrix.txt"))).unwrap();
        let dofs = report(out.path(), "jackson_disk")["levels"][level]["dofs"].as_u64().unwrap();
        let header: Vec<u64> = m.lines().next().unwrap().split_whitespace().map(|t| t.parse().unwrap()).collect();
        assert_eq!(&header[..2], &[dofs, dofs]);
        assert_eq!(m.lines().count() as u64, header[2] + 1);
        assert!(dir.join(format!("jackson_disk_level{level}_rhs.txt")).is_file());
    }
}

#[test]
fn degraded_quadrature_fails_the_check() {
    let dir = TempDir::new().unwrap();
    let cfg = variant(dir.path(), "disk_poisson_deg2", "shallow", |v| {
        v["quadrature"] = serde_json::json!({"depth": 0});
    });
    let path = cfg.to_str().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(code(&run(&["run", path, "--out", out])), 0);
    let o = run(&["run", path, "--check", "--out", out]);
    assert_eq!(code(&o), 4, "{}", stdout(&o));
    assert_eq!(report(dir.path(), "shallow")["passed"], Value::Bool(false));
}

#[test]
fn solver_failure_exits_three_with_partial_report() {
    let dir = TempDir::new().unwrap();
    let cfg = variant(dir.path(), "disk_poisson_deg2", "starved", |v| {
        v["solver"] = serde_json::json!({"max_linear_iter": 2});
    });
    let o = run(&["run", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let r = report(dir.path(), "starved");
    assert_eq!(r["failure"]["level"], Value::from(0));
    assert_eq!(r["failure"]["category"], Value::from("solver"));
}

#[test]
fn reports_do_not_depend_on_runs_or_thread_count() {
    let dir = TempDir::new().unwrap();
    let cfg = suite("plap_rough_p15");
    let mut reports = Vec::new();
    for (i, threads) in ["1", "3", "3"].iter().enumerate() {
        let out = dir.path().join(i.to_string());
        let o = run(&["run", cfg.to_str().unwrap(), "--threads", threads, "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        reports.push(without_timing(report(&out, "plap_rough_p15")));
    }
    assert_eq!(reports[0], reports[1]);
    assert_eq!(reports[1], reports[2]);
}

#[test]
fn empty_suite_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let o = run(&["check-suite", "--suite", dir.path().to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("no *.json"));
}

#[test]
fn suite_with_a_violated_floor_exits_four() {
    let dir = TempDir::new().unwrap();
    let suite_dir = dir.path().join("suite");
    std::fs::create_dir(&suite_dir).unwrap();
    variant(&suite_dir, "jackson_disk", "ok", |_| {});
    variant(&suite_dir, "disk_poisson_deg2", "shallow", |v| {
        v["quadrature"] = serde_json::json!({"depth": 0});
    });
    let out = dir.path().join("out");
    let o = run(&["check-suite", "--suite", suite_dir.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    let table = std::fs::read_to_string(out.join("suite.txt")).unwrap();
    assert!(table.lines().any(|l| l.starts_with("ok ") && l.contains("PASS")));
    assert!(table.lines().any(|l| l.starts_with("shallow ") && l.contains("FAIL")));
}

#[test]
fn suite_is_validated_before_running() {
    let dir = TempDir::new().unwrap();
    variant(dir.path(), "jackson_disk", "a_fine", |_| {});
    variant(dir.path(), "plap_p3", "b_broken", |v| v["levels"] = Value::from(0));
    let out = dir.path().join("out");
    let o = run(&["check-suite", "--suite", dir.path().to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("b_broken"));
    assert!(!out.join("a_fine").exists());
}
