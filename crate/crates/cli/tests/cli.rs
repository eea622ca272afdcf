use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const EXE: &str = env!("CARGO_BIN_EXE_varagg");

fn demo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models/demo.json")
}

fn run(args: &[&str], files: &[&Path]) -> Output {
    let mut cmd = Command::new(EXE);
    cmd.args(args);
    for f in files {
        cmd.arg(f);
    }
    cmd.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn golden(name: &str, actual: &str) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
    }
    let want = std::fs::read_to_string(&path)
        .unwrap_or_else(|_| panic!("missing golden {}", path.display()));
    assert_eq!(
        actual, want,
        "{name} differs from golden; rerun with UPDATE_GOLDEN=1 if intended"
    );
}

fn write_model(dir: &Path, name: &str, json: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, json).unwrap();
    p
}

#[test]
fn reduce_demo_reports_eliminations() {
    let o = run(
        &["reduce", "--method", "lm", "--report", "json"],
        &[&demo()],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["method"], "lm");
    assert_eq!(v["before"]["n_elim"], 0);
    assert!(v["after"]["n_elim"].as_u64().unwrap() > 0);
    let b = &v["bounds"];
    assert!(b["n_block"].as_u64() <= b["n_agg"].as_u64());
    assert!(b["n_agg"].as_u64() <= b["n_match"].as_u64());
}

#[test]
fn method_none_leaves_the_model_alone() {
    let o = run(
        &["reduce", "--method", "none", "--report", "json"],
        &[&demo()],
    );
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["before"], v["after"]);
    assert!(v.get("bounds").is_none());
}

#[test]
fn golden_reports() {
    for (method, format) in [
        ("lm", "table"),
        ("lm", "json"),
        ("ld2", "table"),
        ("d2", "json"),
    ] {
        let o = run(
            &["reduce", "--method", method, "--report", format],
            &[&demo()],
        );
        assert_eq!(o.status.code(), Some(0));
        golden(
            &format!(
                "demo_{method}.{}",
                if format == "json" { "json" } else { "txt" }
            ),
            &stdout(&o),
        );
    }
    let o = run(&["analyze"], &[&demo()]);
    golden("demo_analyze.txt", &stdout(&o));
}

#[test]
fn every_method_passes_its_own_check() {
    let dir = tempfile::tempdir().unwrap();
    for method in ["none", "ld1", "ecd2", "ld2", "d2", "gr", "lm"] {
        let out = dir.path().join(format!("{method}.json"));
        let o = Command::new(EXE)
            .arg("reduce")
            .arg(demo())
            .args(["--method", method, "--check", "50", "-o"])
            .arg(&out)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0), "{method}: {}", stderr(&o));
        // the reduced model is itself a valid input
        let again = run(&["analyze"], &[&out]);
        assert_eq!(again.status.code(), Some(0), "{method}: {}", stderr(&again));
    }
}

#[test]
fn inverted_bounds_exit_with_code_1() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_model(
        dir.path(),
        "bad.json",
        r#"{"variables": [{"name": "flow", "lb": 3.0, "ub": 1.0}],
            "equalities": [{"name": "c", "expr": ["-", ["var", "flow"], 2.0]}]}"#,
    );
    let o = run(&["reduce"], &[&p]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("flow"), "{}", stderr(&o));
}

#[test]
fn unreadable_input_exits_with_code_1() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_model(dir.path(), "broken.json", "{\"variables\": [");
    assert_eq!(run(&["reduce"], &[&p]).status.code(), Some(1));
    assert_eq!(
        run(&["analyze"], &[&dir.path().join("missing.json")])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn failed_equivalence_check_exits_with_code_3() {
    // the objective is undefined at every sample point, so nothing can be compared
    let dir = tempfile::tempdir().unwrap();
    let p = write_model(
        dir.path(),
        "domain.json",
        r#"{"variables": [{"name": "x"}, {"name": "y"}],
            "equalities": [{"name": "c", "expr": ["-", ["var", "y"], ["+", ["var", "x"], 1.0]]}],
            "objective": ["log", ["-", ["var", "x"], 10.0]]}"#,
    );
    let o = run(&["reduce", "--method", "lm", "--check", "20"], &[&p]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(run(&["reduce", "--method", "lm"], &[&p]).status.success());
}

#[test]
fn dump_incidence_goes_to_stderr() {
    let o = run(&["analyze", "--dump-incidence"], &[&demo()]);
    assert!(o.status.success());
    let err = stderr(&o);
    let lines: Vec<&str> = err.lines().collect();
    assert!(!lines.is_empty());
    assert!(
        lines
            .iter()
            .all(|l| l.ends_with(" linear") || l.ends_with(" nonlinear")),
        "{lines:?}"
    );
    assert!(stdout(&o).starts_with("Method"));
}

#[test]
fn gen_is_deterministic_and_valid() {
    let a = run(
        &["gen", "--size", "30", "--seed", "4", "--shape", "cycle"],
        &[],
    );
    let b = run(
        &["gen", "--size", "30", "--seed", "4", "--shape", "cycle"],
        &[],
    );
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = run(
        &["gen", "--size", "30", "--seed", "5", "--shape", "cycle"],
        &[],
    );
    assert_ne!(a.stdout, c.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["equalities"].as_array().unwrap().len(), 30);

    let dir = tempfile::tempdir().unwrap();
    let p = write_model(dir.path(), "gen.json", &stdout(&a));
    assert!(run(&["reduce", "--method", "d2", "--check", "30"], &[&p])
        .status
        .success());
    assert_eq!(
        run(&["gen", "--nonlinear", "1.5"], &[]).status.code(),
        Some(1)
    );
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut outs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("run{k}.json"));
        let o = Command::new(EXE)
            .arg("reduce")
            .arg(demo())
            .args(["--method", "ld2", "--inline", "--report", "json", "-o"])
            .arg(&out)
            .output()
            .unwrap();
        outs.push((o.stdout, std::fs::read(&out).unwrap()));
    }
    assert_eq!(outs[0], outs[1]);
}
