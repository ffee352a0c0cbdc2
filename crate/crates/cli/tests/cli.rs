use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn herglotz(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_herglotz"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn condition<'a>(checks: &'a Value, name: &str) -> &'a Value {
    checks["conditions"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == name)
        .unwrap_or_else(|| panic!("no condition {name}"))
}

#[test]
fn solve_grav() {
    let dir = tempfile::tempdir().unwrap();
    let o = herglotz(&["solve", fixture("grav.json").to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let sol = json(&dir.path().join("solution.json"));
    assert!((sol["v_star"][0].as_f64().unwrap() - 1.0).abs() < 1e-8);
    assert!((sol["z_b"].as_f64().unwrap() + 7.0 / 6.0).abs() < 1e-6);
    assert!(sol["transversality_norm"].as_f64().unwrap() <= 1e-10);
    let csv = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,x1,dx1,z,psi_z,psi_x1\n0.0,1.0,"));
    assert_eq!(csv.lines().count(), 1002);
}

#[test]
fn solve_free_is_at_rest() {
    let dir = tempfile::tempdir().unwrap();
    let o = herglotz(&["solve", fixture("free.json").to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 0);
    assert_eq!(json(&dir.path().join("solution.json"))["v_star"][0].as_f64(), Some(0.0));
}

#[test]
fn far_guess_either_converges_or_reports_newton_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = herglotz(
        &["solve", fixture("damp.json").to_str().unwrap(), "--guess", "100"],
        dir.path(),
    );
    let sol = json(&dir.path().join("solution.json"));
    match code(&o) {
        0 => assert!(sol["converged"].as_bool().unwrap()),
        2 => assert!(!sol["converged"].as_bool().unwrap()),
        c => panic!("unexpected exit {c}"),
    }
}

#[test]
fn exhausted_newton_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = herglotz(
        &["solve", fixture("grav.json").to_str().unwrap(), "--max-iter", "0"],
        dir.path(),
    );
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("did not converge"));
}

#[test]
fn check_grav_passes_everything() {
    let dir = tempfile::tempdir().unwrap();
    let o = herglotz(&["check", fixture("grav.json").to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let checks = json(&dir.path().join("checks.json"));
    assert_eq!(checks["version"], herglotz::VERSION);
    assert_eq!(checks["flags"]["tol"].as_f64(), Some(1e-5));
    let names: Vec<&str> = checks["conditions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(
        names,
        [
            "admissibility",
            "el",
            "classical-el",
            "transversality",
            "dubois-reymond",
            "pmp-optimality",
            "pmp-adjoint-x",
            "pmp-adjoint-z",
            "pmp-endpoints"
        ]
    );
    for name in &names[1..] {
        assert!(dir.path().join(format!("{name}.csv")).exists());
    }
}

#[test]
fn check_flags_non_extremal_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = herglotz(
        &[
            "check",
            fixture("grav.json").to_str().unwrap(),
            "--traj",
            fixture("grav_constant.csv").to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 3);
    let checks = json(&dir.path().join("checks.json"));
    let el = condition(&checks, "el");
    assert!((el["max_abs"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(el["pass"], false);
    assert_eq!(condition(&checks, "admissibility")["pass"], true);
}

#[test]
fn check_free_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let o = herglotz(&["check", fixture("free.json").to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 0);
    let checks = json(&dir.path().join("checks.json"));
    for c in checks["conditions"].as_array().unwrap() {
        assert!(c["max_abs"].as_f64().unwrap() <= 1e-12, "{c}");
    }
}

#[test]
fn noether_reports_expected_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let o = herglotz(
        &["noether", fixture("grav.json").to_str().unwrap(), "--all"],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    let doc = json(&dir.path().join("noether.json"));
    let fams = doc["families"].as_array().unwrap();
    assert_eq!(fams[0]["family"], "time-shift");
    assert_eq!(fams[0]["invariant"], true);
    assert!((fams[0]["constancy"]["mean"].as_f64().unwrap() + 1.5).abs() < 1e-6);
    assert_eq!(fams[1]["family"], "space-translation");
    assert_eq!(fams[1]["invariant"], false);
    assert!(dir.path().join("noether-time-shift.csv").exists());

    let o = herglotz(
        &[
            "noether",
            fixture("grav.json").to_str().unwrap(),
            "--family",
            "time-shift",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    assert_eq!(
        json(&dir.path().join("noether.json"))["families"]
            .as_array()
            .unwrap()
            .len(),
        1
    );
}

#[test]
fn noether_exit_4_on_failed_expectation() {
    let dir = tempfile::tempdir().unwrap();
    let mut problem = json(&fixture("grav.json"));
    problem["families"][1]["expect_invariant"] = Value::Bool(true);
    let path = dir.path().join("wrong.json");
    fs::write(&path, problem.to_string()).unwrap();
    let o = herglotz(&["noether", path.to_str().unwrap(), "--all"], dir.path());
    assert_eq!(code(&o), 4);
}

#[test]
fn noether_on_supplied_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let o = herglotz(
        &[
            "noether",
            fixture("decay.json").to_str().unwrap(),
            "--all",
            "--traj",
            fixture("decay_traj.csv").to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc = json(&dir.path().join("noether.json"));
    let q = doc["families"][0]["constancy"]["mean"].as_f64().unwrap();
    assert!((q + 2.0 * (-1.0f64).exp()).abs() < 1e-8);
}

#[test]
fn input_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let o = herglotz(&["solve", "/nonexistent/problem.json"], dir.path());
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error: reading problem file"));

    let bad = dir.path().join("bad.json");
    fs::write(
        &bad,
        r#"{"n":1,"interval":[0,1],"lagrangian":"dx1^2 +* x1","alpha":[1],"gamma":0}"#,
    )
    .unwrap();
    let o = herglotz(&["solve", bad.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("byte 7"));

    let o = herglotz(
        &["solve", fixture("grav.json").to_str().unwrap(), "--guess", "1,2"],
        dir.path(),
    );
    assert_eq!(code(&o), 1);

    // L = −z cannot be shot
    let o = herglotz(&["solve", fixture("decay.json").to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("irregular"));

    let o = herglotz(
        &["noether", fixture("grav.json").to_str().unwrap(), "--family", "nope"],
        dir.path(),
    );
    assert_eq!(code(&o), 1);
}

#[test]
fn json_flag_mirrors_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = herglotz(&["check", fixture("damp.json").to_str().unwrap(), "--json"], dir.path());
    assert_eq!(code(&o), 0);
    let printed: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(printed, json(&dir.path().join("checks.json")));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let read_all = || {
        let mut files: Vec<(PathBuf, Vec<u8>)> = fs::read_dir(&out)
            .unwrap()
            .map(|e| {
                let p = e.unwrap().path();
                let bytes = fs::read(&p).unwrap();
                (p, bytes)
            })
            .collect();
        files.sort();
        files
    };
    let problem = fixture("coupled.json");
    let mut runs = Vec::new();
    for _ in 0..2 {
        for cmd in ["solve", "check", "noether"] {
            let mut args = vec![cmd, problem.to_str().unwrap()];
            if cmd == "noether" {
                args.push("--all");
            }
            assert_eq!(code(&herglotz(&args, &out)), 0);
        }
        runs.push(read_all());
    }
    assert_eq!(runs[0], runs[1]);
}
