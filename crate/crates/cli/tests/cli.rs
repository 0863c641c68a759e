use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn small_config() -> Value {
    json!({
        "model": {
            "dimension": 6, "mu": 2,
            "g_family": {"kind": "sqrt_power", "q": 1},
            "h_family": {"kind": "exp_weighted_power", "q_h": 1.5, "nu": 3},
            "a_family": {"kind": "exp_well", "k": 0.5, "nu": 3},
            "mu_tilde": 2.5, "p": 1.8
        },
        "grid": {"r_max": 26, "n_nodes": 256, "grading": {"kind": "geometric", "first_spacing": 1e-4}},
        "constants_grid": {"r_max": 20, "n_nodes": 192, "grading": {"kind": "geometric", "first_spacing": 1e-3}},
        "bubble_grid": {"r_max": 1, "n_nodes": 192, "grading": {"kind": "geometric", "first_spacing": 1e-4}},
        "solver": {"grad_tol": 1e-5},
        "experiments": {"curve": {"direction": {"kind": "random_bump"}, "points": 41}}
    })
}

fn run(dir: &Path, command: &str, config: &Value, extra: &[&str]) -> Output {
    let path = dir.join("config.json");
    fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    Command::new(env!("CARGO_BIN_EXE_choquard-lab"))
        .arg(command)
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(dir.join("out"))
        .args(extra)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn verify_names_the_failing_clauses() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), "verify", &small_config(), &[]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(
        err.contains("H lower bound") && err.contains("G power remainder"),
        "{err}"
    );
    let report: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/axioms.json")).unwrap())
            .unwrap();
    assert_eq!(report["format_version"], 1);
    assert_eq!(report["command"], "verify");
    assert_eq!(report["config"]["model"]["mu_tilde"], 2.5);
    assert!(report["result"]["clauses"].as_array().unwrap().len() > 10);
}

#[test]
fn injected_g0_violation_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small_config();
    c["model"]["g_family"]["negate_derivative"] = json!(true);
    let o = run(dir.path(), "verify", &c, &[]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("(g0)"));
}

#[test]
fn invalid_documents_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small_config();
    c["model"]["mu_tilde"] = json!(4.0);
    assert_eq!(code(&run(dir.path(), "verify", &c, &[])), 2);
    let mut c = small_config();
    c["unexpected"] = json!(1);
    assert_eq!(code(&run(dir.path(), "verify", &c, &[])), 2);
    let mut c = small_config();
    c["experiments"]["decay_window"] = json!([5, 30]);
    assert_eq!(code(&run(dir.path(), "ground-state", &c, &[])), 2);
    let o = Command::new(env!("CARGO_BIN_EXE_choquard-lab"))
        .arg("verify")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn iteration_cap_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small_config();
    c["solver"] = json!({"max_iters": 1});
    let o = run(dir.path(), "ground-state", &c, &[]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("out/ground_state.csv").exists());
}

#[test]
fn zero_direction_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small_config();
    c["experiments"]["curve"]["direction"] =
        json!({"kind": "gaussian", "amplitude": 0.0, "width": 1.0});
    assert_eq!(code(&run(dir.path(), "energy-curve", &c, &[])), 2);
}

#[test]
fn translate_requires_a_ground_state() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), "translate", &small_config(), &[]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("ground-state"));
}

#[test]
fn constants_and_curve_succeed() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        code(&run(
            dir.path(),
            "energy-curve",
            &small_config(),
            &["--seed", "3"]
        )),
        0
    );
    let curve = fs::read_to_string(dir.path().join("out/curve.csv")).unwrap();
    assert!(curve.starts_with("t,total,kinetic,potential,f_term,choquard\n"));
    assert_eq!(curve.lines().count(), 42);
    let o = run(dir.path(), "constants", &small_config(), &[]);
    let report: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/constants.json")).unwrap())
            .unwrap();
    assert!(
        report["result"]["constants"]["c_star_inf"]["value"]
            .as_f64()
            .unwrap()
            > 0.0
    );
    let pass = report["result"]["checks"][0]["pass"].as_bool().unwrap();
    assert_eq!(code(&o), if pass { 0 } else { 1 });
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .map(|e| {
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = small_config();
    for (dir, threads) in [(a.path(), "1"), (b.path(), "3")] {
        for cmd in ["ground-state", "translate", "energy-curve", "threshold"] {
            let o = run(dir, cmd, &c, &["--seed", "11", "--threads", threads]);
            assert!(
                code(&o) <= 1,
                "{cmd}: {}",
                String::from_utf8_lossy(&o.stderr)
            );
        }
    }
    let (sa, sb) = (
        snapshot(&a.path().join("out")),
        snapshot(&b.path().join("out")),
    );
    let names: Vec<&str> = sa.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(
        names,
        [
            "curve.csv",
            "decay.json",
            "ground_state.csv",
            "iterations.csv",
            "lemma45.json",
            "lemma52.json",
            "threshold.json"
        ]
    );
    for ((na, da), (nb, db)) in sa.iter().zip(&sb) {
        assert_eq!(na, nb);
        let da = String::from_utf8_lossy(da).replace(&a.path().display().to_string(), "");
        let db = String::from_utf8_lossy(db).replace(&b.path().display().to_string(), "");
        assert!(da == db, "{na} differs between runs");
    }
}
