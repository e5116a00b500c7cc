use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use switchprune::io;
use tempfile::TempDir;

fn switchprune(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_switchprune"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON report")
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

#[test]
fn full_two_shift_has_one_bit() {
    let dir = TempDir::new().unwrap();
    let g = write(
        &dir,
        "shift.json",
        r#"{"schema": "switchprune/automaton/v1", "m": 2, "nodes": ["q"], "edges": [[0, 0, 1], [0, 0, 2]]}"#,
    );
    let r = report(&switchprune(&["entropy", &g]));
    assert!((r["outputs"]["entropy_bits"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(r["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn stabilize_forbids_the_unstable_loop() {
    let dir = TempDir::new().unwrap();
    let css = write(&dir, "two.json", r#"{"schema": "switchprune/css/v1", "modes": [[[2.0]], [[0.5]]]}"#);
    let out = path(&dir, "two.out.json");
    let r = report(&switchprune(&["stabilize", &css, "--out", &out]));
    assert_eq!(r["outputs"]["status"], "certified");
    assert_eq!(r["outputs"]["result"]["entropy_bits"].as_f64().unwrap(), 0.0);
    let g = io::read_automaton(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(!g.accepts_periodic(&"1".parse().unwrap()));
    assert!(g.accepts_periodic(&"2".parse().unwrap()));
    assert!(Path::new(&path(&dir, "two.trace.json")).exists());
}

#[test]
fn greedy_and_optimal_modes_run() {
    let dir = TempDir::new().unwrap();
    let css = write(&dir, "two.json", r#"{"schema": "switchprune/css/v1", "modes": [[[2.0]], [[0.5]]]}"#);
    for extra in [["--algorithm", "greedy"], ["--optimal", "--lift"]] {
        let mut args = vec!["stabilize", css.as_str()];
        args.extend(extra);
        if extra[1] == "--lift" {
            args.push("1");
        }
        let r = report(&switchprune(&args));
        assert_eq!(r["outputs"]["status"], "certified");
    }
}

#[test]
fn oracle_verdicts() {
    let dir = TempDir::new().unwrap();
    let stable = write(&dir, "s.json", r#"{"schema": "switchprune/css/v1", "modes": [[[0.5]], [[-0.9]]]}"#);
    let r = report(&switchprune(&["oracle", &stable]));
    assert_eq!(r["outputs"]["verdict"], "stable");

    let unstable = write(&dir, "u.json", r#"{"schema": "switchprune/css/v1", "modes": [[[2.0]]]}"#);
    let r = report(&switchprune(&["oracle", &unstable]));
    assert_eq!(r["outputs"]["verdict"], "unstable_cycle");
    assert_eq!(r["outputs"]["detail"]["cycle"], "1");

    let r = report(&switchprune(&["oracle", &unstable, "--budget", "0"]));
    assert_eq!(r["outputs"]["verdict"], "unknown");
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    assert_eq!(switchprune(&["entropy", &path(&dir, "missing.json")]).status.code(), Some(2));
    let bad = write(&dir, "bad.json", r#"{"schema": "switchprune/automaton/v7", "m": 1, "nodes": [], "edges": []}"#);
    assert_eq!(switchprune(&["entropy", &bad]).status.code(), Some(2));

    let css = write(&dir, "u.json", r#"{"schema": "switchprune/css/v1", "modes": [[[2.0]], [[0.5]]]}"#);
    let out = switchprune(&["stabilize", &css, "--budget", "0"]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("aborted"), "{stderr}");
    assert!(Path::new(&path(&dir, "u.trace.json")).exists());
}

#[test]
fn cosim_build_from_files() {
    let dir = TempDir::new().unwrap();
    let model = write(
        &dir,
        "model.json",
        r#"{"schema": "switchprune/model/v1",
            "simulator1": {"states": 1, "inputs": 1, "outputs": 1, "a": [[-1.0]], "b": [[0.0]], "c": [[1.0]], "d": [[0.0]]},
            "simulator2": {"states": 1, "inputs": 1, "outputs": 1, "a": [[-2.0]], "b": [[0.0]], "c": [[1.0]], "d": [[0.0]]}}"#,
    );
    let configs = write(
        &dir,
        "configs.json",
        r#"{"schema": "switchprune/cosim-configs/v1", "modes": [
            {"method1": "forward_euler", "h1": 0.1, "method2": "midpoint", "h2": 0.05, "H": 0.1}]}"#,
    );
    let out = path(&dir, "css.json");
    report(&switchprune(&["cosim-build", "--model", &model, "--configs", &configs, "--out", &out]));
    let css = io::read_css(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let a = css.mode(1);
    assert!((a[(0, 0)] - 0.9).abs() < 1e-12);
    assert!((a[(1, 1)] - 0.819025).abs() < 1e-12);
    assert_eq!(a[(0, 1)], 0.0);

    let ragged = write(
        &dir,
        "ragged.json",
        r#"{"schema": "switchprune/cosim-configs/v1", "modes": [
            {"method1": "forward_euler", "h1": 0.1, "method2": "midpoint", "h2": 0.03, "H": 0.1}]}"#,
    );
    let code = switchprune(&["cosim-build", "--model", &model, "--configs", &ragged, "--out", &out]).status.code();
    assert_eq!(code, Some(2));
}

#[test]
fn pendulum_preset_has_three_unstable_modes() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "p.json");
    let r = report(&switchprune(&["cosim-build", "--preset", "pendulum", "--out", &out]));
    assert_eq!(r["outputs"]["unstable_labels"], serde_json::json!([2, 3, 4]));
}

#[test]
fn stability_domain_csv() {
    let out = switchprune(&["stability-domain", "--methods", "fe,md", "--resolution", "3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("re,im"), "{header}");
    assert_eq!(lines.count(), 9);
}

#[test]
fn plain_output_flattens_the_report() {
    let dir = TempDir::new().unwrap();
    let g = write(
        &dir,
        "g.json",
        r#"{"schema": "switchprune/automaton/v1", "m": 1, "nodes": ["q"], "edges": [[0, 0, 1]]}"#,
    );
    let out = switchprune(&["--plain", "entropy", &g]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l == "outputs.entropy_bits: 0.0"), "{text}");
}
