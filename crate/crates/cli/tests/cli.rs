use std::path::Path;
use std::process::{Command, Output};

fn detfilter(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_detfilter"))
        .args(args)
        .env_remove("DETFILTER_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn epsilon_reports_threshold() {
    let o = detfilter(&["epsilon", "--delta", "3", "--bits", "53"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("epsilon_coefficient: 13 * 2^-53"));
    assert!(s.contains("epsilon: 1.44e-15"));
    assert!(s.contains("ops: 14"));

    let o = detfilter(&["epsilon", "--delta", "2", "--bits", "24", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["epsilon_coefficient"], "2");
    assert_eq!(v["epsilon"].as_f64().unwrap(), 2.0 * 2f64.powi(-24));

    let o = detfilter(&["epsilon", "--delta", "2", "--bits", "53", "--predicate", "insphere"]);
    assert!(stdout(&o).contains("note:"));

    let o = detfilter(&["epsilon", "--delta", "9", "--bits", "53"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn constants_table() {
    let o = detfilter(&["constants", "--rule", "nearest"]);
    assert!(o.status.success());
    let s = stdout(&o);
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(lines.len(), 7);
    assert!(lines[0].starts_with("delta,sigma,psi"));
    assert!(lines[2].starts_with("2,2.55,3.14,"));
    assert!(lines[6].contains(",3672,"));

    let o = detfilter(&["constants", "--delta-max", "3", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[2]["tau"], 72.0);
    assert!(rows[0]["epsilon"].is_null());

    let o = detfilter(&["constants", "--delta-max", "9"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("omitted"));
}

#[test]
fn simulate_is_seed_determined() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "disk.cfg",
        "domain = ball\ndelta = 2\nn_trials = 20000\nseed = 4\nthresholds = 0.1, 0.5, 1.0\n",
    );
    let a = detfilter(&["simulate", "--config", &cfg]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let b = detfilter(&["simulate", "--config", &cfg, "--workers", "3"]);
    assert_eq!(a.stdout, b.stdout);
    let c = detfilter(&["simulate", "--config", &cfg, "--seed", "5"]);
    assert_ne!(a.stdout, c.stdout);
    let s = stdout(&a);
    assert!(s.starts_with("delta,domain,predicate,V,N,hits,p_hat,stderr,bound,pass\n"));
    assert!(s.lines().last().unwrap().starts_with("2,ball,whichside,1.0,20000,20000,1.0,0.0,"));
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "cube.cfg",
        "domain = cube\ndelta = 2\nn_trials = 1000\nthresholds = 0.5\n",
    );
    let out = dir.path().join("out");
    let o = Command::new(env!("CARGO_BIN_EXE_detfilter"))
        .args(["simulate", "--config", &cfg, "--format", "json"])
        .env("DETFILTER_OUT_DIR", &out)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(out.join("cube.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v[0]["N"], 1000);
}

#[test]
fn config_errors_exit_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.cfg",
        "domain = cube\ndelta = 2\nn_trials = 0\nthresholds = 0.5\n",
    );
    let o = detfilter(&["simulate", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn failure_emits_rho() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "grid.cfg",
        "domain = grid\ndelta = 2\neta_bits = 8\nn_trials = 20000\nseed = 1\n",
    );
    let o = detfilter(&["failure", "--config", &cfg, "--format", "json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let rho = detfilter::bounds::rho(
        2,
        &detfilter::PrecisionConfig::new(8).unwrap(),
        detfilter::bounds::grid_eta(8),
    )
    .unwrap();
    assert_eq!(v[0]["bound"].as_f64().unwrap(), rho);
    assert_eq!(v[0]["pass"], true);

    let cube = write_config(dir.path(), "cube.cfg", "domain = cube\ndelta = 2\nn_trials = 10\n");
    assert_eq!(detfilter(&["failure", "--config", &cube]).status.code(), Some(2));
}

#[test]
fn verify_quick_suite_passes() {
    let o = detfilter(&["verify", "whichside-2d", "--quick"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().count(), 21);
    assert_eq!(detfilter(&["verify", "no-such-suite"]).status.code(), Some(2));
}
