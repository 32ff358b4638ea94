use std::path::PathBuf;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bo-periodic")).args(args).output().expect("runs")
}

fn tmp(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("bo-periodic-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn bifurcate_prints_exact_amplitudes() {
    let o = bin(&["bifurcate", "--modes", "2,3"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["rho"], serde_json::json!(["4/3", "1/3"]));
    assert_eq!(v["b"], "10/3");
    assert!(v["delta"].as_f64().unwrap() > 0.0);
}

#[test]
fn output_is_deterministic() {
    let a = bin(&["bifurcate", "--modes", "2,3"]);
    let b = bin(&["bifurcate", "--modes", "2,3"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn validation_errors_exit_with_one() {
    for args in [
        &["bifurcate", "--modes", "3,2"][..],
        &["solve", "--eps", "-0.1"],
        &["solve", "--nonlinearity", "nope"],
        &["solve", "--bogus"],
        &["scan", "--eps-min", "0.2", "--eps-max", "0.1"],
    ] {
        let o = bin(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn error_json_is_machine_readable() {
    let o = bin(&["--error-json", "bifurcate", "--modes", "2,2"]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(v["error"], "validation");
    assert_eq!(v["exit_code"], 1);
}

#[test]
fn solver_failure_exits_with_two() {
    let o = bin(&["solve", "--eps", "0.03", "--n-cap", "14", "--max-steps", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_kernel_products() {
    let o = bin(&["verify", "--appendix-a", "--max-j", "10"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("0 counterexamples"));
}

#[test]
fn solve_from_config_with_flag_override() {
    let dir = tmp("solve");
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, "modes = [2, 3]\nnonlinearity = \"zero\"\neps = 0.5\nn_cap = 16\n").unwrap();
    let out = dir.join("out");
    let o = bin(&["solve", "--config", cfg.to_str().unwrap(), "--eps", "0.03", "--out-dir", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let sol: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("solution.json")).unwrap()).unwrap();
    assert_eq!(sol["status"], "converged");
    assert_eq!(sol["eps"], 0.03);
    assert!(sol["final_residual"].as_f64().unwrap() <= 1e-10);
    let csv = std::fs::read_to_string(out.join("iteration.csv")).unwrap();
    assert!(csv.starts_with("n,truncation,residual,h_norm,margin,w_method,rn_defect,taylor_defect"));
    assert!(csv.lines().count() >= 3);
}

#[test]
fn scan_writes_report_and_tables() {
    let dir = tmp("scan");
    let o = bin(&[
        "scan", "--eps-min", "0.005", "--eps-max", "0.01", "--grid-points", "3", "--n-cap", "14", "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("scan.json")).unwrap()).unwrap();
    assert_eq!(v["report"]["good_fraction"], 1.0);
    let csv = std::fs::read_to_string(dir.join("scan.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(dir.join("widths.csv").exists());
}
