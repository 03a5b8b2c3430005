use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("scenario.cfg");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_electromech")).arg("--config").arg(&cfg).args(args).output().expect("binary runs")
}

fn out_arg(dir: &Path, name: &str) -> String {
    dir.join(name).display().to_string()
}

#[test]
fn params_table_reproduces_reference_numbers() {
    let tmp = TempDir::new().unwrap();
    let out = run(tmp.path(), "scenario = params\n", &["--out", &out_arg(tmp.path(), "p")]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    for name in ["x0 ", "x0_prime", "lambda ", "n_bar_gamma", "kappa_prime", "omega_eff", "frequency_shift"] {
        assert!(stdout.contains(name), "missing {name} in\n{stdout}");
    }
    let rows: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("p/params.json")).unwrap()).unwrap();
    let get = |n: &str| rows.as_array().unwrap().iter().find(|r| r["name"] == n).unwrap()["value"].as_f64().unwrap();
    assert!((get("x0") / 4.2e-15 - 1.0).abs() < 0.01);
    assert!((get("x0_prime") / 8.4e-15 - 1.0).abs() < 0.01);
    assert!((get("lambda") / 1.48e4 - 1.0).abs() < 0.01);
    assert!((get("n_bar") / 20.0 - 1.0).abs() < 0.05);
    assert!((get("n_bar_gamma") / 4.0e3 - 1.0).abs() < 0.05);
    assert_eq!(get("spin_strong_coupling"), 1.0);
    assert!(tmp.path().join("p/params.csv").exists());
}

#[test]
fn malformed_config_exits_2_without_outputs() {
    let tmp = TempDir::new().unwrap();
    for bad in [
        "scenario = cool\nbogus = 1\n",
        "scenario = cool\nkappa = fast\n",
        "not a line\n",
        "kappa = 1\n",
        "scenario = teleport-motional\nalpha_re = 0.5\n",
    ] {
        let out = run(tmp.path(), bad, &["--out", &out_arg(tmp.path(), "o")]);
        assert_eq!(out.status.code(), Some(2), "{bad}");
        assert!(!tmp.path().join("o").exists());
    }
    let out = run(tmp.path(), "scenario = cool\n", &["--out", &out_arg(tmp.path(), "o"), "--truncation", "spin=3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn precondition_violation_exits_3() {
    let tmp = TempDir::new().unwrap();
    let out = run(
        tmp.path(),
        "scenario = superpose\nprofile = desk\nmech_occupation = 0.5\n",
        &["--out", &out_arg(tmp.path(), "o")],
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(!tmp.path().join("o").exists());
}

#[test]
fn same_seed_gives_identical_reports() {
    let tmp = TempDir::new().unwrap();
    let cfg = "scenario = teleport-motional\nprofile = desk\nseed = 11\n";
    let a = run(tmp.path(), cfg, &["--out", &out_arg(tmp.path(), "a")]);
    let b = run(tmp.path(), cfg, &["--out", &out_arg(tmp.path(), "b")]);
    assert!(a.status.success() && b.status.success());
    for f in ["report.json", "branches.json", "branches.csv", "metrics.csv"] {
        let x = fs::read(tmp.path().join("a").join(f)).unwrap();
        let y = fs::read(tmp.path().join("b").join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(tmp.path().join("a/report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 11);
    assert!(report["final_fidelity"].as_f64().unwrap() > 1.0 - 1e-9);
    let c = run(tmp.path(), cfg, &["--out", &out_arg(tmp.path(), "c"), "--seed", "12"]);
    assert!(c.status.success());
    assert_ne!(
        fs::read(tmp.path().join("a/report.json")).unwrap(),
        fs::read(tmp.path().join("c/report.json")).unwrap()
    );
}

#[test]
fn cooling_run_writes_trajectory_and_respects_format() {
    let tmp = TempDir::new().unwrap();
    let cfg = "scenario = cool\nprofile = desk\ng = 0.05\nkappa = 1\ngamma_m = 0.002\nn_bar = 0.3\nsamples = 21\n";
    let out = run(tmp.path(), cfg, &["--out", &out_arg(tmp.path(), "c"), "--format", "csv", "--truncation", "mech=14"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let traj = fs::read_to_string(tmp.path().join("c/trajectory.csv")).unwrap();
    assert_eq!(traj.lines().count(), 22);
    assert!(!tmp.path().join("c/report.json").exists());
    let metrics = fs::read_to_string(tmp.path().join("c/metrics.csv")).unwrap();
    let hold = metrics.lines().find(|l| l.starts_with("invariants_hold,")).unwrap();
    assert!(hold.ends_with("1.00000000000000000e0"), "{hold}");
}

#[test]
fn esr_scan_emits_spectrum() {
    let tmp = TempDir::new().unwrap();
    let cfg = "scenario = esr-scan\nprofile = desk\nlambda = 0.02\nomega_d_prime = 0.6\ngamma_m = 0.005\nkappa = 0\n\
               n_bar = 0.05\nspin_decay = 0.0005\nspin_dephasing = 0.01\nrange_min = 0.6\nrange_max = 1.0\nresolution = 0.02\n";
    let out = run(tmp.path(), cfg, &["--out", &out_arg(tmp.path(), "e"), "--jobs", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let spectrum = fs::read_to_string(tmp.path().join("e/spectrum.csv")).unwrap();
    assert_eq!(spectrum.lines().count(), 22);
    let peaks = fs::read_to_string(tmp.path().join("e/peaks.csv")).unwrap();
    assert_eq!(peaks.lines().count(), 2);
}

#[test]
fn verify_all_exits_zero() {
    let tmp = TempDir::new().unwrap();
    let out = run(tmp.path(), "scenario = verify-all\ninstances = 3\n", &["--out", &out_arg(tmp.path(), "v")]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let reports: Vec<serde_json::Value> =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("v/oracle.json")).unwrap()).unwrap();
    assert_eq!(reports.len(), 3 + 8 * 3);
    assert!(reports.iter().all(|r| r["pass"] == true));
}

#[test]
fn spin_teleport_runs_end_to_end() {
    let tmp = TempDir::new().unwrap();
    let out = run(
        tmp.path(),
        "scenario = teleport-spin\nprofile = desk\nbranch = 2\n",
        &["--out", &out_arg(tmp.path(), "s")],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(tmp.path().join("s/report.json")).unwrap()).unwrap();
    assert_eq!(report["measurement_record"], serde_json::json!([1, 0]));
    assert!(report["final_fidelity"].as_f64().unwrap() > 1.0 - 1e-9);
}
