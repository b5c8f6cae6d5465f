use std::path::Path;
use std::process::{Command, Output};

fn netshare(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netshare"))
        .args(args)
        .arg("--output-dir")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn summary(dir: &Path, name: &str) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join(name)).expect("summary written");
    serde_json::from_str(&text).expect("summary is JSON")
}

#[test]
fn sweep_reports_quadruple_window() {
    let dir = tempfile::tempdir().unwrap();
    let out = netshare(
        dir.path(),
        &[
            "sweep",
            "--pointer1",
            "optimal",
            "--pointer2",
            "optimal",
            "--g",
            "0.5:1.0:0.001",
        ],
    );
    assert!(out.status.success(), "{out:?}");
    let s = summary(dir.path(), "sweep_passive_optimal_optimal_summary.json");
    let window = &s["summary"]["quadruple_window"];
    assert!((window[0].as_f64().unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-5);
    assert!((window[1].as_f64().unwrap() - 0.91018).abs() < 1e-4);
    assert!((s["summary"]["peak_all"]["value"].as_f64().unwrap() - 1.13137).abs() < 1e-5);
    assert_eq!(s["points"], 501);

    let csv = std::fs::read_to_string(dir.path().join("sweep_passive_optimal_optimal.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("G,F1,F2,B11,B12,B21,B22,all_violated"));
    assert_eq!(lines.count(), 501);
}

#[test]
fn manifest_lists_every_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = netshare(dir.path(), &["sweep", "--g", "0.7:0.9:0.1"]);
    assert!(out.status.success());
    let s = summary(dir.path(), "sweep_passive_optimal_optimal_summary.json");
    let m = &s["manifest"];
    assert_eq!(m["command"], "sweep");
    assert_eq!(m["params"]["args"]["g"], "0.7:0.9:0.1");
    assert_eq!(m["version"], env!("CARGO_PKG_VERSION"));
    assert!(m["timestamp"].as_str().unwrap().ends_with('Z'));
    let outputs: Vec<&str> = m["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert_eq!(outputs.len(), 2);
    for path in outputs {
        assert!(Path::new(path).exists(), "{path}");
    }
}

#[test]
fn sweep_csv_is_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for (dir, jobs) in [(&a, "1"), (&b, "2")] {
        let out = netshare(
            dir.path(),
            &["sweep", "--pointer1", "square", "--g", "0:1:0.05", "--jobs", jobs],
        );
        assert!(out.status.success());
    }
    let name = "sweep_passive_square_optimal.csv";
    let (x, y) = (
        std::fs::read(a.path().join(name)).unwrap(),
        std::fs::read(b.path().join(name)).unwrap(),
    );
    assert_eq!(x, y);
}

#[test]
fn square_pointers_never_double_violate() {
    let dir = tempfile::tempdir().unwrap();
    let out = netshare(
        dir.path(),
        &[
            "sweep",
            "--pointer1",
            "square",
            "--pointer2",
            "square",
            "--g",
            "0:1:0.01",
        ],
    );
    assert!(out.status.success());
    let s = summary(dir.path(), "sweep_passive_square_square_summary.json");
    assert!(s["summary"]["double_window"].is_null());
    let peak = &s["summary"]["peak_double"];
    assert!((peak["value"].as_f64().unwrap() - 0.9428).abs() < 1e-3);
    assert!((peak["g"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-3);
}

#[test]
fn active_sweep_double_violates_up_to_grid_end() {
    let dir = tempfile::tempdir().unwrap();
    let out = netshare(
        dir.path(),
        &["sweep", "--mode", "active", "--g", "0.72:0.99:0.01", "--format", "json"],
    );
    assert!(out.status.success(), "{out:?}");
    let text = std::fs::read_to_string(dir.path().join("sweep_active_optimal_optimal.json")).unwrap();
    let points: serde_json::Value = serde_json::from_str(&text).unwrap();
    for p in points.as_array().unwrap() {
        assert!(p["values"]["b11"].as_f64().unwrap() > 1.0);
        assert!(p["values"]["b22"].as_f64().unwrap() > 1.0);
    }
}

#[test]
fn active_sweep_rejects_square_pointer() {
    let dir = tempfile::tempdir().unwrap();
    let out = netshare(dir.path(), &["sweep", "--mode", "active", "--pointer1", "square"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_passes_and_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let out = netshare(dir.path(), &["verify", "--trials", "100", "--tol", "1e-9"]);
    assert!(out.status.success());
    assert!(stdout(&out).starts_with("PASS"));
    assert!(
        summary(dir.path(), "verify_summary.json")["max_deviation"]
            .as_f64()
            .unwrap()
            < 1e-10
    );

    let first = netshare(dir.path(), &["verify", "--trials", "1", "--seed", "42"]);
    let second = netshare(dir.path(), &["verify", "--trials", "1", "--seed", "42"]);
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn verify_with_zero_tolerance_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = netshare(dir.path(), &["verify", "--tol", "0"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("offending config"), "{err}");
}

#[test]
fn verify_rejects_zero_trials() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        netshare(dir.path(), &["verify", "--trials", "0"]).status.code(),
        Some(1)
    );
}

#[test]
fn optimize_mixed_precisions() {
    let dir = tempfile::tempdir().unwrap();
    let out = netshare(dir.path(), &["optimize", "--mode", "mixed-2d"]);
    assert!(out.status.success());
    let s = summary(dir.path(), "optimize_mixed_2d_summary.json");
    let joint = &s["joint"];
    assert!((joint["value"].as_f64().unwrap() - 1.034).abs() < 5e-3);
    assert!((joint["g1"].as_f64().unwrap() - 0.702).abs() < 2e-2);
    assert!((joint["g2"].as_f64().unwrap() - 0.761).abs() < 2e-2);
    assert!((s["equal_g"]["value"].as_f64().unwrap() - 1.033).abs() < 2e-3);
}

#[test]
fn optimize_passive_at_point_eight() {
    let dir = tempfile::tempdir().unwrap();
    let out = netshare(dir.path(), &["optimize", "--mode", "passive", "--g", "0.8"]);
    assert!(out.status.success());
    let s = summary(dir.path(), "optimize_passive_summary.json");
    assert!((s["objective"].as_f64().unwrap() - 1.13137).abs() < 1e-4);
    for theta in s["angles"].as_array().unwrap() {
        assert!((theta.as_f64().unwrap() - std::f64::consts::FRAC_PI_4).abs() < 1e-3);
    }
}

#[test]
fn optimize_active_first_branch() {
    let dir = tempfile::tempdir().unwrap();
    let out = netshare(dir.path(), &["optimize", "--mode", "active", "--g", "0.75"]);
    assert!(out.status.success());
    let s = summary(dir.path(), "optimize_active_summary.json");
    let b11 = s["closed_form"]["b11"].as_f64().unwrap();
    assert!((b11 - std::f64::consts::SQRT_2 * 0.75).abs() < 1e-12);
    assert!(s["numerical"]["constraint_slack"].as_f64().unwrap() >= 0.0);
}

#[test]
fn optimize_active_infeasible_below_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let out = netshare(dir.path(), &["optimize", "--mode", "active", "--g", "0.6"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("infeasible"));
}

#[test]
fn noise_reports_critical_visibility() {
    let dir = tempfile::tempdir().unwrap();
    let out = netshare(dir.path(), &["noise", "--pointer", "optimal"]);
    assert!(out.status.success());
    let s = summary(dir.path(), "noise_optimal_optimal_summary.json");
    assert!((s["critical_visibility"].as_f64().unwrap() - 0.8839).abs() < 1e-3);
    let csv = std::fs::read_to_string(dir.path().join("noise_optimal_optimal.csv")).unwrap();
    assert!(csv.starts_with("V,G_low,G_high\n"));
    assert_eq!(csv.lines().count() - 1, s["boundary_points"].as_u64().unwrap() as usize);
}

#[test]
fn noiseless_window_matches_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let out = netshare(dir.path(), &["noise", "--v1", "1", "--v2", "1"]);
    assert!(out.status.success());
    let w = &summary(dir.path(), "noise_optimal_optimal_summary.json")["window"];
    assert!((w[0].as_f64().unwrap() - 1.0 / 2f64.sqrt()).abs() < 1e-6);
    assert!((w[1].as_f64().unwrap() - (2.0 * (2f64.sqrt() - 1.0)).sqrt()).abs() < 1e-6);
}

#[test]
fn noise_square_never_double_violates() {
    let dir = tempfile::tempdir().unwrap();
    let out = netshare(dir.path(), &["noise", "--pointer", "square"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("no double violation"));
    let s = summary(dir.path(), "noise_square_square_summary.json");
    assert!(s["critical_visibility"].is_null());
    assert_eq!(s["boundary_points"], 0);
}

#[test]
fn invalid_input_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["sweep", "--g", "0:2:0.1"][..],
        &["sweep", "--g", "0:1"],
        &["sweep", "--pointer1", "bogus"],
        &["sweep", "--pointer1", "explicit"],
        &["noise", "--resolution", "1e-6"],
        &["noise", "--v1", "1.5"],
        &["optimize", "--mode", "sideways"],
        &["sweep", "--jobs", "0"],
    ] {
        let out = netshare(dir.path(), args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
    }
}
