//! End-to-end tests of the `dwell` binary: exit codes, export formats and
//! manifest completeness.

use std::path::Path;
use std::process::{Command, Output};

use dwell::export::{format_value, parse_csv, Manifest, Summary, MANIFEST_NAME};

fn dwell(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dwell"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

/// Every data line re-renders identically through the export formatter.
fn assert_canonical_csv(text: &str) {
    assert!(!text.contains('\r'));
    assert!(text.ends_with('\n'));
    for line in text.lines().skip(1) {
        for field in line.split(',') {
            let v: f64 = field.parse().unwrap();
            assert_eq!(format_value(v), field);
        }
    }
}

fn assert_manifest_complete(dir: &Path) {
    let manifest: Manifest = serde_json::from_str(&std::fs::read_to_string(dir.join(MANIFEST_NAME)).unwrap()).unwrap();
    let mut on_disk: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n != MANIFEST_NAME)
        .collect();
    on_disk.sort();
    let mut listed: Vec<String> = manifest.files.iter().map(|f| f.file.clone()).collect();
    listed.sort();
    assert_eq!(on_disk, listed);
    for entry in &manifest.files {
        let text = std::fs::read_to_string(dir.join(&entry.file)).unwrap();
        if entry.file.ends_with(".csv") {
            let table = parse_csv(&text).unwrap();
            assert_eq!(table.rows(), entry.rows, "{}", entry.file);
            assert_eq!(table.columns, entry.columns, "{}", entry.file);
        } else {
            assert_eq!(text.lines().count(), entry.rows, "{}", entry.file);
        }
    }
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&dwell(&[])), 2);
    assert_eq!(code(&dwell(&["nonsense"])), 2);
    assert_eq!(code(&dwell(&["check", "--level", "medium"])), 2);
    let bad = dwell(&["describe", "--dt", "-0.1"]);
    assert_eq!(code(&bad), 2);
    assert!(String::from_utf8_lossy(&bad.stderr).contains("dt"));
}

#[test]
fn describe_prints_resolved_json() {
    let out = dwell(&["describe", "--preset", "fig2"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["name"], "fig2");
    assert_eq!(v["lambda"], 0.1);
    assert_eq!(v["packet"]["omega_w"], "from_bare_curvature");
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    std::fs::write(
        &path,
        r#"{"lambda": 4.0, "times": {"dt": 0.002}, "packet": {"x0": 0.5}}"#,
    )
    .unwrap();
    let out = dwell(&["describe", "--config", path.to_str().unwrap(), "--x0", "-0.6"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["lambda"], 4.0);
    assert_eq!(v["times"]["dt"], 0.002);
    assert_eq!(v["times"]["t_end"], 30.0);
    assert_eq!(v["packet"]["x0"], -0.6);

    std::fs::write(&path, r#"{"lambda": "six"}"#).unwrap();
    assert_eq!(code(&dwell(&["describe", "--config", path.to_str().unwrap()])), 2);
}

#[test]
fn trajectory_writes_canonical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bare.csv");
    let out = dwell(&[
        "trajectory",
        "--mode",
        "bare",
        "--t-end",
        "2",
        "--record-every",
        "100",
        "--output",
        file.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&file).unwrap();
    assert!(text.starts_with("t,x,v,energy\n"));
    assert_canonical_csv(&text);
    assert_eq!(parse_csv(&text).unwrap().rows(), 21);
}

#[test]
fn packet_reaching_the_edge_is_a_numerical_failure() {
    assert_eq!(
        code(&dwell(&["evolve", "--x0", "7.5", "--omega-w", "1", "--t-end", "0.1"])),
        2
    );
    let out = dwell(&[
        "evolve",
        "--lambda",
        "0.01",
        "--p0",
        "30",
        "--omega-w",
        "1",
        "--t-end",
        "1",
    ]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("edge"));
}

#[test]
fn rgflow_emits_potential_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dwell(&["rgflow", "--no-compare", "--output-dir", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = Summary::parse(&std::fs::read_to_string(dir.path().join("report.txt")).unwrap());
    assert_eq!(report.get("floor_hits"), Some("0"));
    assert_canonical_csv(&std::fs::read_to_string(dir.path().join("rg.csv")).unwrap());
    assert_manifest_complete(dir.path());
}

#[test]
fn short_fig2_scenario_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out = dwell(&["fig2", "--t-end", "6", "--output-dir", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["wp.csv", "ehrenfest.csv", "summary.txt", MANIFEST_NAME] {
        assert!(dir.path().join(name).exists(), "{name} missing");
    }
    let summary = Summary::parse(&std::fs::read_to_string(dir.path().join("summary.txt")).unwrap());
    assert_eq!(summary.get("scenario"), Some("fig2"));
    assert!(summary.get("bare.max_dev_ratio").is_some());
    assert_manifest_complete(dir.path());
}

#[test]
fn fast_check_passes_and_injected_fault_fails() {
    let ok = dwell(&["check", "--level", "fast"]);
    let text = String::from_utf8_lossy(&ok.stdout);
    assert_eq!(code(&ok), 0, "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("criterion=")).count(), 3);

    let bad = dwell(&["check", "--level", "fast", "--fault", "flip-eom-sign"]);
    let text = String::from_utf8_lossy(&bad.stdout);
    assert_eq!(code(&bad), 1, "{text}");
    let line = text.lines().find(|l| l.starts_with("criterion=7")).unwrap();
    assert!(line.contains("status=fail"), "{line}");
    assert!(text
        .lines()
        .any(|l| l.starts_with("criterion=1") && l.contains("status=pass")));
}
