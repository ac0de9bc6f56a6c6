use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use compliant_harness::config::parse_config;
use compliant_harness::sweep::run_sweep;

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn sim() -> Command {
    Command::new(env!("CARGO_BIN_EXE_compliant-sim"))
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, text).unwrap();
    path
}

const FALLING_CUBE: &str = r#"{"scenario": "drop", "duration": 0.01, "output_step": 0.001,
    "bodies": [{"name": "cube", "shape": {"cuboid": [0.05, 0.05, 0.05]}, "mass": 0.2, "kind": "dynamic"}]"#;

#[test]
fn zero_duration_run_writes_golden_header_only() {
    let out = tempfile::tempdir().unwrap();
    let status = sim()
        .args(["run", "--duration", "0", "--config"])
        .arg(scenario("grasp.json"))
        .arg("--out")
        .arg(out.path())
        .status()
        .unwrap();
    assert!(status.success());
    let written = fs::read_to_string(out.path().join("grasp.csv")).unwrap();
    let golden = include_str!("golden/grasp_header.csv");
    assert_eq!(written, golden);
    assert_eq!(written.lines().count(), 1);
    let summary = fs::read_to_string(out.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 2);
    assert!(summary.lines().nth(1).unwrap().starts_with("grasp,ok,"));
}

#[test]
fn shipped_scenarios_validate() {
    for name in ["grasp.json", "resting.json", "sweep.json", "wall_impact.json"] {
        let output = sim().arg("validate").arg("--config").arg(scenario(name)).output().unwrap();
        assert!(output.status.success(), "{name}: {}", String::from_utf8_lossy(&output.stderr));
    }
}

#[test]
fn shipped_scenarios_have_expected_bodies() {
    let count = |name: &str| {
        let config = compliant_harness::load_config(&scenario(name)).unwrap();
        compliant_harness::build_world(&config).unwrap().bodies.len()
    };
    assert_eq!(count("wall_impact.json"), 3);
    assert_eq!(count("grasp.json"), 4);
    assert_eq!(count("sweep.json"), 4);
}

#[test]
fn invalid_config_is_rejected_with_field_names() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(
        dir.path(),
        r#"{"bodies": [{"name": "a", "shape": {"cuboid": [1, 1, 1]}, "mass": -1, "kind": "dynamic"},
                       {"name": "b", "shape": {"obj": "missing.obj"}, "mass": 1, "kind": "dynamic"}]}"#,
    );
    let output = sim().arg("validate").arg("--config").arg(&path).output().unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("bodies[0].mass"), "{stderr}");
    assert!(stderr.contains("bodies[1].shape.obj"), "{stderr}");
}

#[test]
fn integrator_failure_exits_nonzero_and_is_summarized() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(
        dir.path(),
        r#"{"scenario": "stiff", "contact": {"g1": 1e30}, "bodies": [
            {"name": "floor", "shape": {"cuboid": [1, 1, 0.1]}, "mass": 1, "kind": "static", "position": [0, 0, -0.05]},
            {"name": "cube", "shape": {"cuboid": [0.05, 0.05, 0.05]}, "mass": 0.2, "kind": "dynamic", "position": [0, 0, 0.02]}]}"#,
    );
    let out = dir.path().join("out");
    let output = sim().arg("run").arg("--config").arg(&path).arg("--out").arg(&out).output().unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("step size underflow"));
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(summary.lines().nth(1).unwrap().starts_with("stiff,failed,"), "{summary}");
}

#[test]
fn overrides_apply() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), &format!("{FALLING_CUBE}}}"));
    let out = dir.path().join("out");
    let status = sim()
        .arg("run")
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(&out)
        .args(["--duration", "0.005", "--h-max", "0.0005"])
        .status()
        .unwrap();
    assert!(status.success());
    let csv = fs::read_to_string(out.join("drop.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 5);
}

#[test]
fn sweep_without_grid_fails() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), &format!("{FALLING_CUBE}}}"));
    let output = sim().arg("sweep").arg("--config").arg(&path).arg("--out").arg(dir.path()).output().unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("no sweep parameters"));
}

#[test]
fn sweep_emits_one_row_per_cell_in_grid_order() {
    let text = format!(r#"{FALLING_CUBE}, "sweep": {{"mu": [0.1, 0.2, 0.3], "g2": [1.0, 2.0]}}}}"#);
    let config = parse_config(&text, Path::new(".")).unwrap();
    let rows = run_sweep(&config, Some(2)).unwrap();
    assert_eq!(rows.len(), 6);
    let coordinates: Vec<(f64, f64)> = rows.iter().map(|r| (r.coordinates[0].1, r.coordinates[1].1)).collect();
    assert_eq!(
        coordinates,
        vec![(1.0, 0.1), (1.0, 0.2), (1.0, 0.3), (2.0, 0.1), (2.0, 0.2), (2.0, 0.3)]
    );
    assert!(rows.iter().all(|r| !r.failed && r.ke_ratio_mean.is_none()));

    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), &text);
    let status = sim().arg("sweep").arg("--config").arg(&path).arg("--out").arg(dir.path()).status().unwrap();
    assert!(status.success());
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("g2,mu,ke_ratio_mean,ke_ratio_max,failed,message"));
    assert_eq!(lines.count(), 6);
}

#[test]
fn failed_cells_keep_their_rows() {
    let text = r#"{"duration": 0.01, "bodies": [
        {"name": "floor", "shape": {"cuboid": [1, 1, 0.1]}, "mass": 1, "kind": "static", "position": [0, 0, -0.05]},
        {"name": "cube", "shape": {"cuboid": [0.05, 0.05, 0.05]}, "mass": 0.2, "kind": "dynamic", "position": [0, 0, 0.02]}],
        "sweep": {"g1": [1e4, 1e30]}}"#;
    let config = parse_config(text, Path::new(".")).unwrap();
    let rows = run_sweep(&config, None).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(!rows[0].failed);
    assert!(rows[1].failed);
    assert!(rows[1].message.contains("underflow"));
}
