use std::process::Command;

use pvtwin::plant::Pacing;
use pvtwin::runtime::{bundled_scenario, run_scenario, PlantConfig, ScenarioScript};

fn pvtwin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pvtwin"))
}

#[test]
fn offline_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let script = bundled_scenario("load-sweep").unwrap();
    for ext in ["jsonl", "csv"] {
        let a = dir.path().join(format!("a.{ext}"));
        let b = dir.path().join(format!("b.{ext}"));
        run_scenario(&script, &PlantConfig::default(), Pacing::Offline, Some(&a)).unwrap();
        run_scenario(&script, &PlantConfig::default(), Pacing::Offline, Some(&b)).unwrap();
        let (a, b) = (std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
        assert!(!a.is_empty());
        assert_eq!(a, b, "{ext}");
    }
}

#[test]
fn load_sweep_tracks_the_slider() {
    let s = run_scenario(&bundled_scenario("load-sweep").unwrap(), &PlantConfig::default(), Pacing::Offline, None)
        .unwrap();
    let means: Vec<f64> = s.segments.iter().map(|seg| seg.mean_load_p_actual).collect();
    for (got, want) in means.iter().zip([5.0, 10.0, 15.0, 20.0, 25.0, 30.0]) {
        assert!((got - want).abs() < 1e-6, "{means:?}");
    }
}

#[test]
fn temperature_step_changes_power_less_than_insolation_step_changes_current() {
    let config = PlantConfig::default();
    let ins = run_scenario(&bundled_scenario("insolation-step").unwrap(), &config, Pacing::Offline, None).unwrap();
    let tmp = run_scenario(&bundled_scenario("temperature-step").unwrap(), &config, Pacing::Offline, None).unwrap();
    let di = ins.relative_change(|s| s.mean_pv_i).unwrap();
    let dp = tmp.relative_change(|s| s.mean_pv_p).unwrap();
    assert!(dp < 0.0);
    assert!(dp.abs() < di.abs(), "{dp} vs {di}");
}

#[test]
fn cli_run_writes_telemetry_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let scn = dir.path().join("s.scn");
    std::fs::write(&scn, "duration 0.5\nat 0.1 set_load 25\n").unwrap();
    let out = dir.path().join("t.csv");
    let o = pvtwin()
        .args(["run", "--scenario", scn.to_str().unwrap(), "--mode", "offline", "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["steps"], 500);
    let text = std::fs::read_to_string(out).unwrap();
    assert_eq!(text.lines().count(), 1 + 10);
    assert!(text.starts_with("t_sim,wall_clock,v_dc,"));
}

#[test]
fn cli_reports_script_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let scn = dir.path().join("bad.scn");
    std::fs::write(&scn, "duration 2\n# fine\nat 1 set_sunshine 4\n").unwrap();
    let o = pvtwin()
        .args(["run", "--scenario", scn.to_str().unwrap(), "--out", dir.path().join("x.jsonl").to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3"), "{err}");
    assert!(ScenarioScript::parse("duration 2\n# fine\nat 1 set_sunshine 4\n").is_err());
}

#[test]
fn cli_config_output_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("plant.toml");
    std::fs::write(&cfg, "[sim]\nload_max_w = 25.0\n").unwrap();
    let first = pvtwin().args(["config", "--config", cfg.to_str().unwrap()]).output().unwrap();
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let effective = dir.path().join("effective.toml");
    std::fs::write(&effective, &first.stdout).unwrap();
    let second = pvtwin().args(["config", "--config", effective.to_str().unwrap()]).output().unwrap();
    assert_eq!(first.stdout, second.stdout);
    assert!(String::from_utf8_lossy(&first.stdout).contains("load_max_w = 25.0"));
}

#[test]
fn cli_curves_prints_a_table() {
    let o = pvtwin().args(["curves", "--grid", "1000,25;500,50", "--points", "5"]).output().unwrap();
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("insolation,temperature,v,i,p"));
    assert_eq!(text.lines().filter(|l| l.starts_with("500,50,")).count(), 5);
    let bad = pvtwin().args(["curves", "--grid", "1000"]).output().unwrap();
    assert!(!bad.status.success());
}
