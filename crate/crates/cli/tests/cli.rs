use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use retsim::session::{read_log, replay, write_log, MetricsRecord, SessionLog};

fn retsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_retsim")).args(args).env_remove("RETINAVR_CONFIG").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr_json(o: &Output) -> serde_json::Value {
    serde_json::from_str(String::from_utf8_lossy(&o.stderr).trim()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn effect_sizes_reproduce_the_reference_rows() {
    let o = retsim(&["effect-sizes"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let exits = text.lines().find(|l| l.starts_with("navigation") && l.contains("sphere_exits")).unwrap();
    assert!(exits.contains("0.70 [0.18, 1.22]"), "{exits}");
    assert!(text.lines().all(|l| l.contains("overall")));
    assert_eq!(text.lines().count(), 14);

    let o = retsim(&["effect-sizes", "--all-runs", "--json"]);
    let rows: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 56);
}

#[test]
fn run_rejects_a_log_without_frames() {
    let dir = tempfile::tempdir().unwrap();
    let o = retsim(&["synth", "--profile", "expert", "--module", "tremor", "--seed", "3", "--runs", "1", "--out", p(dir.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let src = dir.path().join("expert-0003_run1_tremor.session.jsonl");
    let log = read_log(&src).unwrap();
    let empty = SessionLog { frames: Vec::new(), events: Vec::new(), ..log };
    let path = dir.path().join("empty.session.jsonl");
    write_log(&path, &empty).unwrap();

    let o = retsim(&["run", "--input", p(&path)]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["error"], "IncompleteSession");

    fs::write(&path, "").unwrap();
    let o = retsim(&["run", "--input", p(&path)]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["error"], "CorruptLog");
}

#[test]
fn synth_run_and_replay_agree() {
    let dir = tempfile::tempdir().unwrap();
    let o = retsim(&["synth", "--profile", "novice", "--module", "laser", "--seed", "8", "--runs", "1", "--out", p(dir.path())]);
    assert!(o.status.success());
    let log_path = dir.path().join("novice-0008_run1_laser.session.jsonl");
    let out = dir.path().join("m.json");
    let o = retsim(&["run", "--module", "laser", "--input", p(&log_path), "--out", p(&out)]);
    assert!(o.status.success());
    let record: MetricsRecord = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let saved: MetricsRecord =
        serde_json::from_str(&fs::read_to_string(dir.path().join("novice-0008_run1_laser.metrics.json")).unwrap()).unwrap();
    assert_eq!(record, saved);
    assert_eq!(record.report, replay(&read_log(&log_path).unwrap()).unwrap());

    let o = retsim(&["run", "--module", "tremor", "--input", p(&log_path)]);
    assert_eq!(stderr_json(&o)["error"], "ModuleMismatch");

    let o = retsim(&["replay", "--input", p(&log_path)]);
    assert!(o.status.success());
    let text = stdout(&o);
    let last: serde_json::Value = serde_json::from_str(text.lines().last().unwrap()).unwrap();
    assert_eq!(last["completed"], true);
    assert!(text.lines().any(|l| l.contains("\"spot_fired\"")));
}

#[test]
fn synth_then_analyze_recovers_the_directional_contrasts() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    for (profile, seed) in [("novice", "100"), ("expert", "200")] {
        let o = retsim(&[
            "synth", "--profile", profile, "--seed", seed, "--participants", "10", "--runs", "3", "--metrics-only", "--out",
            p(&data),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let report = dir.path().join("report");
    let o = retsim(&["analyze", "--metrics", p(&data), "--report", p(&report)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["report.json", "effect_sizes.csv", "lmm.csv", "ring_mass.csv", "heatmap_expert_break0.csv"] {
        assert!(report.join(f).exists(), "{f}");
    }
    let csv = fs::read_to_string(report.join("effect_sizes.csv")).unwrap();
    let d = |module: &str, metric: &str| -> f64 {
        let line = csv.lines().find(|l| l.starts_with(&format!("{module},{metric},overall,"))).unwrap();
        line.split(',').nth(3).unwrap().parse().unwrap()
    };
    assert!(d("peeling", "safety") > 0.0);
    assert!(d("navigation", "sphere_exits") > 0.0);
}

#[test]
fn usage_errors_are_json() {
    let o = retsim(&["run", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"], "UsageError");
    let o = retsim(&["synth", "--profile", "expert", "--module", "cataract", "--seed", "1", "--out", "/tmp/x"]);
    assert_eq!(stderr_json(&o)["error"], "UsageError");
    assert!(retsim(&["--help"]).status.success());
}

#[test]
fn config_comes_from_flag_or_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"navigation": {"sphere_count": 4}}"#).unwrap();
    let out = dir.path().join("a");
    let o = Command::new(env!("CARGO_BIN_EXE_retsim"))
        .args(["synth", "--profile", "expert", "--module", "navigation", "--seed", "1", "--runs", "1", "--out", p(&out)])
        .env("RETINAVR_CONFIG", &cfg)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let log = read_log(out.join("expert-0001_run1_navigation.session.jsonl")).unwrap();
    assert_eq!(log.header.config.navigation.sphere_count, 4);

    fs::write(&cfg, r#"{"touch": {"engage_mm": 1.0, "release_mm": 0.5}}"#).unwrap();
    let o = retsim(&["--config", p(&cfg), "synth", "--profile", "expert", "--seed", "1", "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["error"], "InvalidConfig");

    let o = retsim(&["--config", p(&dir.path().join("missing.json")), "serve", "--port", "0"]);
    assert_eq!(stderr_json(&o)["error"], "ConfigError");
}
