// Black-box checks of the binary: exit codes, config validation, snapshot
// round-trips and summary reproducibility.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_sigmakflow")
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("sigmakflow-test-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn malformed_config_exits_2() {
    let dir = tmp("malformed");
    let cfg = dir.join("bad.conf");
    write(&cfg, "keywithoutvalue\n");
    let st = Command::new(bin())
        .args(["check-condition-a", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(2));
}

#[test]
fn invalid_params_exit_2() {
    let dir = tmp("badk");
    let cfg = dir.join("bad.conf");
    write(
        &cfg,
        "[params]\nn = 2\nk = 3\nalpha = 1.0\n[grid]\nkind = radial\nr = 10.0\ncells = 64\n[initial]\nkind = hyperboloid\n[conditiona]\ndeclared-c = 1.0\n",
    );
    let st = Command::new(bin())
        .args(["check-condition-a", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(2));
}

#[test]
fn unknown_keys_exit_2() {
    let dir = tmp("unknown");
    let cfg = dir.join("bad.conf");
    write(
        &cfg,
        "[params]\nn = 2\nk = 1\nalpha = 1.0\n[grid]\nkind = radial\nr = 10.0\ncells = 64\n[initial]\nkind = hyperboloid\n[conditiona]\ndeclared-c = 1.0\nmystery = 7\n",
    );
    let st = Command::new(bin())
        .args(["check-condition-a", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(2));
}

#[test]
fn failing_condition_a_exits_1() {
    // sqrt(1 + r^2) violates the pinching with C = 1
    let dir = tmp("condfail");
    let cfg = dir.join("c.conf");
    write(
        &cfg,
        "[params]\nn = 2\nk = 1\nalpha = 1.0\n[grid]\nkind = radial\nr = 60.0\ncells = 2048\n[initial]\nkind = hyperboloid\na = 1.0\n[conditiona]\ndeclared-c = 1.0\n",
    );
    let st = Command::new(bin())
        .args(["check-condition-a", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(1));
    let summary = std::fs::read_to_string(dir.join("out/summary.json")).unwrap();
    assert!(summary.contains("\"holds\":false"));
}

fn small_flow_config() -> String {
    "[params]\nn = 2\nk = 1\nalpha = 1.0\n\
     [grid]\nkind = radial\nr = 0.9\ncells = 96\n\
     [initial]\nkind = dual-hyperboloid\n\
     [time]\nt-end = 0.05\n"
        .to_string()
}

#[test]
fn snapshot_round_trips_through_cli_output() {
    let dir = tmp("roundtrip");
    let cfg = dir.join("f.conf");
    write(&cfg, &small_flow_config());
    let st = Command::new(bin())
        .args(["flow-dual", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(0));
    let text = std::fs::read_to_string(dir.join("out/final.snap")).unwrap();
    let state = sigmakflow_core::snapshot::read_snapshot(&text).unwrap();
    let emitted = sigmakflow_core::snapshot::write_snapshot(&state);
    assert_eq!(text, emitted, "snapshot emit -> parse -> emit must be bitwise stable");
}

#[test]
fn summary_reproducible_modulo_wall_time() {
    let dir = tmp("repro");
    let cfg = dir.join("f.conf");
    write(&cfg, &small_flow_config());
    let mut summaries = Vec::new();
    for run in 0..2 {
        let out = dir.join(format!("out{run}"));
        let st = Command::new(bin())
            .args(["flow-dual", "--threads", "1", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert_eq!(st.code(), Some(0));
        let text = std::fs::read_to_string(out.join("summary.json")).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v.as_object_mut().unwrap().remove("wall_time_s");
        summaries.push(sigmakflow_core::report::json_to_string(&v));
    }
    assert_eq!(summaries[0], summaries[1]);
}

#[test]
fn output_dir_env_var_is_honored() {
    let dir = tmp("envdir");
    let cfg = dir.join("f.conf");
    write(&cfg, &small_flow_config());
    let out = dir.join("envout");
    let st = Command::new(bin())
        .args(["flow-dual", "--config"])
        .arg(&cfg)
        .env("OUTPUT_DIR", &out)
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(0));
    assert!(out.join("summary.json").exists());
}

#[test]
fn expander_radial_cli_summary() {
    let dir = tmp("expander");
    let cfg = dir.join("e.conf");
    write(
        &cfg,
        "[params]\nn = 2\nk = 1\nalpha = 1.0\n[expander]\nc = 0.0\nr-trunc = 30.0\ntol = 1e-8\n",
    );
    let st = Command::new(bin())
        .args(["expander-radial", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(0));
    let text = std::fs::read_to_string(dir.join("out/summary.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let mu = v["results"]["mu"].as_f64().unwrap();
    assert!((mu - 2.0f64.sqrt()).abs() < 1e-6, "mu = {mu}");
    assert!(dir.join("out/expander_profile.snap").exists());
}

#[test]
fn plot_data_files_emitted() {
    let dir = tmp("plots");
    let cfg = dir.join("f.conf");
    // normalized flow produces a residual-sign monitor series
    write(
        &cfg,
        "[params]\nn = 2\nk = 1\nalpha = 1.0\n\
         [grid]\nkind = radial\nr = 0.9\ncells = 96\n\
         [initial]\nkind = dual-hyperboloid\nshift = 0.5\n\
         [time]\nt-end = 0.05\n",
    );
    let st = Command::new(bin())
        .args(["flow-normalized", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(0));
    let plots = dir.join("out/plots");
    assert!(plots.join("plot.gp").exists());
    let names: Vec<String> = std::fs::read_dir(&plots)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert!(names.iter().any(|n| n.ends_with(".csv")), "{names:?}");
}
