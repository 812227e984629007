use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cohabitat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cohabitat")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// A registered scenario shrunk to run in a moment.
fn small_config(dir: &Path, edit: impl Fn(&str) -> String) -> String {
    let o = cohabitat(&["list-scenarios", "exp1"]);
    assert!(o.status.success());
    let text: String = stdout(&o)
        .lines()
        .map(|l| match l.split(" = ").next().unwrap() {
            "repetitions" => "repetitions = 2".to_string(),
            "phase1_episodes" => "phase1_episodes = 10".to_string(),
            "phase2_episodes" => "phase2_episodes = 5".to_string(),
            "eval_episodes" => "eval_episodes = 2".to_string(),
            _ => edit(l),
        })
        .collect::<Vec<_>>()
        .join("\n");
    let path = dir.join("small.toml");
    fs::write(&path, text + "\n").unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn lists_every_scenario() {
    let o = cohabitat(&["list-scenarios"]);
    assert!(o.status.success());
    let out = stdout(&o);
    for name in ["exp1", "exp2", "exp3", "exp4", "exp5", "exp5_tight", "exp6", "exp7"] {
        assert!(out.lines().any(|l| l.starts_with(name)), "{name}");
    }
}

#[test]
fn comfort_table_reproduces_twelve_cells() {
    let o = cohabitat(&["comfort-table", "--met", "1.0", "--clo", "0.5", "--band", "0.25"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("temp_c,rh_pct,pmv"));
    let cells: Vec<(String, String)> = lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[1].to_string())
        })
        .collect();
    assert_eq!(cells.len(), 12);
    assert!(cells.contains(&("26".into(), "50".into())));
    assert!(cells.contains(&("25".into(), "65".into())));
}

#[test]
fn run_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), str::to_string);
    let out = dir.path().join("run");
    let o = cohabitat(&["run", &cfg, "--out", out.to_str().unwrap(), "--jobs", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("with_shs"));
    for f in ["manifest.toml", "episodes.csv", "q_stats.csv", "metrics.csv"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let r = cohabitat(&["report", "--in", out.to_str().unwrap()]);
    assert!(r.status.success());
    assert!(stdout(&r).contains("H_A"));

    let metrics = out.join("metrics.csv");
    let text = fs::read_to_string(&metrics).unwrap();
    fs::write(&metrics, text.replacen("H_A", "H_Z", 1)).unwrap();
    let r = cohabitat(&["report", "--in", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(4));
}

#[test]
fn no_shs_flag_drops_second_condition() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), str::to_string);
    let out = dir.path().join("run");
    let o = cohabitat(&["run", &cfg, "--out", out.to_str().unwrap(), "--no-shs"]);
    assert!(o.status.success());
    assert!(!stdout(&o).contains("with_shs"));
}

#[test]
fn configuration_errors_exit_2() {
    assert_eq!(cohabitat(&["run", "exp99"]).status.code(), Some(2));
    assert_eq!(cohabitat(&["list-scenarios", "exp99"]).status.code(), Some(2));
    assert_eq!(cohabitat(&["comfort-table", "--met", "0.1", "--clo", "0.5"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "name = \"x\"\nrepetitions = \"many\"\n").unwrap();
    assert_eq!(cohabitat(&["run", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), |l| {
        if l.starts_with("t_min") {
            "t_min = -300.0".into()
        } else if l.starts_with("t_max") {
            "t_max = -285.0".into()
        } else {
            l.into()
        }
    });
    let out = dir.path().join("run");
    let o = cohabitat(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn io_errors_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nothing");
    assert_eq!(cohabitat(&["report", "--in", missing.to_str().unwrap()]).status.code(), Some(4));
}
