use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn tpa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tpa")).args(args).env("TPA_WORKERS", "2").output().unwrap()
}

fn write_config(dir: &TempDir, name: &str, body: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

/// Parsed CSV body: header plus numeric rows.
fn table(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# {"));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    (header, rows)
}

fn stdout_table(out: &Output) -> (Vec<String>, Vec<Vec<f64>>) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    table(&String::from_utf8(out.stdout.clone()).unwrap())
}

#[test]
fn traveling_wave_width_sweep() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "w.json",
        r#"{"observable":"width","sweep":{"axis":"gamma_v_tilde","start":0,"stop":10,"points":11},"fixed":{"a_ratio":0}}"#,
    );
    let (header, rows) = stdout_table(&tpa(&["scan", "--config", &cfg]));
    assert_eq!(header, ["gamma_v_tilde", "width"]);
    assert_eq!(rows.len(), 11);
    for r in rows {
        assert!((r[1] - 2.0 * (1.0 + r[0])).abs() < 1e-10);
    }
}

#[test]
fn standing_wave_six_times_traveling() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "n2.json",
        r#"{"observable":"n2","sweep":{"axis":"a_ratio","start":0,"stop":1,"points":2},"fixed":{"delta_tilde":0}}"#,
    );
    let (_, rows) = stdout_table(&tpa(&["scan", "--config", &cfg]));
    assert!((rows[1][1] / rows[0][1] - 6.0).abs() < 1e-12);
}

#[test]
fn usage_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let empty = write_config(
        &dir,
        "e.json",
        r#"{"observable":"n2","sweep":{"axis":"delta_tilde","start":1,"stop":1,"points":5}}"#,
    );
    let out = tpa(&["scan", "--config", &empty]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty"));

    let unknown = write_config(&dir, "u.json", r#"{"observable":"n4","sweep":{"axis":"a_ratio","start":0,"stop":1,"points":2}}"#);
    assert_eq!(tpa(&["scan", "--config", &unknown]).status.code(), Some(2));
    assert_eq!(tpa(&["scan", "--config", "/nonexistent.json"]).status.code(), Some(2));
    assert_eq!(tpa(&["figure", "--fig", "7"]).status.code(), Some(2));
    assert_eq!(tpa(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn detuning_sweep_of_width_is_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "w.json",
        r#"{"observable":"width","sweep":{"axis":"delta_tilde","start":0,"stop":1,"points":3}}"#,
    );
    assert_eq!(tpa(&["scan", "--config", &cfg]).status.code(), Some(2));
}

#[test]
fn output_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let body = r#"{"observable":"n2+n3","dist":"gaussian","sweep":{"axis":"delta_tilde","start":-3,"stop":3,"points":13},
                   "fixed":{"mu":1.4,"a_ratio":1,"gamma_v_tilde":2,"delta_big":500}}"#;
    let cfg = write_config(&dir, "g.json", body);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (path, workers) in [(&a, "1"), (&b, "3")] {
        let out = Command::new(env!("CARGO_BIN_EXE_tpa"))
            .args(["--workers", workers, "scan", "--config", &cfg, "--out", path.to_str().unwrap()])
            .output()
            .unwrap();
        assert!(out.status.success());
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn oracle_scan_reports_truncation() {
    let dir = TempDir::new().unwrap();
    let out_path = dir.path().join("o.csv");
    let cfg = write_config(
        &dir,
        "o.json",
        &format!(
            r#"{{"observable":"oracle_avg","sweep":{{"axis":"delta_tilde","start":-1,"stop":1,"points":3}},
                 "fixed":{{"a_ratio":0,"gamma_v_tilde":1}},"output":{:?}}}"#,
            out_path.to_str().unwrap()
        ),
    );
    let out = tpa(&["scan", "--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let text = fs::read_to_string(Path::new(&out_path)).unwrap();
    assert!(text.lines().next().unwrap().contains("worst_residual"));
    let (header, rows) = table(&text);
    assert_eq!(header, ["delta_tilde", "oracle_avg", "n_max"]);
    assert!(rows.iter().all(|r| r[2] >= 3.0));
    assert!((rows[0][1] - rows[2][1]).abs() < 1e-3 * rows[1][1]);
}

#[test]
fn figure_two_is_normalized() {
    let (header, rows) = stdout_table(&tpa(&["figure", "--fig", "2", "--points", "5"]));
    assert_eq!(header, ["gamma_v_tilde", "A=0", "A=0.25", "A=0.5", "A=0.75", "A=1"]);
    assert!((rows[0][5] - 1.0).abs() < 1e-12);
    assert!((rows[0][1] - 1.0 / 6.0).abs() < 1e-12);
}

#[test]
fn figure_five_endpoints() {
    let (_, rows) = stdout_table(&tpa(&["figure", "--fig", "5", "--gamma-v-max", "200", "--points", "3"]));
    for col in [1, 2] {
        assert!((rows[0][col] - 4.0 / 3.0).abs() < 1e-6);
        assert!((rows[2][col] - 0.5).abs() < 0.01);
    }
}

#[test]
fn figure_three_accepts_custom_a_values() {
    let (header, rows) = stdout_table(&tpa(&["figure", "--fig", "3", "--a-values", "0,1", "--points", "3"]));
    assert_eq!(header, ["gamma_v_tilde", "A=0", "A=1"]);
    assert!(rows.iter().all(|r| r[1] >= r[2]));
}

#[test]
fn fast_validation_passes() {
    let out = tpa(&["validate", "--level", "fast"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(text.contains("0 failed"));
}
