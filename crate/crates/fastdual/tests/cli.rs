use std::io::Write;
use std::process::{Command, Output, Stdio};

fn fastdual(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fastdual")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn identical_flags_give_identical_bytes() {
    let cases: &[&[&str]] = &[
        &["sample", "--n", "32", "--m", "2", "--seed", "5"],
        &["iowef", "--family", "RDA", "--n", "64", "--m", "2", "--d", "4"],
        &["distance", "--n", "24", "--m", "2", "--seed", "3"],
        &["emvp-demo", "--n", "64", "--m", "2", "--seed", "1"],
        &["spectral", "--m", "2", "--grid-step", "0.01", "--format", "json"],
    ];
    for args in cases {
        let a = fastdual(args);
        let b = fastdual(args);
        assert!(a.status.success(), "{args:?}: {}", String::from_utf8_lossy(&a.stderr));
        assert!(!a.stdout.is_empty());
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn threads_do_not_change_output() {
    let base = ["failure-rate", "--n", "20", "--m", "2", "--d", "4", "--trials", "20"];
    let one = fastdual(&[&base[..], &["--threads", "1"]].concat());
    let three = fastdual(&[&base[..], &["--threads", "3"]].concat());
    assert!(one.status.success());
    assert_eq!(one.stdout, three.stdout);
}

#[test]
fn dual_check_reports_ok() {
    let o = fastdual(&["dual-check", "--n", "64", "--m", "2", "--seed", "7"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(stdout(&o).lines().next().unwrap()).unwrap();
    assert_eq!(v["ok"], true);
}

#[test]
fn encode_reads_stdin() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_fastdual"))
        .args(["encode", "--n", "16", "--m", "1"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"00000000\n10000000\n").unwrap();
    let o = child.wait_with_output().unwrap();
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].contains("0000000000000000"));
    assert!(!lines[1].contains("\"0000000000000000\""));
}

#[test]
fn delta_matches_table() {
    let o = fastdual(&["delta", "--m", "3"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(stdout(&o).lines().next().unwrap()).unwrap();
    assert!((v["delta"].as_f64().unwrap() - 0.1033989603).abs() < 1e-6);
}

#[test]
fn exit_codes() {
    assert_eq!(fastdual(&["delta", "--m", "1"]).status.code(), Some(2));
    assert_eq!(fastdual(&["distance", "--n", "80"]).status.code(), Some(2));
    assert_eq!(fastdual(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(fastdual(&["sample", "--n", "7"]).status.code(), Some(2));
    let o = fastdual(&["verify-bounds", "--suite", "ratio", "--n-max", "60", "--constant", "2"]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.jsonl");
    let o = fastdual(&["sample", "--n", "16", "--m", "1", "--out", path.to_str().unwrap()]);
    assert!(o.status.success() && o.stdout.is_empty());
    let direct = fastdual(&["sample", "--n", "16", "--m", "1"]);
    assert_eq!(std::fs::read(&path).unwrap(), direct.stdout);
}
