use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_causal-avc"))
}

fn channel(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../channels")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

#[test]
fn validate_accepts_every_shipped_channel() {
    for c in ["xor.toml", "stuck_at_zero.toml", "additive3.toml"] {
        let out = run(&["validate", "--channel", channel(c).to_str().unwrap()]);
        assert!(
            out.status.success(),
            "{c}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn missing_channel_exits_2() {
    let out = run(&["validate", "--channel", "/nonexistent/channel.toml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_channel_exits_2_and_names_the_assumption() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(channel("xor.toml"))
        .unwrap()
        .replace("cost = [0.0, 1.0]", "cost = [1.0, 1.0]");
    std::fs::write(&p, text).unwrap();
    let out = run(&["validate", "--channel", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stand-down"));
}

#[test]
fn unknown_override_key_exits_2() {
    let xor = channel("xor.toml");
    let out = run(&[
        "simulate",
        "--channel",
        xor.to_str().unwrap(),
        "--set",
        "experiment.colour=red",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = run(&["simulate", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn capacity_row_is_bracketed() {
    let xor = channel("xor.toml");
    let out = run(&[
        "capacity",
        "--channel",
        xor.to_str().unwrap(),
        "--K",
        "4",
        "--budget",
        "0.25",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers().unwrap().clone();
    assert_eq!(
        headers.iter().take(5).collect::<Vec<_>>(),
        ["budget", "k", "c_lower", "c_hat", "c_upper"]
    );
    let row = rdr.records().next().unwrap().unwrap();
    let v: Vec<f64> = (2..5).map(|i| row[i].parse().unwrap()).collect();
    assert!(v[0] <= v[1] + 1e-9 && v[1] <= v[2] + 1e-9, "{v:?}");
    // the resolved configuration is logged
    assert!(String::from_utf8_lossy(&out.stderr).contains("[search]"));
}

#[test]
fn simulate_twice_writes_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let xor = channel("xor.toml");
    let mut files = Vec::new();
    for i in 0..2 {
        let p = dir.path().join(format!("run{i}.csv"));
        let out = run(&[
            "simulate",
            "--channel",
            xor.to_str().unwrap(),
            "--strategy",
            "babble-push",
            "--trials",
            "500",
            "--seed",
            "7",
            "--budget",
            "0.4",
            "--rate",
            "0.1",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        files.push(std::fs::read(&p).unwrap());
    }
    assert_eq!(files[0], files[1]);
    assert_eq!(String::from_utf8_lossy(&files[0]).lines().count(), 501);
}

#[test]
fn codebook_then_decode_recovers_a_noiseless_codeword() {
    let dir = tempfile::tempdir().unwrap();
    let cb_path = dir.path().join("cb.json");
    let xor = channel("xor.toml");
    let out = run(&[
        "codebook",
        "--channel",
        xor.to_str().unwrap(),
        "--n",
        "240",
        "--k",
        "4",
        "--rate",
        "0.5",
        "--out",
        cb_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let cb = causal_avc::codec::Codebook::from_json(&std::fs::read_to_string(&cb_path).unwrap())
        .unwrap();
    let y: String = cb
        .codeword(5, &[0, 0, 0, 0])
        .iter()
        .map(|s| char::from(b'0' + *s as u8))
        .collect();
    let out = run(&[
        "decode",
        "--channel",
        xor.to_str().unwrap(),
        "--budget",
        "0",
        "--codebook",
        cb_path.to_str().unwrap(),
        "--y",
        &y,
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["status"]["Decoded"], 5);
}

#[test]
fn empty_sweep_grid_exits_nonzero() {
    let xor = channel("xor.toml");
    let out = run(&["sweep", "--channel", xor.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn check_runs_selected_criteria() {
    let out = run(&["check", "--criteria", "1,9"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 2);
    assert_eq!(run(&["check", "--criteria", "10"]).status.code(), Some(2));
}
