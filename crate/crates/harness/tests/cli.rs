//! End-to-end runs of the `gtclone` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn gtclone<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_gtclone"))
        .args(args)
        .output()
        .expect("spawn gtclone")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn synth_stats_bounds_chain() {
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("db.seq");
    let stats = dir.path().join("stats.csv");
    let out = gtclone([
        "synth",
        "--g",
        "30",
        "--n",
        "400",
        "--c",
        "3",
        "--dist",
        "uniform:1..12",
        "--seed",
        "4",
        "--out",
        db.to_str().unwrap(),
    ]);
    assert!(stdout(&out).contains("wrote 30 strings of length 400 over 3 colors"));

    let out = gtclone([
        "stats",
        "--input",
        db.to_str().unwrap(),
        "--format",
        "sequences",
        "--name",
        "toy",
        "--out",
        stats.to_str().unwrap(),
    ]);
    stdout(&out);
    let stats_text = fs::read_to_string(&stats).unwrap();
    assert!(stats_text.starts_with("name,g,n,c,d_max,d_mean,d_median\ntoy,30,400,3,"));

    // Feed the stats row straight into the bounds table.
    let out = gtclone(["bounds", "--stats", stats.to_str().unwrap()]);
    let table = stdout(&out);
    let line = table.lines().nth(1).unwrap();
    assert!(line.starts_with("toy,800,"), "unexpected bounds line {line}");
}

#[test]
fn attack_with_tiers_and_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let out = gtclone([
        "attack",
        "--synth",
        "g=15;n=300;c=3;dist=uniform:0..10;seed=3",
        "--dhat",
        "4",
        "--tiers",
        "2:40,8",
        "--seed",
        "12",
        "--cutoff-mult",
        "4000",
        "--threads",
        "2",
        "--out",
        run.to_str().unwrap(),
    ]);
    let text = stdout(&out);
    assert!(text.contains("dhat_4:"));
    assert!(text.contains("tiered_2x40_8:"));
    for arm in ["dhat_4", "tiered_2x40_8"] {
        assert!(run.join(arm).join("per_string.csv").exists());
    }
    assert!(run.join("summary.csv").exists());
    assert!(run.join("plots.gp").exists());

    let base = dir.path().join("base");
    let out = gtclone([
        "baseline",
        "--synth",
        "g=15;n=300;c=3;dist=uniform:0..10;seed=3",
        "--out",
        base.to_str().unwrap(),
    ]);
    let text = stdout(&out);
    assert!(text.contains("cloned 15/15"));
    assert!(text.contains("median tests 600"), "baseline cost (c-1)n: {text}");
}

#[test]
fn attack_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.json");
    let out_dir = dir.path().join("cfgrun");
    let cfg = serde_json::json!({
        "dataset": {
            "kind": "synth",
            "g": 10, "n": 128, "c": 2,
            "dist": "constant:3",
            "seed": 5
        },
        "schedules": [ { "tiers": [ { "d_hat": 3 } ] } ],
        "seed": 9,
        "cutoff_mult": 3000,
        "matrix": "exact",
        "log_base": "base2",
        "out": out_dir
    });
    fs::write(&cfg_path, serde_json::to_vec_pretty(&cfg).unwrap()).unwrap();
    let out = gtclone(["attack", "--config", cfg_path.to_str().unwrap()]);
    let text = stdout(&out);
    assert!(text.contains("cloned 10/10"), "exact run should clone all: {text}");
    assert!(out_dir.join("dhat_3").join("curve.csv").exists());
}

#[test]
fn ingest_errors_surface_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.edges");
    fs::write(&bad, "0 1 1\n0 1 -1\n").unwrap();
    let out = gtclone([
        "stats",
        "--input",
        bad.to_str().unwrap(),
        "--format",
        "signed_edges",
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "stderr lacked line info: {err}");

    let missing = gtclone(["attack", "--dhat", "2", "--out", "/tmp/x"]);
    assert!(!missing.status.success());
}

#[test]
fn repeated_attack_runs_are_identical_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &Path| {
        vec![
            "attack".to_string(),
            "--synth".into(),
            "g=8;n=200;c=3;dist=uniform:0..6;seed=11".into(),
            "--dhat".into(),
            "3".into(),
            "--seed".into(),
            "21".into(),
            "--cutoff-mult".into(),
            "2000".into(),
            "--out".into(),
            out.to_str().unwrap().to_string(),
        ]
    };
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    stdout(&gtclone(args(&a)));
    stdout(&gtclone(args(&b)));
    for file in ["per_string.csv", "curve.csv", "scatter.csv", "error_curve.csv"] {
        let fa = fs::read(a.join("dhat_3").join(file)).unwrap();
        let fb = fs::read(b.join("dhat_3").join(file)).unwrap();
        assert_eq!(fa, fb, "{file} differs across runs");
    }
}
