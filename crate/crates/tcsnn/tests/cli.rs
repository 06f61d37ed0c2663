use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn tcsnn(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tcsnn"))
        .args(args)
        .current_dir(cwd)
        .env_remove("TCSNN_OUT_DIR")
        .output()
        .unwrap()
}

const CONFIG: &str = r#"
schema_version = 1
gammas = [4]

[dataset]
kind = "event_file"
path = "d.events"

[learning]
epochs = 2
"#;

#[test]
fn generate_then_run_then_raster() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let out = tcsnn(
        &[
            "gen-dataset",
            "--classes",
            "3",
            "--channels",
            "20",
            "--steps",
            "80",
            "--seed",
            "4",
            "--examples-per-class",
            "3",
            "--out",
            "d.events",
        ],
        p,
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(fs::read_to_string(p.join("d.events"))
        .unwrap()
        .starts_with("channels=20 classes=3 steps=80\n"));

    fs::write(p.join("exp.toml"), CONFIG).unwrap();
    let out = tcsnn(
        &["run", "--config", "exp.toml", "--workers", "2", "--out", "res"],
        p,
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary = fs::read_to_string(p.join("res/summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
    assert!(summary.lines().nth(2).unwrap().starts_with("4:1,iow-lif,"));

    let out = tcsnn(
        &[
            "raster",
            "--config",
            "exp.toml",
            "--example",
            "1",
            "--gamma",
            "4",
            "--out",
            "res",
        ],
        p,
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(p.join("res/raster_ex1_g4.csv").exists());
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    tcsnn(
        &[
            "gen-dataset",
            "--classes",
            "2",
            "--channels",
            "8",
            "--steps",
            "40",
            "--examples-per-class",
            "2",
            "--out",
            "d.events",
        ],
        p,
    );
    fs::write(p.join("exp.toml"), CONFIG).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_tcsnn"))
        .args(["run", "--config", "exp.toml"])
        .current_dir(p)
        .env("TCSNN_OUT_DIR", p.join("envdir"))
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(p.join("envdir/run_g4.json").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(
        tcsnn(&["run", "--config", "missing.toml"], p).status.code(),
        Some(1)
    );
    fs::write(p.join("bad.toml"), "schema_version = 1\ngammas = [0]\n").unwrap();
    let out = tcsnn(&["run", "--config", "bad.toml"], p);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gamma 0"));
    assert_eq!(tcsnn(&["frobnicate"], p).status.code(), Some(1));
    assert_eq!(tcsnn(&["--help"], p).status.code(), Some(0));

    // a file where the output directory should go
    tcsnn(
        &[
            "gen-dataset",
            "--classes",
            "2",
            "--channels",
            "8",
            "--steps",
            "40",
            "--examples-per-class",
            "2",
            "--out",
            "d.events",
        ],
        p,
    );
    fs::write(p.join("exp.toml"), CONFIG).unwrap();
    fs::write(p.join("blocked"), "").unwrap();
    let out = tcsnn(&["run", "--config", "exp.toml", "--out", "blocked/sub"], p);
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
