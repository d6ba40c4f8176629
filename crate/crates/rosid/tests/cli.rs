use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rosid(args: &[&str], paths: &[&Path]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rosid"));
    cmd.args(args).args(paths).env("RUST_LOG", "warn");
    cmd.output().unwrap()
}

fn synth(dir: &Path, seed: &str) {
    let out = rosid(&["synth", "--seed", seed, "--users", "5", "--catalog-size", "40", "--out"], &[dir]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn synth_is_reproducible() {
    let (a, b, c) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    synth(a.path(), "3");
    synth(b.path(), "3");
    synth(c.path(), "4");
    for file in ["visual.jsonl", "auditory.jsonl", "kinetic.jsonl", "designs.jsonl"] {
        assert_eq!(fs::read(a.path().join(file)).unwrap(), fs::read(b.path().join(file)).unwrap(), "{file}");
    }
    assert_ne!(fs::read(a.path().join("designs.jsonl")).unwrap(), fs::read(c.path().join("designs.jsonl")).unwrap());
    assert_eq!(fs::read_to_string(a.path().join("designs.jsonl")).unwrap().lines().count(), 5 * 12);
}

#[test]
fn eval_prints_csv_report() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "1");
    let designs = dir.path().join("designs.jsonl");
    let args = ["eval", "--k", "3", "--trials", "2", "--seed", "7", "--format", "csv", "--corpus-dir"];
    let out = rosid(&args, &[dir.path(), Path::new("--designs"), &designs]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "modality,signal,mean_random,mean_clustered,delta,n,p");
    assert_eq!(lines.len(), 1 + 16);
    assert!(lines[16].starts_with("all,all,"));
    assert!(lines.iter().skip(1).all(|l| l.split(',').nth(5) == Some("5")));

    let again = rosid(&args, &[dir.path(), Path::new("--designs"), &designs]);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), text);
}

#[test]
fn eval_rejects_too_few_users() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "1");
    let designs = dir.path().join("designs.jsonl");
    let out = rosid(&["eval", "--k", "5", "--corpus-dir"], &[dir.path(), Path::new("--designs"), &designs]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("at least 6 users"));

    let bad = rosid(&["eval", "--format", "xml", "--corpus-dir"], &[dir.path(), Path::new("--designs"), &designs]);
    assert!(!bad.status.success());
}

#[test]
fn export_handles_empty_and_missing_stores() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("store.jsonl");
    fs::write(&store, "").unwrap();
    let out = rosid(&["export", "--store"], &[&store]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());

    let missing = rosid(&["export", "--store"], &[&dir.path().join("missing.jsonl")]);
    assert!(!missing.status.success());

    fs::write(&store, "{broken\n").unwrap();
    let corrupt = rosid(&["export", "--store"], &[&store]);
    assert!(!corrupt.status.success());
    assert!(String::from_utf8_lossy(&corrupt.stderr).contains("line 1"));
}
