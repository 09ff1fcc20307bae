//! Every example runs to completion. `cargo test` builds the examples next
//! to the test binaries.

use std::path::PathBuf;
use std::process::Command;

fn example(name: &str) -> PathBuf {
    let deps = std::env::current_exe().unwrap();
    let profile = deps.parent().unwrap().parent().unwrap();
    profile
        .join("examples")
        .join(format!("{name}{}", std::env::consts::EXE_SUFFIX))
}

fn run(name: &str, args: &[&str]) -> String {
    let path = example(name);
    assert!(path.exists(), "{} not built", path.display());
    let out = Command::new(&path).args(args).output().unwrap();
    assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn render_views() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run("render_views", &[tmp.path().to_str().unwrap()]);
    assert_eq!(out.lines().filter(|l| l.starts_with("view ")).count(), 6);
    assert!(tmp.path().join("view_5.pgm").exists());
}

#[test]
fn lift_features() {
    assert!(run("lift_features", &[]).contains("3000 points lifted"));
}

#[test]
fn refine_features() {
    let out = run("refine_features", &[]);
    for line in out.lines().skip(1) {
        let v: Vec<f64> = line.split('\t').skip(1).map(|x| x.parse().unwrap()).collect();
        assert!(v[3] < v[0], "{line}");
    }
}

#[test]
fn segment_parts() {
    let out = run("segment_parts", &[]);
    let miou: f64 = out.lines().last().unwrap().trim_start_matches("mIoU ").parse().unwrap();
    assert!(miou > 0.95, "{out}");
}

#[test]
fn evaluate() {
    assert!(run("evaluate", &[]).contains("overall_class\t3\t"));
}

#[test]
fn file_formats() {
    assert!(run("file_formats", &[]).starts_with("4116 bytes"));
}

#[test]
fn synthetic_pipeline() {
    let out = run("synthetic_pipeline", &["lamp_like", "4", "0"]);
    assert!(out.contains("overall_instance\t1\t100.0\t100.0"), "{out}");
}
