use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use partseg::io::read_ftns;

fn partseg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_partseg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = partseg(args);
    assert!(
        out.status.success(),
        "partseg {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fails(args: &[&str]) -> String {
    let out = partseg(args);
    assert!(!out.status.success(), "partseg {args:?} unexpectedly succeeded");
    String::from_utf8(out.stderr).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth_object(dir: &Path, n: &str, parts: &str) -> std::path::PathBuf {
    let points = dir.join("object.txt");
    ok(&[
        "synth",
        "cloud",
        "--shape",
        "lamp_like",
        "--n",
        n,
        "--parts",
        parts,
        "--seed",
        "3",
        "--out",
        s(&points),
    ]);
    points
}

fn same_bytes(a: &Path, b: &Path) {
    assert_eq!(
        fs::read(a).unwrap(),
        fs::read(b).unwrap(),
        "{} and {} differ",
        a.display(),
        b.display()
    );
}

#[test]
fn stages_chained_by_hand_match_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let points = synth_object(dir, "3000", "3");

    let config = dir.join("run.json");
    let json = format!(
        r#"{{
  "points": "{}",
  "work_dir": "{}",
  "parts": 3,
  "render": {{ "views": "pc2_10", "canvas": 96, "point_radius": 0.02, "sample_points": 2000 }},
  "features": {{ "synth": {{ "dim": 6, "sigma": 0.2, "seed": 4 }} }},
  "gfa": {{ "m_superpoints": 128 }},
  "segment": {{ "anchor_sample": 500 }},
  "seeds": {{ "fps_start": 5, "kmeans": 2, "sampling": 9 }}
}}"#,
        s(&points),
        s(&dir.join("pipe"))
    );
    fs::write(&config, json).unwrap();
    let report = ok(&["pipeline", "--config", s(&config)]);
    assert!(report.starts_with("category\tobjects\tmIoU\taIoU\n"));

    let st = dir.join("stages");
    let render = st.join("render");
    ok(&[
        "render",
        "--points",
        s(&points),
        "--out",
        s(&render),
        "--views",
        "pc2_10",
        "--canvas",
        "96",
        "--point-radius",
        "0.02",
        "--sample-points",
        "2000",
        "--seed",
        "9",
    ]);
    ok(&[
        "synth",
        "views",
        "--render",
        s(&render),
        "--parts",
        "3",
        "--features-out",
        s(&st.join("features")),
        "--similarity-out",
        s(&st.join("similarity")),
        "--dim",
        "6",
        "--sigma",
        "0.2",
        "--seed",
        "4",
    ]);
    let lifted = st.join("backprojected.ftns");
    ok(&[
        "backproject",
        "--render",
        s(&render),
        "--features",
        s(&st.join("features")),
        "--out",
        s(&lifted),
    ]);
    let refined = st.join("gfa.ftns");
    ok(&[
        "gfa",
        "--points",
        s(&render.join("points.txt")),
        "--features",
        s(&lifted),
        "--out",
        s(&refined),
        "--superpoints",
        "128",
        "--fps-start",
        "5",
    ]);
    ok(&[
        "segment",
        "--render",
        s(&render),
        "--features",
        s(&refined),
        "--parts",
        "3",
        "--similarity",
        s(&st.join("similarity")),
        "--out",
        s(&st),
        "--kmeans-seed",
        "2",
        "--sample-seed",
        "9",
        "--anchor-sample",
        "500",
    ]);

    let pipe = dir.join("pipe");
    for f in [
        "render/points.txt",
        "render/corr.ftns",
        "render/owners.ftns",
        "render/views/view_007.ftns",
    ] {
        same_bytes(&pipe.join(f), &st.join(f));
    }
    for f in [
        "features/view_003.ftns",
        "similarity/view_009.ftns",
        "backprojected.ftns",
        "gfa.ftns",
        "clusters.txt",
        "pred.txt",
    ] {
        same_bytes(&pipe.join(f), &st.join(f));
    }

    let manifest = dir.join("manifest.tsv");
    fs::write(&manifest, "lamp_like\tstages/pred.txt\tstages/render/points.txt\t3\n").unwrap();
    assert_eq!(ok(&["eval", "--manifest", s(&manifest)]), report);
}

#[test]
fn pipeline_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let points = synth_object(tmp.path(), "2500", "4");
    let run = |name: &str| {
        let work = tmp.path().join(name);
        ok(&[
            "pipeline",
            "--points",
            s(&points),
            "--work-dir",
            s(&work),
            "--views",
            "ortho6",
            "--canvas",
            "64",
        ]);
        work
    };
    let (a, b) = (run("a"), run("b"));
    for f in [
        "backprojected.ftns",
        "gfa.ftns",
        "report.tsv",
        "pred.txt",
        "render/corr.ftns",
    ] {
        same_bytes(&a.join(f), &b.join(f));
    }
}

#[test]
fn sphere48_render_writes_48_views_and_one_correspondence_file() {
    let tmp = tempfile::tempdir().unwrap();
    let points = synth_object(tmp.path(), "1500", "2");
    let out = tmp.path().join("render");
    ok(&[
        "render",
        "--points",
        s(&points),
        "--out",
        s(&out),
        "--views",
        "sphere48",
        "--canvas",
        "224",
        "--dump-images",
    ]);

    let views: Vec<_> = fs::read_dir(out.join("views"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    let count = |ext: &str| views.iter().filter(|p| p.extension().unwrap() == ext).count();
    assert_eq!(count("ftns"), 48);
    assert_eq!(count("pgm"), 48);
    let img = read_ftns(out.join("views/view_047.ftns")).unwrap();
    assert_eq!(img.dims, vec![224, 224, 1]);
    let corr = read_ftns(out.join("corr.ftns")).unwrap();
    assert_eq!(corr.dims, vec![48, 1500]);
    let pgm = fs::read(out.join("views/view_000.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n224 224\n255\n"));
    assert_eq!(pgm.len(), b"P5\n224 224\n255\n".len() + 224 * 224);
}

#[test]
fn eval_of_ground_truth_is_perfect() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(dir.join("a.txt"), "1\n2\n2\n3\n").unwrap();
    fs::write(dir.join("b.txt"), "1\n1\n2\n").unwrap();
    fs::write(
        dir.join("m.tsv"),
        "# category pred gt\nmug\ta.txt\ta.txt\ncar\tb.txt\tb.txt\t2\n",
    )
    .unwrap();
    let tsv = ok(&[
        "eval",
        "--manifest",
        s(&dir.join("m.tsv")),
        "--out",
        s(&dir.join("r.tsv")),
    ]);
    for line in tsv.lines().skip(1) {
        let cols: Vec<&str> = line.split('\t').collect();
        assert_eq!(&cols[2..], ["100.0", "100.0"], "{line}");
    }
    assert_eq!(fs::read_to_string(dir.join("r.tsv")).unwrap(), tsv);
}

#[test]
fn errors_name_the_offending_path_or_field() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();

    let missing = dir.join("nope.txt");
    assert!(fails(&["render", "--points", s(&missing), "--out", s(&dir.join("r"))]).contains(s(&missing)));

    let bad = dir.join("bad.ftns");
    fs::write(&bad, b"FTNS\x01\x00").unwrap();
    let pts = synth_object(dir, "200", "2");
    let err = fails(&[
        "gfa",
        "--points",
        s(&pts),
        "--features",
        s(&bad),
        "--out",
        s(&dir.join("o.ftns")),
    ]);
    assert!(err.contains(s(&bad)), "{err}");

    let cfg = dir.join("cfg.json");
    fs::write(&cfg, r#"{"render": {"canvaz": 3}}"#).unwrap();
    let err = fails(&["pipeline", "--config", s(&cfg)]);
    assert!(err.contains("canvaz") && err.contains(s(&cfg)), "{err}");

    fs::write(&cfg, format!(r#"{{"points": "{}", "fill_neighbors": 0}}"#, s(&pts))).unwrap();
    assert!(fails(&["pipeline", "--config", s(&cfg)]).contains("fill_neighbors"));

    let mismatch = dir.join("short.txt");
    fs::write(&mismatch, "1\n").unwrap();
    fs::write(dir.join("m.tsv"), "x\tshort.txt\tobject.txt\n").unwrap();
    assert!(fails(&["eval", "--manifest", s(&dir.join("m.tsv"))]).contains("predictions"));
}

#[test]
fn worker_count_comes_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let points = synth_object(tmp.path(), "300", "2");
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_partseg"))
            .args([
                "render",
                "--points",
                s(&points),
                "--out",
                s(&tmp.path().join("r")),
                "--views",
                "ortho6",
            ])
            .env("PARTSEG_THREADS", threads)
            .output()
            .unwrap()
    };
    assert!(run("1").status.success());
    let bad = run("many");
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("PARTSEG_THREADS"));
}
