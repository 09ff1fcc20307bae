//! End-to-end run on a synthetic labelled object: render, paint per-view
//! features from the labels, lift, refine, segment, evaluate.
//!
//! cargo run --release --example synthetic_pipeline -- [shape] [parts] [sigma]

use std::time::Instant;

use partseg::io::write_points;
use partseg::pipeline::{run_pipeline, FeatureSource, RunConfig, SynthViewOptions};
use partseg::synth::{synth_cloud, SynthShape, SynthSpec};

fn main() -> partseg::Result<()> {
    let mut args = std::env::args().skip(1);
    let shape: SynthShape = args.next().as_deref().unwrap_or("segmented_bar").parse()?;
    let parts: usize = args.next().map_or(3, |s| s.parse().expect("part count"));
    let sigma: f64 = args.next().map_or(0.0, |s| s.parse().expect("noise sigma"));

    let dir = std::env::temp_dir().join(format!("partseg-synth-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("temp dir");
    let cloud = synth_cloud(&SynthSpec {
        shape,
        n_points: 10_000,
        p_parts: parts,
        noise_sigma: 0.0,
        seed: 0,
    })?;
    let points = dir.join("object.txt");
    write_points(&points, &cloud)?;

    let cfg = RunConfig {
        points,
        work_dir: dir.join("run"),
        parts: Some(parts),
        features: FeatureSource::Synth(SynthViewOptions {
            sigma,
            ..SynthViewOptions::default()
        }),
        ..RunConfig::default()
    };
    let start = Instant::now();
    let out = run_pipeline(&cfg)?;
    println!("pipeline took {:.1?}", start.elapsed());
    if let Some(report) = out.report {
        print!("{}", report.to_tsv());
    }
    std::fs::remove_dir_all(&dir).ok();
    Ok(())
}
