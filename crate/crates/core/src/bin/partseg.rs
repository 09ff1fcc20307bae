use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use partseg::gfa::{GfaConfig, GfaOrder};
use partseg::io::write_points;
use partseg::pipeline::{
    read_manifest, run_backproject, run_eval, run_gfa, run_pipeline, run_render, run_segment, run_synth_views,
    FeatureSource, Naming, RenderOptions, RunConfig, SynthViewOptions, THREADS_ENV,
};
use partseg::render::{DepthPolarity, RenderMode, ViewLayout};
use partseg::segment::SegmentConfig;
use partseg::synth::{synth_cloud, SynthShape, SynthSpec};
use partseg::{Error, Result};

#[derive(Parser)]
#[command(name = "partseg", version, about = "Zero-shot point-cloud part segmentation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Render a points file into a view directory.
    Render {
        #[arg(long)]
        points: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        render: RenderArgs,
    },
    /// Lift per-view feature grids onto the points.
    Backproject {
        #[arg(long)]
        render: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20)]
        fill_neighbors: usize,
    },
    /// Refine point features with geometric aggregation.
    Gfa {
        #[arg(long)]
        points: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        gfa: GfaArgs,
    },
    /// Cluster refined features and name the clusters.
    Segment {
        #[arg(long)]
        render: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        parts: usize,
        /// Directory of per-view similarity maps used as anchors.
        #[arg(long, conflicts_with = "oracle")]
        similarity: Option<PathBuf>,
        /// Name clusters by best IoU against the ground truth.
        #[arg(long)]
        oracle: bool,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        segment: SegmentArgs,
    },
    /// Score predictions listed in a manifest; prints a TSV report.
    Eval {
        #[arg(long)]
        manifest: PathBuf,
        /// Also write the report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every stage for one object.
    Pipeline {
        /// JSON run configuration; flags override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        overrides: PipelineOverrides,
    },
    /// Generate synthetic fixtures.
    #[command(subcommand)]
    Synth(SynthCommand),
}

#[derive(Subcommand)]
enum SynthCommand {
    /// Write a labelled synthetic cloud.
    Cloud {
        #[arg(long, default_value = "segmented_bar")]
        shape: SynthShape,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        parts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Paint per-view features and similarity maps from ground truth.
    Views {
        #[arg(long)]
        render: PathBuf,
        #[arg(long)]
        parts: usize,
        #[arg(long)]
        features_out: PathBuf,
        #[arg(long)]
        similarity_out: PathBuf,
        #[arg(long, default_value_t = 8)]
        dim: usize,
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0.5)]
        margin: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long, default_value = "sphere48")]
    views: ViewLayout,
    #[arg(long, default_value_t = 0.01)]
    point_radius: f64,
    #[arg(long, default_value_t = 224)]
    canvas: usize,
    #[arg(long, default_value = "depth")]
    mode: RenderMode,
    #[arg(long, default_value = "near_light")]
    polarity: DepthPolarity,
    /// Keep this many points after rendering (0 keeps all).
    #[arg(long, default_value_t = 10_000)]
    sample_points: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write PGM/PPM images.
    #[arg(long)]
    dump_images: bool,
}

#[derive(Args)]
struct GfaArgs {
    #[arg(long, default_value_t = 256)]
    superpoints: usize,
    #[arg(long, default_value_t = 10)]
    k_spatial: usize,
    #[arg(long, default_value_t = 90)]
    k_semantic: usize,
    #[arg(long, default_value_t = 3)]
    k_prime: usize,
    #[arg(long)]
    weighted: bool,
    #[arg(long, default_value = "spatial_first")]
    order: GfaOrder,
    #[arg(long, default_value_t = 0)]
    fps_start: usize,
}

#[derive(Args)]
struct SegmentArgs {
    #[arg(long, default_value_t = 0)]
    kmeans_seed: u64,
    #[arg(long, default_value_t = 0)]
    sample_seed: u64,
    /// Anchor-sample size (0 anchors every point).
    #[arg(long, default_value_t = 2048)]
    anchor_sample: usize,
    #[arg(long)]
    cluster_on_sample: bool,
}

/// Flags for `pipeline`; each one replaces the matching config field.
#[derive(Args)]
struct PipelineOverrides {
    #[arg(long)]
    points: Option<PathBuf>,
    #[arg(long)]
    work_dir: Option<PathBuf>,
    #[arg(long)]
    parts: Option<usize>,
    #[arg(long)]
    views: Option<ViewLayout>,
    #[arg(long)]
    camera_radius: Option<f64>,
    #[arg(long)]
    fov: Option<f64>,
    #[arg(long)]
    point_radius: Option<f64>,
    #[arg(long)]
    canvas: Option<usize>,
    #[arg(long)]
    mode: Option<RenderMode>,
    #[arg(long)]
    polarity: Option<DepthPolarity>,
    /// Points kept after rendering (0 keeps all).
    #[arg(long)]
    sample_points: Option<usize>,
    #[arg(long)]
    dump_images: bool,
    /// Directory of exported per-view features (replaces synthetic ones).
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long, requires = "features")]
    similarity: Option<PathBuf>,
    #[arg(long)]
    fill_neighbors: Option<usize>,
    #[arg(long)]
    superpoints: Option<usize>,
    #[arg(long)]
    k_spatial: Option<usize>,
    #[arg(long)]
    k_semantic: Option<usize>,
    #[arg(long)]
    k_prime: Option<usize>,
    #[arg(long)]
    weighted: bool,
    #[arg(long)]
    order: Option<GfaOrder>,
    /// Anchor-sample size (0 anchors every point).
    #[arg(long)]
    anchor_sample: Option<usize>,
    #[arg(long)]
    cluster_on_sample: bool,
    #[arg(long)]
    oracle: bool,
    #[arg(long)]
    fps_start: Option<usize>,
    #[arg(long)]
    kmeans_seed: Option<u64>,
    #[arg(long)]
    sampling_seed: Option<u64>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl PipelineOverrides {
    fn apply(self, cfg: &mut RunConfig) {
        set(&mut cfg.points, self.points);
        set(&mut cfg.work_dir, self.work_dir);
        if self.parts.is_some() {
            cfg.parts = self.parts;
        }
        let r = &mut cfg.render;
        set(&mut r.views, self.views);
        set(&mut r.camera_radius, self.camera_radius);
        set(&mut r.fov_deg, self.fov);
        set(&mut r.point_radius, self.point_radius);
        set(&mut r.canvas, self.canvas);
        set(&mut r.mode, self.mode);
        set(&mut r.depth_polarity, self.polarity);
        set(&mut r.sample_points, self.sample_points.map(nonzero));
        r.dump_images |= self.dump_images;
        if let Some(features) = self.features {
            cfg.features = FeatureSource::Dir {
                features,
                similarity: self.similarity,
            };
        }
        set(&mut cfg.fill_neighbors, self.fill_neighbors);
        let g = &mut cfg.gfa;
        set(&mut g.m_superpoints, self.superpoints);
        set(&mut g.k_spatial, self.k_spatial);
        set(&mut g.k_semantic, self.k_semantic);
        set(&mut g.k_prime, self.k_prime);
        g.weight_by_distance |= self.weighted;
        set(&mut g.order, self.order);
        set(&mut cfg.segment.anchor_sample, self.anchor_sample.map(nonzero));
        cfg.segment.cluster_on_sample |= self.cluster_on_sample;
        cfg.oracle_labels |= self.oracle;
        set(&mut cfg.seeds.fps_start, self.fps_start);
        set(&mut cfg.seeds.kmeans, self.kmeans_seed);
        set(&mut cfg.seeds.sampling, self.sampling_seed);
    }
}

fn nonzero(n: usize) -> Option<usize> {
    (n > 0).then_some(n)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Render { points, out, render } => {
            let opts = RenderOptions {
                views: render.views,
                canvas: render.canvas,
                point_radius: render.point_radius,
                mode: render.mode,
                depth_polarity: render.polarity,
                sample_points: nonzero(render.sample_points),
                sampling_seed: render.seed,
                dump_images: render.dump_images,
                ..RenderOptions::default()
            };
            let art = run_render(&points, &out, &opts)?;
            eprintln!(
                "rendered {} views of {} points",
                art.meta.cameras.len(),
                art.cloud.len()
            );
        }
        Command::Backproject {
            render,
            features,
            out,
            fill_neighbors,
        } => {
            run_backproject(&render, &features, &out, fill_neighbors)?;
        }
        Command::Gfa {
            points,
            features,
            out,
            gfa,
        } => {
            let cfg = GfaConfig {
                m_superpoints: gfa.superpoints,
                k_spatial: gfa.k_spatial,
                k_semantic: gfa.k_semantic,
                k_prime: gfa.k_prime,
                weight_by_distance: gfa.weighted,
                order: gfa.order,
                fps_start: gfa.fps_start,
                ..GfaConfig::default()
            };
            run_gfa(&points, &features, &out, &cfg)?;
        }
        Command::Segment {
            render,
            features,
            parts,
            similarity,
            oracle,
            out,
            segment,
        } => {
            let cfg = SegmentConfig {
                kmeans_seed: segment.kmeans_seed,
                sample_seed: segment.sample_seed,
                anchor_sample: nonzero(segment.anchor_sample),
                cluster_on_sample: segment.cluster_on_sample,
                ..SegmentConfig::default()
            };
            let naming = match (&similarity, oracle) {
                (_, true) => Naming::Oracle,
                (Some(dir), false) => Naming::Similarity(dir),
                (None, false) => Naming::None,
            };
            run_segment(&render, &features, naming, parts, &cfg, &out)?;
        }
        Command::Eval { manifest, out } => {
            let (_, report) = run_eval(&read_manifest(&manifest)?)?;
            let tsv = report.to_tsv();
            print!("{tsv}");
            if let Some(path) = out {
                std::fs::write(&path, tsv).map_err(|e| Error::Io { path, source: e })?;
            }
        }
        Command::Pipeline { config, overrides } => {
            let mut cfg = match &config {
                Some(path) => RunConfig::load(path)?,
                None => RunConfig::default(),
            };
            overrides.apply(&mut cfg);
            let out = run_pipeline(&cfg)?;
            if let Some(report) = out.report {
                print!("{}", report.to_tsv());
            }
        }
        Command::Synth(SynthCommand::Cloud {
            shape,
            n,
            parts,
            seed,
            out,
        }) => {
            let cloud = synth_cloud(&SynthSpec {
                shape,
                n_points: n,
                p_parts: parts,
                noise_sigma: 0.0,
                seed,
            })?;
            write_points(&out, &cloud)?;
        }
        Command::Synth(SynthCommand::Views {
            render,
            parts,
            features_out,
            similarity_out,
            dim,
            sigma,
            margin,
            seed,
        }) => {
            let opts = SynthViewOptions {
                dim,
                sigma,
                margin,
                seed,
            };
            run_synth_views(&render, &features_out, &similarity_out, parts, &opts)?;
        }
    }
    Ok(())
}

fn init_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value.parse().map_err(|_| Error::Config {
        field: THREADS_ENV.into(),
        reason: format!("`{value}` is not a thread count"),
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config {
            field: THREADS_ENV.into(),
            reason: e.to_string(),
        })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match init_threads().and_then(|()| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("partseg: {e}");
            ExitCode::FAILURE
        }
    }
}
