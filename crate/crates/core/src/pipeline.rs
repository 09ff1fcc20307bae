//! File-based stage runners.
//!
//! Every stage reads and writes plain artifacts so stages can be run one at a
//! time (the `partseg` subcommands) or chained by [`run_pipeline`], which
//! calls the very same functions.
//!
//! Render directory layout:
//!
//! ```text
//! points.txt         normalized (and possibly subsampled) cloud
//! corr.ftns          R × N flat pixel index of each point per view, or -1
//! owners.ftns        R × H × W owning point per pixel, or -1
//! cameras.json       render settings and cameras
//! views/view_000.ftns, ...   H × W × C rendered images
//! views/view_000.pgm, ...    optional debug dumps (PGM/PPM)
//! ```
//!
//! Feature and similarity directories hold one `view_XXX.ftns` per view with
//! shape `h × w × d` (any resolution; resampled to the canvas as needed).
//! A similarity directory may carry `labels.txt`, one part name per line.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{object_miou, EvalRecord, Report};
use crate::featmap::{fill_hidden, Backprojector, FeatureGrid, DEFAULT_FILL_NEIGHBORS};
use crate::geometry::{normalize_unit_sphere, PointCloud};
use crate::gfa::{gfa, GfaConfig};
use crate::io::{
    read_ftns, read_labels, read_points, write_ftns, write_labels, write_points, write_view_image, Tensor,
};
use crate::matrix::Matrix;
use crate::render::{
    render_all, viewpoint_set, Camera, CorrespondenceMap, DepthPolarity, RenderMode, RenderedView, ViewLayout,
    DEFAULT_CAMERA_RADIUS, DEFAULT_CANVAS, DEFAULT_FOV_DEG,
};
use crate::segment::{
    anchor_subset, anchors_from_scores, oracle_match, segment_with_anchors, SegmentConfig, Segmentation,
};
use crate::synth::{default_label_names, paint_feature_grids, synth_features, synth_sim_maps};

pub const DEFAULT_SAMPLE_POINTS: usize = 10_000;
/// Environment variable overriding the worker-thread count.
pub const THREADS_ENV: &str = "PARTSEG_THREADS";

pub fn view_file(dir: &Path, view: usize) -> PathBuf {
    dir.join(format!("view_{view:03}.ftns"))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderOptions {
    pub views: ViewLayout,
    pub camera_radius: f64,
    pub fov_deg: f64,
    pub canvas: usize,
    pub point_radius: f64,
    pub mode: RenderMode,
    pub depth_polarity: DepthPolarity,
    /// Keep at most this many points after rendering; `None` keeps all.
    pub sample_points: Option<usize>,
    #[serde(skip)]
    pub sampling_seed: u64,
    pub dump_images: bool,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            views: ViewLayout::Sphere48,
            camera_radius: DEFAULT_CAMERA_RADIUS,
            fov_deg: DEFAULT_FOV_DEG,
            canvas: DEFAULT_CANVAS,
            point_radius: 0.01,
            mode: RenderMode::Depth,
            depth_polarity: DepthPolarity::NearLight,
            sample_points: Some(DEFAULT_SAMPLE_POINTS),
            sampling_seed: 0,
            dump_images: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderMeta {
    pub views: ViewLayout,
    pub point_radius: f64,
    pub mode: RenderMode,
    pub depth_polarity: DepthPolarity,
    pub source_points: usize,
    pub points: usize,
    pub cameras: Vec<Camera>,
}

/// A render directory loaded back into memory (images excluded).
#[derive(Debug, Clone)]
pub struct RenderArtifacts {
    pub cloud: PointCloud,
    pub corr: CorrespondenceMap,
    pub meta: RenderMeta,
}

fn corr_to_tensor(corr: &CorrespondenceMap) -> Result<Tensor> {
    let mut data = Vec::with_capacity(corr.n_views() * corr.n_points());
    for r in 0..corr.n_views() {
        data.extend(corr.view_pixels(r).iter().map(|&k| k as f32));
    }
    Tensor::new(vec![corr.n_views(), corr.n_points()], data)
}

fn index_from_f32(v: f32, path: &Path) -> Result<i64> {
    if v.fract() != 0.0 || v < -1.0 {
        return Err(Error::format(path, format!("{v} is not an index")));
    }
    Ok(v as i64)
}

/// Read a correspondence file; `shapes` gives each view's canvas.
pub fn read_correspondences(path: &Path, shapes: Vec<(usize, usize)>) -> Result<CorrespondenceMap> {
    let t = read_ftns(path)?;
    if t.dims.len() != 2 || t.dims[0] != shapes.len() {
        return Err(Error::format(
            path,
            format!("expected shape [{}, N], got {:?}", shapes.len(), t.dims),
        ));
    }
    let n = t.dims[1];
    let pixels = t
        .data
        .chunks(n.max(1))
        .take(shapes.len())
        .map(|c| c.iter().map(|&v| index_from_f32(v, path)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let pixels = if n == 0 { vec![Vec::new(); shapes.len()] } else { pixels };
    CorrespondenceMap::new(n, shapes, pixels).map_err(|e| Error::format(path, e.to_string()))
}

/// Render a points file into `out_dir`.
pub fn run_render(points: &Path, out_dir: &Path, opts: &RenderOptions) -> Result<RenderArtifacts> {
    let cloud = normalize_unit_sphere(&read_points(points)?)?;
    let cameras: Vec<Camera> = viewpoint_set(opts.views, opts.camera_radius)?
        .into_iter()
        .map(|c| c.with_canvas(opts.canvas, opts.canvas).with_fov(opts.fov_deg))
        .collect();
    for c in &cameras {
        c.validate()?;
    }
    let (mut views, corr) = render_all(&cloud, &cameras, opts.point_radius, opts.mode, opts.depth_polarity)?;

    // subsample after rendering; owners of dropped points become background
    // in the owner maps so that indices stay within the kept cloud
    let (cloud_out, corr) = match opts.sample_points {
        Some(s) if s < cloud.len() => {
            let keep = anchor_subset(cloud.len(), Some(s), opts.sampling_seed);
            let mut new_index = vec![-1i32; cloud.len()];
            for (j, &i) in keep.iter().enumerate() {
                new_index[i] = j as i32;
            }
            for v in &mut views {
                for o in &mut v.owner {
                    if *o >= 0 {
                        *o = new_index[*o as usize];
                    }
                }
            }
            (cloud.select(&keep)?, corr.select_points(&keep))
        }
        _ => (cloud.clone(), corr),
    };

    let views_dir = out_dir.join("views");
    create_dir(&views_dir)?;
    write_points(out_dir.join("points.txt"), &cloud_out)?;
    write_ftns(out_dir.join("corr.ftns"), &corr_to_tensor(&corr)?)?;
    let mut owners = Vec::with_capacity(views.len() * opts.canvas * opts.canvas);
    for v in &views {
        owners.extend(v.owner.iter().map(|&o| o as f32));
        let img = Tensor::new(vec![v.height(), v.width(), v.channels], v.image.clone())?;
        let r = owners.len() / (v.height() * v.width()) - 1;
        write_ftns(view_file(&views_dir, r), &img)?;
        if opts.dump_images {
            let ext = if v.channels == 3 { "ppm" } else { "pgm" };
            write_view_image(views_dir.join(format!("view_{r:03}.{ext}")), v)?;
        }
    }
    write_ftns(
        out_dir.join("owners.ftns"),
        &Tensor::new(vec![views.len(), opts.canvas, opts.canvas], owners)?,
    )?;
    let meta = RenderMeta {
        views: opts.views,
        point_radius: opts.point_radius,
        mode: opts.mode,
        depth_polarity: opts.depth_polarity,
        source_points: cloud.len(),
        points: cloud_out.len(),
        cameras,
    };
    let json = serde_json::to_string_pretty(&meta).expect("render meta serializes");
    write_text(&out_dir.join("cameras.json"), &(json + "\n"))?;
    Ok(RenderArtifacts {
        cloud: cloud_out,
        corr,
        meta,
    })
}

pub fn load_render(dir: &Path) -> Result<RenderArtifacts> {
    let meta_path = dir.join("cameras.json");
    let meta: RenderMeta =
        serde_json::from_str(&read_text(&meta_path)?).map_err(|e| Error::format(&meta_path, e.to_string()))?;
    let cloud = read_points(dir.join("points.txt"))?;
    let shapes = meta.cameras.iter().map(|c| (c.height, c.width)).collect();
    let corr = read_correspondences(&dir.join("corr.ftns"), shapes)?;
    if corr.n_points() != cloud.len() {
        return Err(Error::format(
            dir.join("corr.ftns"),
            format!("{} points, points.txt has {}", corr.n_points(), cloud.len()),
        ));
    }
    Ok(RenderArtifacts { cloud, corr, meta })
}

/// Owner maps of a render directory, as views without images.
pub fn load_owner_views(dir: &Path, meta: &RenderMeta) -> Result<Vec<RenderedView>> {
    let path = dir.join("owners.ftns");
    let t = read_ftns(&path)?;
    let r = meta.cameras.len();
    if t.dims.len() != 3 || t.dims[0] != r {
        return Err(Error::format(&path, format!("unexpected shape {:?}", t.dims)));
    }
    let plane = t.dims[1] * t.dims[2];
    meta.cameras
        .iter()
        .enumerate()
        .map(|(i, cam)| {
            if (cam.height, cam.width) != (t.dims[1], t.dims[2]) {
                return Err(Error::format(&path, "owner map size differs from the canvas"));
            }
            let owner = t.data[i * plane..(i + 1) * plane]
                .iter()
                .map(|&v| index_from_f32(v, &path).map(|o| o as i32))
                .collect::<Result<Vec<_>>>()?;
            Ok(RenderedView {
                camera: cam.clone(),
                image: Vec::new(),
                channels: 0,
                owner,
            })
        })
        .collect()
}

fn grid_to_tensor(g: &FeatureGrid) -> Result<Tensor> {
    Tensor::new(vec![g.height(), g.width(), g.dim()], g.data().to_vec())
}

pub fn read_grid(path: &Path, view: usize) -> Result<FeatureGrid> {
    let t = read_ftns(path)?;
    match t.dims[..] {
        [h, w, d] => FeatureGrid::new(h, w, d, t.data)
            .map(|g| g.with_view(view))
            .map_err(|e| Error::format(path, e.to_string())),
        [h, w] => FeatureGrid::new(h, w, 1, t.data)
            .map(|g| g.with_view(view))
            .map_err(|e| Error::format(path, e.to_string())),
        _ => Err(Error::format(
            path,
            format!("expected an h x w x d grid, got {:?}", t.dims),
        )),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthViewOptions {
    pub dim: usize,
    pub sigma: f64,
    pub margin: f64,
    pub seed: u64,
}

impl Default for SynthViewOptions {
    fn default() -> Self {
        Self {
            dim: 8,
            sigma: 0.0,
            margin: 0.5,
            seed: 0,
        }
    }
}

/// Write synthetic per-view feature grids and similarity maps for a render
/// directory whose cloud carries ground-truth labels.
pub fn run_synth_views(
    render_dir: &Path,
    features_dir: &Path,
    similarity_dir: &Path,
    p: usize,
    opts: &SynthViewOptions,
) -> Result<()> {
    let art = load_render(render_dir)?;
    let gt = art
        .cloud
        .gt_labels()
        .ok_or_else(|| Error::input("synthetic views need ground-truth labels in points.txt"))?;
    let views = load_owner_views(render_dir, &art.meta)?;
    let feats = synth_features(gt, opts.dim, opts.sigma, opts.seed)?;
    create_dir(features_dir)?;
    for g in paint_feature_grids(&views, &feats)? {
        write_ftns(view_file(features_dir, g.source_view), &grid_to_tensor(&g)?)?;
    }
    let sim = synth_sim_maps(&views, gt, p, opts.margin)?;
    create_dir(similarity_dir)?;
    for g in &sim.maps {
        write_ftns(view_file(similarity_dir, g.source_view), &grid_to_tensor(g)?)?;
    }
    write_text(&similarity_dir.join("labels.txt"), &(sim.label_names.join("\n") + "\n"))?;
    Ok(())
}

/// Average per-view grids over the correspondences; returns `N × d` scores
/// and the hidden mask.
pub fn backproject_dir(corr: &CorrespondenceMap, grid_dir: &Path) -> Result<(Matrix, Vec<bool>)> {
    let mut acc = Backprojector::new(corr);
    for r in 0..corr.n_views() {
        acc.add_view(r, &read_grid(&view_file(grid_dir, r), r)?)?;
    }
    let (f, hidden) = acc.finish()?;
    Ok((f.data, hidden))
}

fn matrix_to_tensor(m: &Matrix) -> Result<Tensor> {
    Tensor::new(
        vec![m.rows(), m.cols()],
        m.as_slice().iter().map(|&v| v as f32).collect(),
    )
}

pub fn read_matrix(path: &Path) -> Result<Matrix> {
    let t = read_ftns(path)?;
    match t.dims[..] {
        [n, d] => Matrix::from_vec(n, d, t.data.into_iter().map(f64::from).collect()),
        _ => Err(Error::format(
            path,
            format!("expected an N x d tensor, got {:?}", t.dims),
        )),
    }
}

/// Lift per-view features onto the points and fill hidden points.
pub fn run_backproject(render_dir: &Path, features_dir: &Path, out: &Path, fill_neighbors: usize) -> Result<Matrix> {
    let art = load_render(render_dir)?;
    let (feats, hidden) = backproject_dir(&art.corr, features_dir)?;
    let feats = crate::featmap::PointFeatures::new(feats, crate::featmap::Provenance::Backprojected)?;
    let filled = fill_hidden(art.cloud.positions(), &feats, &hidden, fill_neighbors)?;
    write_ftns(out, &matrix_to_tensor(&filled.data)?)?;
    Ok(filled.data)
}

pub fn run_gfa(points: &Path, features: &Path, out: &Path, cfg: &GfaConfig) -> Result<Matrix> {
    let cloud = read_points(points)?;
    let feats = read_matrix(features)?;
    let refined = gfa(cloud.positions(), &feats, cfg)?;
    write_ftns(out, &matrix_to_tensor(&refined)?)?;
    Ok(refined)
}

/// How clusters get their names.
#[derive(Debug, Clone, PartialEq)]
pub enum Naming<'a> {
    /// Label-free: clusters only.
    None,
    /// Anchors from a similarity directory.
    Similarity(&'a Path),
    /// Optimal IoU matching against the ground truth (upper bound).
    Oracle,
}

/// Cluster the refined features and name the clusters. Writes
/// `clusters.txt` (0-based ids) and, when named, `pred.txt` into `out_dir`.
pub fn run_segment(
    render_dir: &Path,
    features: &Path,
    naming: Naming<'_>,
    p: usize,
    cfg: &SegmentConfig,
    out_dir: &Path,
) -> Result<Segmentation> {
    let art = load_render(render_dir)?;
    let feats = read_matrix(features)?;
    if feats.rows() != art.cloud.len() {
        return Err(Error::format(
            features,
            format!("{} feature rows for {} points", feats.rows(), art.cloud.len()),
        ));
    }
    let seg = match naming {
        Naming::None => segment_with_anchors(&feats, None, p, cfg)?,
        Naming::Similarity(dir) => {
            let labels_path = dir.join("labels.txt");
            if labels_path.exists() {
                let names: Vec<String> = read_text(&labels_path)?
                    .lines()
                    .filter(|l| !l.trim().is_empty())
                    .map(str::to_string)
                    .collect();
                if names.len() != p {
                    return Err(Error::format(
                        &labels_path,
                        format!("{} label names for {p} parts", names.len()),
                    ));
                }
            }
            let (scores, hidden) = backproject_dir(&art.corr, dir)?;
            if scores.cols() != p {
                return Err(Error::input(format!(
                    "similarity maps in {} carry {} labels, expected {p}",
                    dir.display(),
                    scores.cols()
                )));
            }
            let subset = anchor_subset(art.cloud.len(), cfg.anchor_sample, cfg.sample_seed);
            let anchors = anchors_from_scores(&scores, &hidden, art.cloud.positions(), &subset)?;
            segment_with_anchors(&feats, Some(&anchors), p, cfg)?
        }
        Naming::Oracle => {
            let gt = art
                .cloud
                .gt_labels()
                .ok_or_else(|| Error::input("oracle naming needs ground-truth labels"))?;
            let mut seg = segment_with_anchors(&feats, None, p, cfg)?;
            seg.label_of_cluster = Some(oracle_match(&seg.cluster_of, gt, p)?);
            seg
        }
    };
    create_dir(out_dir)?;
    let clusters: String = seg.cluster_of.iter().map(|c| format!("{c}\n")).collect();
    write_text(&out_dir.join("clusters.txt"), &clusters)?;
    if let Some(labels) = seg.final_labels() {
        write_labels(out_dir.join("pred.txt"), &labels)?;
    }
    Ok(seg)
}

/// One object to evaluate.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalEntry {
    pub category: String,
    pub pred: PathBuf,
    pub gt: PathBuf,
    pub parts: Option<usize>,
}

/// Read a manifest: `category<TAB>pred<TAB>gt[<TAB>parts]` per line, paths
/// relative to the manifest. `gt` may be a labels file or a points file.
pub fn read_manifest(path: &Path) -> Result<Vec<EvalEntry>> {
    let base = path.parent().unwrap_or(Path::new("."));
    read_text(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| {
            let cols: Vec<&str> = l.split('\t').map(str::trim).collect();
            if cols.len() < 3 || cols.len() > 4 {
                return Err(Error::format(path, format!("line {}: expected 3 or 4 columns", i + 1)));
            }
            let parts = match cols.get(3) {
                Some(s) => Some(
                    s.parse()
                        .map_err(|_| Error::format(path, format!("line {}: bad part count `{s}`", i + 1)))?,
                ),
                None => None,
            };
            Ok(EvalEntry {
                category: cols[0].to_string(),
                pred: base.join(cols[1]),
                gt: base.join(cols[2]),
                parts,
            })
        })
        .collect()
}

fn read_gt(path: &Path) -> Result<Vec<u32>> {
    // a points file has several columns per line, a labels file one
    let first = read_text(path)?
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim().to_string())
        .find(|l| !l.is_empty());
    match first {
        Some(l) if l.split_whitespace().count() > 1 => read_points(path)?
            .gt_labels()
            .map(<[u32]>::to_vec)
            .ok_or_else(|| Error::format(path, "points file has no labels")),
        _ => read_labels(path),
    }
}

pub fn run_eval(entries: &[EvalEntry]) -> Result<(Vec<EvalRecord>, Report)> {
    let records = entries
        .iter()
        .map(|e| {
            let pred = read_labels(&e.pred)?;
            let gt = read_gt(&e.gt)?;
            let p = e
                .parts
                .unwrap_or_else(|| pred.iter().chain(&gt).copied().max().unwrap_or(1) as usize);
            object_miou(&pred, &gt, p, &e.category)
        })
        .collect::<Result<Vec<_>>>()?;
    let report = Report::from_records(&records)?;
    Ok((records, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    pub fps_start: usize,
    pub kmeans: u64,
    pub sampling: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FeatureSource {
    /// Per-view grids written by an external exporter.
    Dir {
        features: PathBuf,
        similarity: Option<PathBuf>,
    },
    /// Synthetic grids painted from ground-truth labels.
    Synth(SynthViewOptions),
}

impl Default for FeatureSource {
    fn default() -> Self {
        FeatureSource::Synth(SynthViewOptions::default())
    }
}

/// Everything `pipeline` needs. Loaded from JSON; every field has a default
/// except the input cloud.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub points: PathBuf,
    pub work_dir: PathBuf,
    /// Number of target parts; inferred from ground-truth labels if absent.
    pub parts: Option<usize>,
    pub render: RenderOptions,
    pub features: FeatureSource,
    pub fill_neighbors: usize,
    pub gfa: GfaConfig,
    pub segment: SegmentConfig,
    pub seeds: Seeds,
    /// Name clusters by optimal IoU against the ground truth instead of
    /// similarity anchors.
    pub oracle_labels: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            points: PathBuf::new(),
            work_dir: PathBuf::from("partseg-out"),
            parts: None,
            render: RenderOptions::default(),
            features: FeatureSource::default(),
            fill_neighbors: DEFAULT_FILL_NEIGHBORS,
            gfa: GfaConfig::default(),
            segment: SegmentConfig::default(),
            seeds: Seeds::default(),
            oracle_labels: false,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config {
            field: format!("line {} column {}", e.line(), e.column()),
            reason: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config { field, reason } => Error::Config {
                field: format!("{} ({field})", path.display()),
                reason,
            },
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |field: &str, reason: String| Error::Config {
            field: field.to_string(),
            reason,
        };
        if !self.points.is_file() {
            return Err(cfg_err("points", format!("{} does not exist", self.points.display())));
        }
        if let FeatureSource::Dir { features, similarity } = &self.features {
            if !features.is_dir() {
                return Err(cfg_err(
                    "features.dir.features",
                    format!("{} is not a directory", features.display()),
                ));
            }
            if let Some(s) = similarity {
                if !s.is_dir() {
                    return Err(cfg_err(
                        "features.dir.similarity",
                        format!("{} is not a directory", s.display()),
                    ));
                }
            }
        }
        if self.render.canvas == 0 {
            return Err(cfg_err("render.canvas", "must be at least 1".into()));
        }
        if !(self.render.point_radius >= 0.0) {
            return Err(cfg_err("render.point_radius", "must be >= 0".into()));
        }
        if self.fill_neighbors == 0 {
            return Err(cfg_err("fill_neighbors", "must be at least 1".into()));
        }
        if self.parts == Some(0) {
            return Err(cfg_err("parts", "must be at least 1".into()));
        }
        Ok(())
    }

    fn with_seeds(&self) -> (RenderOptions, GfaConfig, SegmentConfig) {
        let mut render = self.render.clone();
        render.sampling_seed = self.seeds.sampling;
        let mut gfa = self.gfa.clone();
        gfa.fps_start = self.seeds.fps_start;
        let mut seg = self.segment.clone();
        seg.kmeans_seed = self.seeds.kmeans;
        seg.sample_seed = self.seeds.sampling;
        (render, gfa, seg)
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub segmentation: Segmentation,
    pub report: Option<Report>,
}

/// Render, lift, refine, segment and (with ground truth) evaluate one
/// object, leaving every intermediate artifact in `work_dir`.
pub fn run_pipeline(cfg: &RunConfig) -> Result<PipelineOutput> {
    cfg.validate()?;
    let (render_opts, gfa_cfg, seg_cfg) = cfg.with_seeds();
    let work = &cfg.work_dir;
    let render_dir = work.join("render");
    create_dir(&render_dir)?;
    let art = run_render(&cfg.points, &render_dir, &render_opts)?;

    let p = match (cfg.parts, art.cloud.gt_labels()) {
        (Some(p), _) => p,
        (None, Some(gt)) => gt.iter().copied().max().unwrap_or(1) as usize,
        (None, None) => {
            return Err(Error::Config {
                field: "parts".into(),
                reason: "required when the cloud has no labels".into(),
            })
        }
    };

    let (features_dir, similarity_dir) = match &cfg.features {
        FeatureSource::Dir { features, similarity } => (features.clone(), similarity.clone()),
        FeatureSource::Synth(opts) => {
            let f = work.join("features");
            let s = work.join("similarity");
            run_synth_views(&render_dir, &f, &s, p, opts)?;
            (f, Some(s))
        }
    };

    let lifted = work.join("backprojected.ftns");
    run_backproject(&render_dir, &features_dir, &lifted, cfg.fill_neighbors)?;
    let refined = work.join("gfa.ftns");
    run_gfa(&render_dir.join("points.txt"), &lifted, &refined, &gfa_cfg)?;

    let naming = if cfg.oracle_labels {
        Naming::Oracle
    } else {
        similarity_dir.as_deref().map_or(Naming::None, Naming::Similarity)
    };
    let segmentation = run_segment(&render_dir, &refined, naming, p, &seg_cfg, work)?;

    let report = match (segmentation.final_labels(), art.cloud.gt_labels()) {
        (Some(pred), Some(gt)) => {
            let category = art.cloud.category().unwrap_or("object");
            let record = object_miou(&pred, gt, p, category)?;
            let report = Report::from_records(&[record])?;
            write_text(&work.join("report.tsv"), &report.to_tsv())?;
            Some(report)
        }
        _ => None,
    };
    Ok(PipelineOutput { segmentation, report })
}

/// Label names used when none are supplied.
pub fn label_names_or_default(names: Option<Vec<String>>, p: usize) -> Vec<String> {
    names.unwrap_or_else(|| default_label_names(p))
}
