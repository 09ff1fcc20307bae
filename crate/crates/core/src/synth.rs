//! Seeded synthetic fixtures: labelled point clouds with spatially separated
//! parts, one-hot part features, and similarity maps that agree with the
//! ground truth. They let the whole pipeline run without any image model.
//!
//! All randomness comes from SplitMix64 (64-bit state) seeded with the
//! fixture seed.

use std::f64::consts::TAU;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::featmap::{FeatureGrid, PointFeatures, Provenance};
use crate::geometry::PointCloud;
use crate::matrix::Matrix;
use crate::render::RenderedView;
use crate::segment::SimilarityMaps;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthShape {
    /// `p` boxes laid out along +x with gaps between them.
    SegmentedBar,
    /// Two Gaussian blobs; requires `p = 2`.
    TwoBlobs,
    /// Base, pole, shade and finial stacked along +y; uses the first `p`.
    LampLike,
}

impl FromStr for SynthShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "segmented_bar" => Ok(SynthShape::SegmentedBar),
            "two_blobs" => Ok(SynthShape::TwoBlobs),
            "lamp_like" => Ok(SynthShape::LampLike),
            other => Err(Error::argument(format!("unknown synthetic shape `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub shape: SynthShape,
    pub n_points: usize,
    pub p_parts: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

const BAR_SEGMENT: f64 = 1.0;
const BAR_GAP: f64 = 0.5;
const BAR_HALF_WIDTH: f64 = 0.25;
const BLOB_SIGMA: f64 = 0.4;
const BLOB_OFFSET: f64 = 3.0;

fn box_surface(rng: &mut SplitMix64, lo: [f64; 3], hi: [f64; 3]) -> [f64; 3] {
    let e = [hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]];
    // face pairs perpendicular to x, y, z
    let areas = [e[1] * e[2], e[0] * e[2], e[0] * e[1]];
    let total: f64 = areas.iter().sum();
    let mut t = rng.gen::<f64>() * total;
    let mut axis = 2;
    for (a, &area) in areas.iter().enumerate() {
        if t < area {
            axis = a;
            break;
        }
        t -= area;
    }
    let mut p = [0.0; 3];
    for c in 0..3 {
        p[c] = lo[c] + rng.gen::<f64>() * e[c];
    }
    p[axis] = if rng.gen_bool(0.5) { lo[axis] } else { hi[axis] };
    p
}

/// Closed cylinder around the y axis.
fn cylinder_surface(rng: &mut SplitMix64, radius: f64, y0: f64, y1: f64) -> [f64; 3] {
    let side = TAU * radius * (y1 - y0);
    let caps = 2.0 * std::f64::consts::PI * radius * radius;
    let theta = rng.gen::<f64>() * TAU;
    if rng.gen::<f64>() * (side + caps) < side {
        let y = y0 + rng.gen::<f64>() * (y1 - y0);
        [radius * theta.cos(), y, radius * theta.sin()]
    } else {
        let r = radius * rng.gen::<f64>().sqrt();
        let y = if rng.gen_bool(0.5) { y0 } else { y1 };
        [r * theta.cos(), y, r * theta.sin()]
    }
}

/// Open conical frustum around the y axis, radius `r0` at `y0` to `r1` at `y1`.
fn frustum_surface(rng: &mut SplitMix64, r0: f64, r1: f64, y0: f64, y1: f64) -> [f64; 3] {
    // area density grows linearly with the radius
    let u: f64 = rng.gen();
    let t = if (r1 - r0).abs() < 1e-12 {
        u
    } else {
        ((r0 * r0 + u * (r1 * r1 - r0 * r0)).sqrt() - r0) / (r1 - r0)
    };
    let r = r0 + t * (r1 - r0);
    let theta = rng.gen::<f64>() * TAU;
    [r * theta.cos(), y0 + t * (y1 - y0), r * theta.sin()]
}

fn sphere_surface(rng: &mut SplitMix64, center: [f64; 3], radius: f64) -> [f64; 3] {
    let z: f64 = rng.gen_range(-1.0..1.0);
    let theta = rng.gen::<f64>() * TAU;
    let r = (1.0 - z * z).sqrt();
    [
        center[0] + radius * r * theta.cos(),
        center[1] + radius * z,
        center[2] + radius * r * theta.sin(),
    ]
}

fn part_sizes(n: usize, p: usize) -> Vec<usize> {
    (0..p).map(|j| n / p + usize::from(j < n % p)).collect()
}

/// Labelled cloud with `n_points` points split as evenly as possible into
/// contiguous parts; labels increase along the shape's main axis.
pub fn synth_cloud(spec: &SynthSpec) -> Result<PointCloud> {
    let (n, p) = (spec.n_points, spec.p_parts);
    if p == 0 || p > n {
        return Err(Error::argument(format!("cannot split {n} points into {p} parts")));
    }
    if !(spec.noise_sigma >= 0.0) {
        return Err(Error::argument("noise_sigma must be >= 0"));
    }
    match spec.shape {
        SynthShape::TwoBlobs if p != 2 => {
            return Err(Error::argument("two_blobs has exactly 2 parts"));
        }
        SynthShape::LampLike if p > 4 => {
            return Err(Error::argument("lamp_like has at most 4 parts"));
        }
        _ => {}
    }

    let mut rng = SplitMix64::seed_from_u64(spec.seed);
    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for (j, &count) in part_sizes(n, p).iter().enumerate() {
        for _ in 0..count {
            let pt = match spec.shape {
                SynthShape::SegmentedBar => {
                    let x0 = j as f64 * (BAR_SEGMENT + BAR_GAP);
                    box_surface(
                        &mut rng,
                        [x0, -BAR_HALF_WIDTH, -BAR_HALF_WIDTH],
                        [x0 + BAR_SEGMENT, BAR_HALF_WIDTH, BAR_HALF_WIDTH],
                    )
                }
                SynthShape::TwoBlobs => {
                    let c = if j == 0 { -BLOB_OFFSET } else { BLOB_OFFSET };
                    let mut g = || -> f64 { StandardNormal.sample(&mut rng) };
                    [c + BLOB_SIGMA * g(), BLOB_SIGMA * g(), BLOB_SIGMA * g()]
                }
                SynthShape::LampLike => match j {
                    0 => cylinder_surface(&mut rng, 0.6, 0.0, 0.15),
                    1 => cylinder_surface(&mut rng, 0.08, 0.45, 1.6),
                    2 => frustum_surface(&mut rng, 0.7, 0.35, 1.9, 2.5),
                    _ => sphere_surface(&mut rng, [0.0, 2.85, 0.0], 0.15),
                },
            };
            points.push(pt);
            labels.push(j as u32 + 1);
        }
    }
    let name = match spec.shape {
        SynthShape::SegmentedBar => "segmented_bar",
        SynthShape::TwoBlobs => "two_blobs",
        SynthShape::LampLike => "lamp_like",
    };
    Ok(PointCloud::from_points(&points)?
        .with_labels(labels)?
        .with_category(name))
}

/// One-hot part features in `d` dimensions plus Gaussian noise.
pub fn synth_features(gt_labels: &[u32], d: usize, noise_sigma: f64, seed: u64) -> Result<PointFeatures> {
    let p = gt_labels.iter().copied().max().unwrap_or(0) as usize;
    if d < p || d == 0 {
        return Err(Error::argument(format!(
            "feature dimension {d} cannot hold {p} one-hot parts"
        )));
    }
    if !(noise_sigma >= 0.0) {
        return Err(Error::argument("noise_sigma must be >= 0"));
    }
    let mut rng = SplitMix64::seed_from_u64(seed);
    let mut data = vec![0.0; gt_labels.len() * d];
    for (i, &l) in gt_labels.iter().enumerate() {
        let row = &mut data[i * d..(i + 1) * d];
        row[l as usize - 1] = 1.0;
        if noise_sigma > 0.0 {
            for v in row.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *v += noise_sigma * z;
            }
        }
    }
    PointFeatures::new(Matrix::from_vec(gt_labels.len(), d, data)?, Provenance::Backprojected)
}

/// Per-view feature grids where every foreground pixel carries the feature
/// of the point that owns it and the background is zero. Stands in for the
/// output of an image encoder.
pub fn paint_feature_grids(views: &[RenderedView], feats: &PointFeatures) -> Result<Vec<FeatureGrid>> {
    let d = feats.dim();
    views
        .iter()
        .enumerate()
        .map(|(r, v)| {
            let mut data = vec![0.0f32; v.owner.len() * d];
            for (k, &o) in v.owner.iter().enumerate() {
                if o >= 0 {
                    let o = o as usize;
                    if o >= feats.len() {
                        return Err(Error::input(format!("view {r} owner {o} has no feature")));
                    }
                    for (dst, src) in data[k * d..(k + 1) * d].iter_mut().zip(feats.data.row(o)) {
                        *dst = *src as f32;
                    }
                }
            }
            Ok(FeatureGrid::new(v.height(), v.width(), d, data)?.with_view(r))
        })
        .collect()
}

pub fn default_label_names(p: usize) -> Vec<String> {
    (1..=p).map(|j| format!("part{j}")).collect()
}

/// Similarity maps consistent with the ground truth: on each owned pixel
/// the owner's true label scores 1 and every other label `1 - margin`;
/// background scores 0 everywhere.
pub fn synth_sim_maps(views: &[RenderedView], gt_labels: &[u32], p: usize, margin: f64) -> Result<SimilarityMaps> {
    if p == 0 {
        return Err(Error::argument("part count must be at least 1"));
    }
    let off = (1.0 - margin) as f32;
    let maps = views
        .iter()
        .enumerate()
        .map(|(r, v)| {
            let mut data = vec![0.0f32; v.owner.len() * p];
            for (k, &o) in v.owner.iter().enumerate() {
                if o < 0 {
                    continue;
                }
                let label = *gt_labels
                    .get(o as usize)
                    .ok_or_else(|| Error::input(format!("view {r} owner {o} has no ground-truth label")))?
                    as usize;
                if label == 0 || label > p {
                    return Err(Error::input(format!("label {label} outside 1..={p}")));
                }
                let px = &mut data[k * p..(k + 1) * p];
                px.fill(off);
                px[label - 1] = 1.0;
            }
            Ok(FeatureGrid::new(v.height(), v.width(), p, data)?.with_view(r))
        })
        .collect::<Result<Vec<_>>>()?;
    SimilarityMaps::new(maps, default_label_names(p))
}
