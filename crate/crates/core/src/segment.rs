//! Zero-shot segmentation head: cluster point features into parts, derive
//! per-point label guesses ("anchors") from back-projected image-text
//! similarity maps, and name each cluster by optimal overlap with the anchors.

use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assignment::max_weight_assignment;
use crate::error::{Error, Result};
use crate::featmap::{Backprojector, FeatureGrid};
use crate::geometry::nearest_k;
use crate::matrix::{squared_distance, Matrix};
use crate::render::CorrespondenceMap;

pub const DEFAULT_ANCHOR_SAMPLE: usize = 2048;

/// Per-view `H × W × P` similarity scores, one plane per part label.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMaps {
    pub maps: Vec<FeatureGrid>,
    pub label_names: Vec<String>,
}

impl SimilarityMaps {
    pub fn new(maps: Vec<FeatureGrid>, label_names: Vec<String>) -> Result<Self> {
        if label_names.is_empty() {
            return Err(Error::input("at least one part label is required"));
        }
        if let Some(m) = maps.iter().find(|m| m.dim() != label_names.len()) {
            return Err(Error::input(format!(
                "similarity map of view {} has {} planes for {} labels",
                m.source_view,
                m.dim(),
                label_names.len()
            )));
        }
        Ok(Self { maps, label_names })
    }

    pub fn n_labels(&self) -> usize {
        self.label_names.len()
    }
}

/// Result of clustering plus, when anchors were available, the naming of
/// each cluster. Labels are 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segmentation {
    pub cluster_of: Vec<usize>,
    pub label_of_cluster: Option<Vec<u32>>,
}

impl Segmentation {
    pub fn final_labels(&self) -> Option<Vec<u32>> {
        self.label_of_cluster
            .as_ref()
            .map(|l| self.cluster_of.iter().map(|&c| l[c]).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    pub labels: Vec<usize>,
    pub centroids: Matrix,
    pub inertia: f64,
    pub iterations: usize,
}

fn nearest_centroid(x: &[f64], centroids: &Matrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..centroids.rows() {
        let d = squared_distance(x, centroids.row(c));
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn kmeans_pp_init(feats: &Matrix, p: usize, rng: &mut SplitMix64) -> Vec<usize> {
    let n = feats.rows();
    let mut chosen = vec![rng.gen_range(0..n)];
    let mut d2: Vec<f64> = (0..n)
        .map(|i| squared_distance(feats.row(i), feats.row(chosen[0])))
        .collect();
    while chosen.len() < p {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                acc += w;
                pick = Some(i);
                if acc > target {
                    break;
                }
            }
            pick.expect("positive total weight")
        } else {
            // every point coincides with a chosen one
            (0..n).find(|i| !chosen.contains(i)).unwrap_or(0)
        };
        chosen.push(next);
        for (i, w) in d2.iter_mut().enumerate() {
            *w = w.min(squared_distance(feats.row(i), feats.row(next)));
        }
    }
    chosen
}

/// Assign every point to its nearest centroid and give each empty cluster
/// the point lying farthest from its own centroid (taken from clusters with
/// more than one member).
fn assign(feats: &Matrix, centroids: &mut Matrix) -> (Vec<usize>, Vec<f64>) {
    let (mut labels, mut dists): (Vec<usize>, Vec<f64>) = (0..feats.rows())
        .into_par_iter()
        .map(|i| nearest_centroid(feats.row(i), centroids))
        .unzip();
    let p = centroids.rows();
    let mut sizes = vec![0usize; p];
    for &l in &labels {
        sizes[l] += 1;
    }
    for c in 0..p {
        if sizes[c] > 0 {
            continue;
        }
        let mut far: Option<usize> = None;
        for i in 0..labels.len() {
            if sizes[labels[i]] > 1 && far.is_none_or(|f| dists[i] > dists[f]) {
                far = Some(i);
            }
        }
        if let Some(i) = far {
            sizes[labels[i]] -= 1;
            sizes[c] = 1;
            labels[i] = c;
            dists[i] = 0.0;
            centroids.row_mut(c).copy_from_slice(feats.row(i));
        }
    }
    (labels, dists)
}

/// Lloyd's k-means with k-means++ seeding. Deterministic for a given seed.
pub fn kmeans(feats: &Matrix, p: usize, seed: u64, max_iter: usize, tol: f64) -> Result<KMeans> {
    let n = feats.rows();
    if p == 0 || p > n {
        return Err(Error::argument(format!("cannot form {p} clusters from {n} points")));
    }
    if !feats.is_finite() {
        return Err(Error::input("features contain non-finite values"));
    }
    let mut rng = SplitMix64::seed_from_u64(seed);
    let init = kmeans_pp_init(feats, p, &mut rng);
    let mut centroids = feats.select_rows(&init);
    let d = feats.cols();

    let mut iterations = 0;
    let (mut labels, mut dists) = assign(feats, &mut centroids);
    while iterations < max_iter {
        iterations += 1;
        let mut sums = Matrix::zeros(p, d);
        let mut counts = vec![0usize; p];
        for (i, &l) in labels.iter().enumerate() {
            counts[l] += 1;
            for (s, v) in sums.row_mut(l).iter_mut().zip(feats.row(i)) {
                *s += v;
            }
        }
        let mut shift: f64 = 0.0;
        for (c, &count) in counts.iter().enumerate() {
            if count == 0 {
                continue;
            }
            let row = sums.row_mut(c);
            row.iter_mut().for_each(|s| *s /= count as f64);
            shift = shift.max(squared_distance(row, centroids.row(c)).sqrt());
            centroids.row_mut(c).copy_from_slice(row);
        }
        (labels, dists) = assign(feats, &mut centroids);
        if shift < tol {
            break;
        }
    }
    Ok(KMeans {
        inertia: dists.iter().sum(),
        labels,
        centroids,
        iterations,
    })
}

/// Per-point label guesses for a subset of points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Anchors {
    /// Points that received an anchor, ascending.
    pub points: Vec<usize>,
    /// 1-based label of each entry of `points`.
    pub labels: Vec<u32>,
}

fn argmax_label(scores: &[f64]) -> u32 {
    let mut best = 0;
    for (j, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = j;
        }
    }
    best as u32 + 1
}

/// Points to anchor: all of them, or `sample` drawn without replacement.
pub fn anchor_subset(n: usize, sample: Option<usize>, seed: u64) -> Vec<usize> {
    match sample {
        Some(s) if s < n => {
            let mut rng = SplitMix64::seed_from_u64(seed);
            let mut idx = sample_indices(&mut rng, n, s).into_vec();
            idx.sort_unstable();
            idx
        }
        _ => (0..n).collect(),
    }
}

/// Anchor labels from back-projected scores (`N × P`). A hidden point takes
/// the label of its nearest visible point. Ties go to the smaller label.
pub fn anchors_from_scores(scores: &Matrix, hidden: &[bool], positions: &Matrix, subset: &[usize]) -> Result<Anchors> {
    let n = scores.rows();
    if hidden.len() != n || positions.rows() != n {
        return Err(Error::input("scores, hidden mask and positions disagree in length"));
    }
    let visible: Vec<usize> = (0..n).filter(|&i| !hidden[i]).collect();
    if visible.is_empty() {
        return Err(Error::Unrecoverable("no point is visible in any view".into()));
    }
    let vis_pos = positions.select_rows(&visible);
    let labels = subset
        .par_iter()
        .map(|&i| {
            let src = if hidden[i] {
                visible[nearest_k(positions.row(i), &vis_pos, 1, None)[0].1]
            } else {
                i
            };
            argmax_label(scores.row(src))
        })
        .collect();
    Ok(Anchors {
        points: subset.to_vec(),
        labels,
    })
}

/// Back-project similarity maps through the render correspondences and
/// take the per-point argmax.
pub fn anchor_masks(
    sim: &SimilarityMaps,
    corr: &CorrespondenceMap,
    positions: &Matrix,
    p: usize,
    sample: Option<usize>,
    seed: u64,
) -> Result<Anchors> {
    if sim.n_labels() != p {
        return Err(Error::input(format!(
            "similarity maps carry {} labels, expected {p}",
            sim.n_labels()
        )));
    }
    if sim.maps.len() != corr.n_views() {
        return Err(Error::input(format!(
            "{} similarity maps for {} views",
            sim.maps.len(),
            corr.n_views()
        )));
    }
    let mut acc = Backprojector::new(corr);
    for (r, m) in sim.maps.iter().enumerate() {
        acc.add_view(r, m)?;
    }
    let (scores, hidden) = acc.finish()?;
    let subset = anchor_subset(corr.n_points(), sample, seed);
    anchors_from_scores(&scores.data, &hidden, positions, &subset)
}

fn check_labels(cluster_of: &[usize], labels: &[u32], p: usize) -> Result<()> {
    if cluster_of.len() != labels.len() {
        return Err(Error::input(format!(
            "{} cluster ids but {} labels",
            cluster_of.len(),
            labels.len()
        )));
    }
    if cluster_of.iter().any(|&c| c >= p) {
        return Err(Error::input(format!("cluster ids must be below {p}")));
    }
    if labels.iter().any(|&l| l == 0 || l as usize > p) {
        return Err(Error::input(format!("labels must lie in 1..={p}")));
    }
    Ok(())
}

/// `p × p` table of points shared by cluster `i` and label `j + 1`.
pub fn overlap_matrix(cluster_of: &[usize], labels: &[u32], p: usize) -> Vec<Vec<f64>> {
    let mut o = vec![vec![0.0; p]; p];
    for (&c, &l) in cluster_of.iter().zip(labels) {
        o[c][l as usize - 1] += 1.0;
    }
    o
}

/// Name each cluster by the one-to-one matching of clusters to anchor labels
/// that maximises the number of agreeing points. Labels that no anchor uses
/// simply contribute zero overlap.
pub fn hungarian_assign(cluster_of: &[usize], anchor_labels: &[u32], p: usize) -> Result<Vec<u32>> {
    check_labels(cluster_of, anchor_labels, p)?;
    let o = overlap_matrix(cluster_of, anchor_labels, p);
    Ok(max_weight_assignment(&o).into_iter().map(|j| j as u32 + 1).collect())
}

/// Matching of clusters to ground-truth parts maximising the summed IoU: the
/// score a perfect namer would reach. Pairs with an empty union count as
/// IoU 1, as in evaluation.
pub fn oracle_match(cluster_of: &[usize], gt_labels: &[u32], p: usize) -> Result<Vec<u32>> {
    check_labels(cluster_of, gt_labels, p)?;
    let inter = overlap_matrix(cluster_of, gt_labels, p);
    let cluster_size: Vec<f64> = inter.iter().map(|r| r.iter().sum()).collect();
    let part_size: Vec<f64> = (0..p).map(|j| inter.iter().map(|r| r[j]).sum()).collect();
    let iou: Vec<Vec<f64>> = (0..p)
        .map(|i| {
            (0..p)
                .map(|j| {
                    let union = cluster_size[i] + part_size[j] - inter[i][j];
                    if union > 0.0 {
                        inter[i][j] / union
                    } else {
                        1.0
                    }
                })
                .collect()
        })
        .collect();
    Ok(max_weight_assignment(&iou).into_iter().map(|j| j as u32 + 1).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentConfig {
    #[serde(skip)]
    pub kmeans_seed: u64,
    pub max_iter: usize,
    pub tol: f64,
    /// Number of points that receive anchors; `None` anchors every point.
    pub anchor_sample: Option<usize>,
    #[serde(skip)]
    pub sample_seed: u64,
    /// Cluster only the anchored subset and give every other point the
    /// cluster of its nearest centroid in feature space.
    pub cluster_on_sample: bool,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        Self {
            kmeans_seed: 0,
            max_iter: 100,
            tol: 1e-4,
            anchor_sample: Some(DEFAULT_ANCHOR_SAMPLE),
            sample_seed: 0,
            cluster_on_sample: false,
        }
    }
}

/// Cluster, then (when anchors are given) name the clusters.
pub fn segment_with_anchors(
    feats: &Matrix,
    anchors: Option<&Anchors>,
    p: usize,
    cfg: &SegmentConfig,
) -> Result<Segmentation> {
    let cluster_of = match anchors {
        Some(a) if cfg.cluster_on_sample && a.points.len() < feats.rows() => {
            let sub = feats.select_rows(&a.points);
            let km = kmeans(&sub, p, cfg.kmeans_seed, cfg.max_iter, cfg.tol)?;
            let mut cluster_of: Vec<usize> = (0..feats.rows())
                .into_par_iter()
                .map(|i| nearest_centroid(feats.row(i), &km.centroids).0)
                .collect();
            for (&i, &l) in a.points.iter().zip(&km.labels) {
                cluster_of[i] = l;
            }
            cluster_of
        }
        _ => kmeans(feats, p, cfg.kmeans_seed, cfg.max_iter, cfg.tol)?.labels,
    };
    let label_of_cluster = match anchors {
        Some(a) => {
            if a.points.iter().any(|&i| i >= feats.rows()) {
                return Err(Error::input("anchor refers to a point outside the cloud"));
            }
            let clusters: Vec<usize> = a.points.iter().map(|&i| cluster_of[i]).collect();
            Some(hungarian_assign(&clusters, &a.labels, p)?)
        }
        None => None,
    };
    Ok(Segmentation {
        cluster_of,
        label_of_cluster,
    })
}

/// Full head: k-means, anchors from the similarity maps (if any), and the
/// cluster-to-label matching.
pub fn segment_full(
    feats: &Matrix,
    positions: &Matrix,
    sim: Option<(&SimilarityMaps, &CorrespondenceMap)>,
    p: usize,
    cfg: &SegmentConfig,
) -> Result<Segmentation> {
    let anchors = match sim {
        Some((maps, corr)) => {
            if corr.n_points() != feats.rows() {
                return Err(Error::input("correspondences and features disagree on N"));
            }
            Some(anchor_masks(
                maps,
                corr,
                positions,
                p,
                cfg.anchor_sample,
                cfg.sample_seed,
            )?)
        }
        None => None,
    };
    segment_with_anchors(feats, anchors.as_ref(), p, cfg)
}
