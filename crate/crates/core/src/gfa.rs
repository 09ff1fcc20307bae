//! Geometric feature aggregation.
//!
//! Both stages pick super points by farthest point sampling on the
//! coordinates, give every super point the mean feature of its `K` nearest
//! points, and then re-express every other point as the mean of its `K'`
//! nearest super points. The spatial stage measures nearness in coordinate
//! space; the semantic stage measures it in feature space, so parts that are
//! far apart but look alike (the legs of a chair) pull towards each other.

use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{farthest_point_sampling, nearest_k};
use crate::matrix::Matrix;

/// Offset added to distances before inverting them for distance weighting.
pub const WEIGHT_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GfaOrder {
    #[default]
    SpatialFirst,
    SemanticFirst,
}

impl FromStr for GfaOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spatial_first" => Ok(GfaOrder::SpatialFirst),
            "semantic_first" => Ok(GfaOrder::SemanticFirst),
            other => Err(Error::argument(format!("unknown aggregation order `{other}`"))),
        }
    }
}

/// Space in which the semantic stage looks up the `K'` super points of each
/// point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterpolationSpace {
    #[default]
    Feature,
    Coordinate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GfaConfig {
    pub m_superpoints: usize,
    pub k_spatial: usize,
    pub k_semantic: usize,
    pub k_prime: usize,
    pub weight_by_distance: bool,
    pub order: GfaOrder,
    pub semantic_interpolation: InterpolationSpace,
    /// Also re-interpolate the super points themselves instead of letting
    /// them keep their aggregated feature.
    pub interpolate_superpoints: bool,
    /// Set from the run's `seeds` block.
    #[serde(skip)]
    pub fps_start: usize,
}

impl Default for GfaConfig {
    fn default() -> Self {
        Self {
            m_superpoints: 256,
            k_spatial: 10,
            k_semantic: 90,
            k_prime: 3,
            weight_by_distance: false,
            order: GfaOrder::SpatialFirst,
            semantic_interpolation: InterpolationSpace::Feature,
            interpolate_superpoints: false,
            fps_start: 0,
        }
    }
}

impl GfaConfig {
    pub fn validate(&self, n_points: usize) -> Result<()> {
        if self.m_superpoints == 0 || self.m_superpoints > n_points {
            return Err(Error::argument(format!(
                "m_superpoints = {} must be in 1..={n_points}",
                self.m_superpoints
            )));
        }
        for (name, k) in [("k_spatial", self.k_spatial), ("k_semantic", self.k_semantic)] {
            if k == 0 || k > n_points {
                return Err(Error::argument(format!("{name} = {k} must be in 1..={n_points}")));
            }
        }
        if self.k_prime == 0 || self.k_prime > self.m_superpoints {
            return Err(Error::argument(format!(
                "k_prime = {} must be in 1..={}",
                self.k_prime, self.m_superpoints
            )));
        }
        if self.fps_start >= n_points {
            return Err(Error::argument(format!(
                "fps_start = {} out of range for {n_points} points",
                self.fps_start
            )));
        }
        Ok(())
    }
}

fn check_inputs(positions: &Matrix, feats: &Matrix, cfg: &GfaConfig) -> Result<()> {
    if positions.rows() != feats.rows() {
        return Err(Error::input(format!(
            "{} positions but {} feature rows",
            positions.rows(),
            feats.rows()
        )));
    }
    if !feats.is_finite() {
        return Err(Error::input("features contain non-finite values"));
    }
    cfg.validate(positions.rows())
}

/// Mean (optionally inverse-distance weighted) of `values` over neighbours
/// given as `(squared distance, row)`.
fn pooled(neighbors: &[(f64, usize)], values: &Matrix, weighted: bool, out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    if weighted {
        let weights: Vec<f64> = neighbors
            .iter()
            .map(|&(d2, _)| 1.0 / (WEIGHT_EPSILON + d2.sqrt()))
            .collect();
        let total: f64 = weights.iter().sum();
        for (&(_, j), w) in neighbors.iter().zip(weights) {
            for (o, v) in out.iter_mut().zip(values.row(j)) {
                *o += w / total * v;
            }
        }
    } else {
        for &(_, j) in neighbors {
            for (o, v) in out.iter_mut().zip(values.row(j)) {
                *o += v;
            }
        }
        let k = neighbors.len() as f64;
        out.iter_mut().for_each(|o| *o /= k);
    }
}

/// Shared two-step aggregation.
///
/// `gather_space` is where super points find their `k` neighbours and
/// `interp_space` where points find their `k_prime` super points.
#[allow(clippy::too_many_arguments)]
fn aggregate(
    superpoints: &[usize],
    gather_space: &Matrix,
    k: usize,
    interp_space: &Matrix,
    k_prime: usize,
    values: &Matrix,
    weighted: bool,
    interpolate_superpoints: bool,
) -> Matrix {
    let n = values.rows();
    let d = values.cols();

    let sp_feats: Vec<Vec<f64>> = superpoints
        .par_iter()
        .map(|&c| {
            let nn = nearest_k(gather_space.row(c), gather_space, k, None);
            let mut f = vec![0.0; d];
            pooled(&nn, values, weighted, &mut f);
            f
        })
        .collect();
    let sp_feats = Matrix::from_rows(&sp_feats).expect("rows share one width");

    let mut slot = vec![usize::MAX; n];
    for (s, &c) in superpoints.iter().enumerate() {
        slot[c] = s;
    }
    let sp_space = interp_space.select_rows(superpoints);

    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            if slot[i] != usize::MAX && !interpolate_superpoints {
                return sp_feats.row(slot[i]).to_vec();
            }
            let nn = nearest_k(interp_space.row(i), &sp_space, k_prime, None);
            let mut f = vec![0.0; d];
            pooled(&nn, &sp_feats, weighted, &mut f);
            f
        })
        .collect();
    let data = rows.into_iter().flatten().collect();
    Matrix::from_vec(n, d, data).expect("n rows of width d")
}

/// Spatially consistent aggregation: neighbourhoods and interpolation both
/// in coordinate space.
pub fn spatial_aggregate(positions: &Matrix, feats: &Matrix, cfg: &GfaConfig) -> Result<Matrix> {
    check_inputs(positions, feats, cfg)?;
    let sp = farthest_point_sampling(positions, cfg.m_superpoints, cfg.fps_start)?;
    Ok(aggregate(
        sp.as_slice(),
        positions,
        cfg.k_spatial,
        positions,
        cfg.k_prime,
        feats,
        cfg.weight_by_distance,
        cfg.interpolate_superpoints,
    ))
}

/// Semantically consistent aggregation: super points still come from FPS on
/// the coordinates, but neighbourhoods (and, by default, the interpolation)
/// live in feature space. A super point sits in feature space at its own
/// input feature.
pub fn semantic_aggregate(positions: &Matrix, feats: &Matrix, cfg: &GfaConfig) -> Result<Matrix> {
    check_inputs(positions, feats, cfg)?;
    let sp = farthest_point_sampling(positions, cfg.m_superpoints, cfg.fps_start)?;
    let interp = match cfg.semantic_interpolation {
        InterpolationSpace::Feature => feats,
        InterpolationSpace::Coordinate => positions,
    };
    Ok(aggregate(
        sp.as_slice(),
        feats,
        cfg.k_semantic,
        interp,
        cfg.k_prime,
        feats,
        cfg.weight_by_distance,
        cfg.interpolate_superpoints,
    ))
}

/// Both stages, in the configured order.
pub fn gfa(positions: &Matrix, feats: &Matrix, cfg: &GfaConfig) -> Result<Matrix> {
    match cfg.order {
        GfaOrder::SpatialFirst => {
            let s = spatial_aggregate(positions, feats, cfg)?;
            semantic_aggregate(positions, &s, cfg)
        }
        GfaOrder::SemanticFirst => {
            let s = semantic_aggregate(positions, feats, cfg)?;
            spatial_aggregate(positions, &s, cfg)
        }
    }
}
