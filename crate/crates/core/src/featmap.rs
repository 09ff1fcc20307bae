//! Pixel features: patch-to-pixel upsampling, lifting pixel features onto
//! points through the render correspondences, and filling in points that no
//! view saw.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::nearest_k;
use crate::matrix::Matrix;
use crate::render::CorrespondenceMap;

/// Default neighbourhood size used to fill hidden points.
pub const DEFAULT_FILL_NEIGHBORS: usize = 20;

/// `height × width × dim` features for one view, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGrid {
    height: usize,
    width: usize,
    dim: usize,
    data: Vec<f32>,
    pub source_view: usize,
}

impl FeatureGrid {
    pub fn new(height: usize, width: usize, dim: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != height * width * dim {
            return Err(Error::input(format!(
                "feature grid has {} values, expected {height}x{width}x{dim}",
                data.len()
            )));
        }
        if dim == 0 {
            return Err(Error::input("feature dimension must be at least 1"));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("feature grid contains non-finite values"));
        }
        Ok(Self {
            height,
            width,
            dim,
            data,
            source_view: 0,
        })
    }

    pub fn with_view(mut self, view: usize) -> Self {
        self.source_view = view;
        self
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    /// Feature vector at a flat pixel index `row * width + col`.
    pub fn pixel(&self, flat: usize) -> &[f32] {
        &self.data[flat * self.dim..(flat + 1) * self.dim]
    }

    pub fn at(&self, row: usize, col: usize) -> &[f32] {
        self.pixel(row * self.width + col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Backprojected,
    Filled,
    Aggregated,
}

/// `N × d` point features.
#[derive(Debug, Clone, PartialEq)]
pub struct PointFeatures {
    pub data: Matrix,
    pub provenance: Provenance,
}

impl PointFeatures {
    pub fn new(data: Matrix, provenance: Provenance) -> Result<Self> {
        if !data.is_finite() {
            return Err(Error::input("point features contain non-finite values"));
        }
        Ok(Self { data, provenance })
    }

    pub fn len(&self) -> usize {
        self.data.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.data.cols()
    }
}

/// Catmull-Rom weights (a = -0.5) for the four taps around a sample at
/// fractional offset `t` in [0, 1).
#[inline]
fn catmull_rom_weights(t: f64) -> [f64; 4] {
    const A: f64 = -0.5;
    let cubic_near = |x: f64| ((A + 2.0) * x - (A + 3.0)) * x * x + 1.0;
    let cubic_far = |x: f64| ((A * x - 5.0 * A) * x + 8.0 * A) * x - 4.0 * A;
    [
        cubic_far(t + 1.0),
        cubic_near(t),
        cubic_near(1.0 - t),
        cubic_far(2.0 - t),
    ]
}

/// For each output index, the four clamped source taps and their weights.
fn resample_taps(src: usize, dst: usize) -> Vec<([usize; 4], [f64; 4])> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|p| {
            let x = (p as f64 + 0.5) * scale - 0.5;
            let base = x.floor();
            let w = catmull_rom_weights(x - base);
            let base = base as i64;
            let clamp = |i: i64| i.clamp(0, src as i64 - 1) as usize;
            ([clamp(base - 1), clamp(base), clamp(base + 1), clamp(base + 2)], w)
        })
        .collect()
}

/// Separable Catmull-Rom upsampling (or resampling) of a patch grid to
/// `out_h × out_w`, using half-pixel-centered sample positions and clamped
/// borders.
pub fn bicubic_upsample(patches: &FeatureGrid, out_h: usize, out_w: usize) -> Result<FeatureGrid> {
    if out_h == 0 || out_w == 0 {
        return Err(Error::argument("output size must be at least 1x1"));
    }
    let (h, w, d) = (patches.height, patches.width, patches.dim);
    if h == 0 || w == 0 {
        return Err(Error::argument("input grid is empty"));
    }

    // horizontal pass: h × out_w × d
    let col_taps = resample_taps(w, out_w);
    let mut horiz = vec![0.0f64; h * out_w * d];
    for row in 0..h {
        for (oc, (taps, wts)) in col_taps.iter().enumerate() {
            let out = &mut horiz[(row * out_w + oc) * d..(row * out_w + oc + 1) * d];
            for (&tap, &wt) in taps.iter().zip(wts) {
                let src = patches.at(row, tap);
                for (o, &s) in out.iter_mut().zip(src) {
                    *o += wt * s as f64;
                }
            }
        }
    }

    let row_taps = resample_taps(h, out_h);
    let mut data = vec![0.0f32; out_h * out_w * d];
    data.par_chunks_mut(out_w * d)
        .zip(row_taps.par_iter())
        .for_each(|(out_row, (taps, wts))| {
            let mut acc = vec![0.0f64; out_w * d];
            for (&tap, &wt) in taps.iter().zip(wts) {
                let src = &horiz[tap * out_w * d..(tap + 1) * out_w * d];
                for (a, &s) in acc.iter_mut().zip(src) {
                    *a += wt * s;
                }
            }
            for (o, a) in out_row.iter_mut().zip(acc) {
                *o = a as f32;
            }
        });

    Ok(FeatureGrid {
        height: out_h,
        width: out_w,
        dim: d,
        data,
        source_view: patches.source_view,
    })
}

/// Streaming average of pixel features over the views in which each point
/// was observed. Views can be added one at a time so that only one grid needs
/// to be resident.
#[derive(Debug, Clone)]
pub struct Backprojector<'a> {
    corr: &'a CorrespondenceMap,
    dim: Option<usize>,
    sums: Vec<f64>,
    counts: Vec<u32>,
}

impl<'a> Backprojector<'a> {
    pub fn new(corr: &'a CorrespondenceMap) -> Self {
        Self {
            corr,
            dim: None,
            sums: Vec::new(),
            counts: vec![0; corr.n_points()],
        }
    }

    /// Accumulate the grid of view `view`. Grids at a coarser resolution than
    /// the canvas are upsampled first.
    pub fn add_view(&mut self, view: usize, grid: &FeatureGrid) -> Result<()> {
        if view >= self.corr.n_views() {
            return Err(Error::input(format!(
                "view {view} is not part of the render pass ({} views)",
                self.corr.n_views()
            )));
        }
        match self.dim {
            None => {
                self.dim = Some(grid.dim());
                self.sums = vec![0.0; self.corr.n_points() * grid.dim()];
            }
            Some(d) if d != grid.dim() => {
                return Err(Error::input(format!(
                    "view {view} has feature dimension {}, earlier views have {d}",
                    grid.dim()
                )));
            }
            _ => {}
        }
        let (h, w) = self.corr.shape(view);
        let upsampled;
        let grid = if (grid.height(), grid.width()) == (h, w) {
            grid
        } else {
            upsampled = bicubic_upsample(grid, h, w)?;
            &upsampled
        };
        let d = grid.dim();
        for (i, &k) in self.corr.view_pixels(view).iter().enumerate() {
            if k < 0 {
                continue;
            }
            let src = grid.pixel(k as usize);
            for (s, &v) in self.sums[i * d..(i + 1) * d].iter_mut().zip(src) {
                *s += v as f64;
            }
            self.counts[i] += 1;
        }
        Ok(())
    }

    /// Mean features plus the hidden mask; hidden points get zero vectors.
    pub fn finish(self) -> Result<(PointFeatures, Vec<bool>)> {
        let d = self.dim.ok_or_else(|| Error::input("no feature grids were supplied"))?;
        let mut sums = self.sums;
        for (i, &c) in self.counts.iter().enumerate() {
            if c > 0 {
                for s in &mut sums[i * d..(i + 1) * d] {
                    *s /= c as f64;
                }
            }
        }
        let hidden = self.counts.iter().map(|&c| c == 0).collect();
        let data = Matrix::from_vec(self.counts.len(), d, sums)?;
        Ok((PointFeatures::new(data, Provenance::Backprojected)?, hidden))
    }
}

/// Average each point's pixel features across the views that observed it.
/// `grids[r]` belongs to view `r`.
pub fn backproject(grids: &[FeatureGrid], corr: &CorrespondenceMap) -> Result<(PointFeatures, Vec<bool>)> {
    if grids.len() != corr.n_views() {
        return Err(Error::input(format!(
            "{} feature grids for {} views",
            grids.len(),
            corr.n_views()
        )));
    }
    let mut acc = Backprojector::new(corr);
    for (r, g) in grids.iter().enumerate() {
        acc.add_view(r, g)?;
    }
    acc.finish()
}

/// Replace the features of hidden points with the plain mean over their `l`
/// nearest visible points (all visible points if there are fewer).
pub fn fill_hidden(positions: &Matrix, feats: &PointFeatures, hidden: &[bool], l: usize) -> Result<PointFeatures> {
    let n = positions.rows();
    if feats.len() != n || hidden.len() != n {
        return Err(Error::input(format!(
            "{} features and {} hidden flags for {n} points",
            feats.len(),
            hidden.len()
        )));
    }
    if l == 0 {
        return Err(Error::argument("neighbour count must be at least 1"));
    }
    let visible: Vec<usize> = (0..n).filter(|&i| !hidden[i]).collect();
    if visible.is_empty() {
        return Err(Error::Unrecoverable(
            "every point is hidden; no features to propagate".into(),
        ));
    }
    let mut out = feats.data.clone();
    if visible.len() == n {
        return PointFeatures::new(out, feats.provenance);
    }
    let corpus = positions.select_rows(&visible);
    let k = l.min(visible.len());
    let d = feats.dim();
    let targets: Vec<usize> = (0..n).filter(|&i| hidden[i]).collect();
    let filled: Vec<Vec<f64>> = targets
        .par_iter()
        .map(|&i| {
            let mut mean = vec![0.0; d];
            for (_, j) in nearest_k(positions.row(i), &corpus, k, None) {
                for (m, v) in mean.iter_mut().zip(feats.data.row(visible[j])) {
                    *m += v;
                }
            }
            mean.iter_mut().for_each(|m| *m /= k as f64);
            mean
        })
        .collect();
    for (&i, f) in targets.iter().zip(filled) {
        out.row_mut(i).copy_from_slice(&f);
    }
    PointFeatures::new(out, Provenance::Filled)
}
