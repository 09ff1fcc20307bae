//! Point-cloud container and the two geometric primitives the rest of the
//! pipeline is built on: farthest point sampling and exact k-nearest
//! neighbours.
//!
//! Ties are always resolved towards the smallest index so that results are
//! reproducible bit for bit.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{squared_distance, Matrix};

/// A point cloud with `N` points.
///
/// Part labels are 1-based (`1..=P`).
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    positions: Matrix,
    colors: Option<Matrix>,
    gt_labels: Option<Vec<u32>>,
    category: Option<String>,
}

impl PointCloud {
    pub fn new(positions: Matrix) -> Result<Self> {
        if positions.cols() != 3 {
            return Err(Error::input(format!(
                "positions must have 3 columns, got {}",
                positions.cols()
            )));
        }
        if positions.rows() == 0 {
            return Err(Error::input("point cloud is empty"));
        }
        if !positions.is_finite() {
            return Err(Error::input("point coordinates must be finite"));
        }
        Ok(Self {
            positions,
            colors: None,
            gt_labels: None,
            category: None,
        })
    }

    pub fn from_points(points: &[[f64; 3]]) -> Result<Self> {
        Self::new(Matrix::from_rows(points)?)
    }

    pub fn with_colors(mut self, colors: Matrix) -> Result<Self> {
        if colors.rows() != self.len() || colors.cols() != 3 {
            return Err(Error::input(format!(
                "colors must be {}x3, got {}x{}",
                self.len(),
                colors.rows(),
                colors.cols()
            )));
        }
        if colors.as_slice().iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::input("colors must lie in [0, 1]"));
        }
        self.colors = Some(colors);
        Ok(self)
    }

    pub fn with_labels(mut self, labels: Vec<u32>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::input(format!(
                "expected {} labels, got {}",
                self.len(),
                labels.len()
            )));
        }
        if labels.contains(&0) {
            return Err(Error::input("part labels are 1-based"));
        }
        self.gt_labels = Some(labels);
        Ok(self)
    }

    pub fn with_category(mut self, category: impl Into<String>) -> Self {
        self.category = Some(category.into());
        self
    }

    pub fn len(&self) -> usize {
        self.positions.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn positions(&self) -> &Matrix {
        &self.positions
    }

    pub fn position(&self, i: usize) -> [f64; 3] {
        let r = self.positions.row(i);
        [r[0], r[1], r[2]]
    }

    pub fn colors(&self) -> Option<&Matrix> {
        self.colors.as_ref()
    }

    pub fn gt_labels(&self) -> Option<&[u32]> {
        self.gt_labels.as_deref()
    }

    pub fn category(&self) -> Option<&str> {
        self.category.as_deref()
    }

    /// Sub-cloud made of the given points, carrying colors and labels along.
    pub fn select(&self, indices: &[usize]) -> Result<PointCloud> {
        let mut out = PointCloud::new(self.positions.select_rows(indices))?;
        out.colors = self.colors.as_ref().map(|c| c.select_rows(indices));
        out.gt_labels = self.gt_labels.as_ref().map(|l| indices.iter().map(|&i| l[i]).collect());
        out.category = self.category.clone();
        Ok(out)
    }
}

/// Ordered set of distinct point indices, e.g. the super points picked by FPS.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSet(Vec<usize>);

impl IndexSet {
    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }
}

/// Center the cloud on its centroid and scale it so the farthest point lies on
/// the unit sphere. A cloud whose points all coincide collapses to the origin.
pub fn normalize_unit_sphere(pc: &PointCloud) -> Result<PointCloud> {
    let pos = pc.positions();
    if !pos.is_finite() {
        return Err(Error::input("point coordinates must be finite"));
    }
    let n = pos.rows() as f64;
    let mut centroid = [0.0f64; 3];
    for r in pos.iter_rows() {
        for c in 0..3 {
            centroid[c] += r[c];
        }
    }
    for c in &mut centroid {
        *c /= n;
    }

    let mut centered = pos.clone();
    let mut max_norm = 0.0f64;
    for i in 0..centered.rows() {
        let r = centered.row_mut(i);
        for c in 0..3 {
            r[c] -= centroid[c];
        }
        max_norm = max_norm.max(squared_distance(r, &[0.0; 3]).sqrt());
    }

    let scale = if max_norm > f64::EPSILON * 16.0 {
        1.0 / max_norm
    } else {
        0.0
    };
    let data = centered.into_vec().into_iter().map(|v| v * scale).collect();

    let mut out = pc.clone();
    out.positions = Matrix::from_vec(pos.rows(), 3, data)?;
    Ok(out)
}

/// Greedy farthest point sampling in any dimension.
///
/// The first pick is `start`; every later pick maximises the minimum distance
/// to the points already chosen, smallest index on ties.
pub fn farthest_point_sampling(points: &Matrix, m: usize, start: usize) -> Result<IndexSet> {
    let n = points.rows();
    if m == 0 || m > n {
        return Err(Error::argument(format!("cannot sample {m} points from {n}")));
    }
    if start >= n {
        return Err(Error::argument(format!(
            "start index {start} out of range for {n} points"
        )));
    }

    let mut selected = Vec::with_capacity(m);
    let mut min_d2 = vec![f64::INFINITY; n];
    let mut taken = vec![false; n];
    let mut current = start;
    loop {
        selected.push(current);
        taken[current] = true;
        if selected.len() == m {
            break;
        }
        let anchor = points.row(current);
        let mut best = usize::MAX;
        let mut best_d2 = f64::NEG_INFINITY;
        for i in 0..n {
            if taken[i] {
                continue;
            }
            let d2 = squared_distance(points.row(i), anchor);
            if d2 < min_d2[i] {
                min_d2[i] = d2;
            }
            // strict comparison keeps the smallest index on ties
            if min_d2[i] > best_d2 {
                best_d2 = min_d2[i];
                best = i;
            }
        }
        current = best;
    }
    Ok(IndexSet(selected))
}

/// Result of a k-nearest-neighbour query: `k` neighbours per query row,
/// ascending by distance.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighbors {
    k: usize,
    indices: Vec<usize>,
    distances: Vec<f64>,
}

impl Neighbors {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.indices.len().checked_div(self.k).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self, q: usize) -> &[usize] {
        &self.indices[q * self.k..(q + 1) * self.k]
    }

    pub fn distances(&self, q: usize) -> &[f64] {
        &self.distances[q * self.k..(q + 1) * self.k]
    }
}

#[inline]
fn by_distance_then_index(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// The `k` corpus rows closest to `query`, as `(squared distance, index)`.
pub(crate) fn nearest_k(query: &[f64], corpus: &Matrix, k: usize, skip: Option<usize>) -> Vec<(f64, usize)> {
    let mut cand: Vec<(f64, usize)> = (0..corpus.rows())
        .filter(|&j| Some(j) != skip)
        .map(|j| (squared_distance(query, corpus.row(j)), j))
        .collect();
    if k < cand.len() {
        cand.select_nth_unstable_by(k - 1, by_distance_then_index);
        cand.truncate(k);
    }
    cand.sort_unstable_by(by_distance_then_index);
    cand
}

/// Exact k-nearest neighbours by exhaustive scan.
///
/// With `exclude_self`, the queries must be the corpus itself and row `i`
/// never returns index `i`.
pub fn knn(queries: &Matrix, corpus: &Matrix, k: usize, exclude_self: bool) -> Result<Neighbors> {
    if k == 0 {
        return Err(Error::argument("k must be at least 1"));
    }
    if queries.cols() != corpus.cols() {
        return Err(Error::input(format!(
            "query dimension {} differs from corpus dimension {}",
            queries.cols(),
            corpus.cols()
        )));
    }
    if exclude_self && queries.rows() != corpus.rows() {
        return Err(Error::argument(
            "exclude_self requires the queries to be the corpus rows",
        ));
    }
    let available = corpus.rows() - usize::from(exclude_self && corpus.rows() > 0);
    if k > available {
        return Err(Error::argument(format!(
            "k = {k} exceeds the {available} available corpus points"
        )));
    }

    let rows: Vec<Vec<(f64, usize)>> = (0..queries.rows())
        .into_par_iter()
        .map(|q| nearest_k(queries.row(q), corpus, k, exclude_self.then_some(q)))
        .collect();

    let mut indices = Vec::with_capacity(rows.len() * k);
    let mut distances = Vec::with_capacity(rows.len() * k);
    for row in rows {
        for (d2, j) in row {
            indices.push(j);
            distances.push(d2.sqrt());
        }
    }
    Ok(Neighbors { k, indices, distances })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_xoshiro::SplitMix64;

    fn line(xs: &[f64]) -> Matrix {
        Matrix::from_vec(xs.len(), 1, xs.to_vec()).unwrap()
    }

    fn random_points(rng: &mut SplitMix64, n: usize, d: usize) -> Matrix {
        let data = (0..n * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Matrix::from_vec(n, d, data).unwrap()
    }

    // Greedy FPS recomputed from scratch at every step.
    fn fps_oracle(points: &Matrix, m: usize, start: usize) -> Vec<usize> {
        let mut sel = vec![start];
        while sel.len() < m {
            let mut best = None;
            for i in 0..points.rows() {
                if sel.contains(&i) {
                    continue;
                }
                let d = sel
                    .iter()
                    .map(|&s| squared_distance(points.row(i), points.row(s)))
                    .fold(f64::INFINITY, f64::min);
                match best {
                    Some((bd, _)) if d <= bd => {}
                    _ => best = Some((d, i)),
                }
            }
            sel.push(best.unwrap().1);
        }
        sel
    }

    fn knn_oracle(q: &[f64], corpus: &Matrix, k: usize) -> Vec<usize> {
        let mut all: Vec<(f64, usize)> = (0..corpus.rows())
            .map(|j| (squared_distance(q, corpus.row(j)), j))
            .collect();
        all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        all.into_iter().take(k).map(|(_, j)| j).collect()
    }

    #[test]
    fn normalize_two_points() {
        let pc = PointCloud::from_points(&[[2.0, 0.0, 0.0], [4.0, 0.0, 0.0]]).unwrap();
        let out = normalize_unit_sphere(&pc).unwrap();
        assert_eq!(out.position(0), [-1.0, 0.0, 0.0]);
        assert_eq!(out.position(1), [1.0, 0.0, 0.0]);
    }

    #[test]
    fn normalize_single_point_goes_to_origin() {
        let pc = PointCloud::from_points(&[[5.0, 5.0, 5.0]]).unwrap();
        let out = normalize_unit_sphere(&pc).unwrap();
        assert_eq!(out.position(0), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn normalize_random_cloud() {
        let mut rng = SplitMix64::seed_from_u64(3);
        let pos = random_points(&mut rng, 100, 3);
        let pos = Matrix::from_vec(100, 3, pos.as_slice().iter().map(|v| v * 7.0 + 2.0).collect()).unwrap();
        let out = normalize_unit_sphere(&PointCloud::new(pos).unwrap()).unwrap();
        let mut c = [0.0; 3];
        let mut max_norm: f64 = 0.0;
        for r in out.positions().iter_rows() {
            for k in 0..3 {
                c[k] += r[k] / 100.0;
            }
            max_norm = max_norm.max((r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt());
        }
        assert!(c.iter().all(|v| v.abs() < 1e-6));
        assert!((max_norm - 1.0).abs() < 1e-6);

        let twice = normalize_unit_sphere(&out).unwrap();
        for (a, b) in twice.positions().as_slice().iter().zip(out.positions().as_slice()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn normalize_keeps_labels() {
        let pc = PointCloud::from_points(&[[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]])
            .unwrap()
            .with_labels(vec![2, 1])
            .unwrap();
        let out = normalize_unit_sphere(&pc).unwrap();
        assert_eq!(out.gt_labels(), Some(&[2, 1][..]));
    }

    #[test]
    fn rejects_non_finite() {
        let m = Matrix::from_vec(1, 3, vec![0.0, f64::NAN, 0.0]).unwrap();
        assert!(matches!(PointCloud::new(m), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn fps_small_cases() {
        let pts = line(&[0.0, 1.0, 10.0]);
        assert_eq!(farthest_point_sampling(&pts, 2, 0).unwrap().as_slice(), &[0, 2]);
        assert_eq!(fps_oracle(&pts, 2, 0), vec![0, 2]);

        let pts = line(&[0.0, 1.0, 9.0, 10.0]);
        assert_eq!(fps_oracle(&pts, 3, 0), vec![0, 3, 1]);
        assert_eq!(farthest_point_sampling(&pts, 3, 0).unwrap().as_slice(), &[0, 3, 1]);
    }

    #[test]
    fn fps_errors() {
        let pts = line(&[0.0, 1.0]);
        assert!(matches!(
            farthest_point_sampling(&pts, 3, 0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(farthest_point_sampling(&pts, 1, 2).is_err());
    }

    #[test]
    fn fps_full_is_permutation_and_prefix_stable() {
        let mut rng = SplitMix64::seed_from_u64(11);
        for _ in 0..20 {
            let n = rng.gen_range(1..40);
            let pts = random_points(&mut rng, n, 3);
            let full = farthest_point_sampling(&pts, n, 0).unwrap().into_vec();
            let mut sorted = full.clone();
            sorted.sort_unstable();
            assert_eq!(sorted, (0..n).collect::<Vec<_>>());
            let m = rng.gen_range(1..=n);
            let part = farthest_point_sampling(&pts, m, 0).unwrap();
            assert_eq!(part.as_slice(), &full[..m]);
        }
    }

    #[test]
    fn fps_matches_oracle_on_random_instances() {
        let mut rng = SplitMix64::seed_from_u64(5);
        for _ in 0..100 {
            let n = rng.gen_range(1..=64);
            let d = rng.gen_range(1..=4);
            let pts = random_points(&mut rng, n, d);
            let m = rng.gen_range(1..=n);
            let start = rng.gen_range(0..n);
            assert_eq!(
                farthest_point_sampling(&pts, m, start).unwrap().into_vec(),
                fps_oracle(&pts, m, start)
            );
        }
    }

    #[test]
    fn knn_line() {
        let corpus = Matrix::from_rows(&[[1.0, 0.0, 0.0], [2.0, 0.0, 0.0], [3.0, 0.0, 0.0]]).unwrap();
        let q = Matrix::from_rows(&[[0.0, 0.0, 0.0]]).unwrap();
        let nn = knn(&q, &corpus, 2, false).unwrap();
        assert_eq!(nn.indices(0), &[0, 1]);
        assert_eq!(nn.distances(0), &[1.0, 2.0]);

        let q = Matrix::from_rows(&[[2.0, 0.0, 0.0]]).unwrap();
        let nn = knn(&q, &corpus, 1, false).unwrap();
        assert_eq!(nn.indices(0), &[1]);
        assert_eq!(nn.distances(0), &[0.0]);
    }

    #[test]
    fn knn_errors() {
        let corpus = line(&[0.0, 1.0]);
        assert!(knn(&corpus, &corpus, 0, false).is_err());
        assert!(knn(&corpus, &corpus, 3, false).is_err());
        assert!(knn(&corpus, &corpus, 2, true).is_err());
        assert!(knn(&corpus, &corpus, 1, true).is_ok());
    }

    #[test]
    fn knn_exclude_self() {
        let corpus = line(&[0.0, 1.0, 3.0]);
        let nn = knn(&corpus, &corpus, 1, true).unwrap();
        assert_eq!(nn.indices(0), &[1]);
        assert_eq!(nn.indices(1), &[0]);
        assert_eq!(nn.indices(2), &[1]);
    }

    #[test]
    fn knn_matches_exhaustive_scan() {
        let mut rng = SplitMix64::seed_from_u64(17);
        let corpus = random_points(&mut rng, 200, 3);
        let queries = random_points(&mut rng, 50, 3);
        let nn = knn(&queries, &corpus, 5, false).unwrap();
        for q in 0..queries.rows() {
            assert_eq!(nn.indices(q), &knn_oracle(queries.row(q), &corpus, 5)[..]);
        }
    }

    proptest! {
        #[test]
        fn knn_permutation_invariant(seed in 0u64..1000, k in 1usize..6) {
            let mut rng = SplitMix64::seed_from_u64(seed);
            let corpus = random_points(&mut rng, 30, 3);
            let queries = random_points(&mut rng, 5, 3);
            let mut perm: Vec<usize> = (0..30).collect();
            for i in (1..30).rev() {
                perm.swap(i, rng.gen_range(0..=i));
            }
            let shuffled = corpus.select_rows(&perm);
            let a = knn(&queries, &corpus, k, false).unwrap();
            let b = knn(&queries, &shuffled, k, false).unwrap();
            for q in 0..5 {
                let mapped: Vec<usize> = b.indices(q).iter().map(|&j| perm[j]).collect();
                prop_assert_eq!(a.indices(q), &mapped[..]);
                prop_assert!(a.distances(q).windows(2).all(|w| w[0] <= w[1]));
            }
        }
    }
}
