//! Maximum-weight perfect matching on a square matrix (Hungarian algorithm,
//! shortest augmenting paths with potentials, O(n³)).

/// Minimum-cost assignment of rows to columns. `cost` is `n × n`; returns
/// the column of each row.
fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    // 1-based internally; column 0 is a virtual source.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut row_of_col = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for row in 1..=n {
        row_of_col[0] = row;
        let mut col0 = 0usize;
        let mut min_to = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[col0] = true;
            let r = row_of_col[col0];
            let mut delta = f64::INFINITY;
            let mut col1 = 0usize;
            for col in 1..=n {
                if used[col] {
                    continue;
                }
                let reduced = cost[r - 1][col - 1] - u[r] - v[col];
                if reduced < min_to[col] {
                    min_to[col] = reduced;
                    way[col] = col0;
                }
                if min_to[col] < delta {
                    delta = min_to[col];
                    col1 = col;
                }
            }
            for col in 0..=n {
                if used[col] {
                    u[row_of_col[col]] += delta;
                    v[col] -= delta;
                } else {
                    min_to[col] -= delta;
                }
            }
            col0 = col1;
            if row_of_col[col0] == 0 {
                break;
            }
        }
        loop {
            let prev = way[col0];
            row_of_col[col0] = row_of_col[prev];
            col0 = prev;
            if col0 == 0 {
                break;
            }
        }
    }

    let mut col_of_row = vec![0usize; n];
    for col in 1..=n {
        col_of_row[row_of_col[col] - 1] = col - 1;
    }
    col_of_row
}

fn best_total(weights: &[Vec<f64>]) -> f64 {
    let cost: Vec<Vec<f64>> = weights.iter().map(|r| r.iter().map(|w| -w).collect()).collect();
    min_cost_assignment(&cost)
        .iter()
        .enumerate()
        .map(|(i, &j)| weights[i][j])
        .sum()
}

/// Assignment maximising the total weight; among optimal assignments, the
/// lexicographically smallest column vector is returned.
///
/// # Panics
/// If `weights` is not square.
pub fn max_weight_assignment(weights: &[Vec<f64>]) -> Vec<usize> {
    let n = weights.len();
    assert!(weights.iter().all(|r| r.len() == n), "weight matrix must be square");
    if n == 0 {
        return Vec::new();
    }
    let optimum = best_total(weights);
    let scale = weights.iter().flatten().fold(1.0f64, |m, w| m.max(w.abs()));
    let tol = 1e-9 * scale * n as f64;

    // Fix rows one at a time to the smallest column that still admits an
    // optimal completion.
    let mut assignment = Vec::with_capacity(n);
    let mut free_cols: Vec<usize> = (0..n).collect();
    let mut fixed = 0.0;
    for row in 0..n {
        let mut chosen = None;
        for (slot, &col) in free_cols.iter().enumerate() {
            let rest_cols: Vec<usize> = free_cols.iter().copied().filter(|&c| c != col).collect();
            let sub: Vec<Vec<f64>> = (row + 1..n)
                .map(|r| rest_cols.iter().map(|&c| weights[r][c]).collect())
                .collect();
            let total = fixed + weights[row][col] + best_total(&sub);
            if total >= optimum - tol {
                chosen = Some((slot, col));
                break;
            }
        }
        // the optimum is always reachable from an optimal prefix
        let (slot, col) = chosen.expect("optimal completion exists");
        fixed += weights[row][col];
        free_cols.remove(slot);
        assignment.push(col);
    }
    assignment
}
