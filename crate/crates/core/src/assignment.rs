//! Dense rectangular linear assignment (Hungarian algorithm with potentials).

/// Minimum-cost assignment of every row to a distinct column for a
/// `rows × cols` row-major cost matrix with `rows <= cols`.
/// Returns the column of each row.
fn solve_wide(cost: &[f64], rows: usize, cols: usize) -> Vec<usize> {
    debug_assert!(rows <= cols);
    let inf = f64::INFINITY;
    let mut u = vec![0.0; rows + 1];
    let mut v = vec![0.0; cols + 1];
    // p[j]: row (1-based) assigned to column j; 0 = free
    let mut p = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];

    for i in 1..=rows {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=cols {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * cols + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=cols {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0usize; rows];
    for j in 1..=cols {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Minimum-cost rectangular assignment. Every row of the smaller side is
/// assigned; returns `(row, col)` pairs sorted by row.
pub fn min_cost_assignment(cost: &[f64], rows: usize, cols: usize) -> Vec<(usize, usize)> {
    assert_eq!(cost.len(), rows * cols, "cost matrix shape");
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    let mut pairs: Vec<(usize, usize)> = if rows <= cols {
        solve_wide(cost, rows, cols).into_iter().enumerate().collect()
    } else {
        let mut t = vec![0.0; rows * cols];
        for i in 0..rows {
            for j in 0..cols {
                t[j * rows + i] = cost[i * cols + j];
            }
        }
        solve_wide(&t, cols, rows).into_iter().enumerate().map(|(j, i)| (i, j)).collect()
    };
    pairs.sort_unstable();
    pairs
}

/// Maximum total-weight one-to-one matching restricted to eligible entries.
/// Weights of eligible entries must be non-negative. Pairs sorted by row.
pub fn max_weight_matching(weights: &[f64], eligible: &[bool], rows: usize, cols: usize) -> Vec<(usize, usize)> {
    assert_eq!(weights.len(), rows * cols);
    assert_eq!(eligible.len(), rows * cols);
    // skipping a row is equivalent to taking a zero-weight ineligible cell
    let cost: Vec<f64> = weights
        .iter()
        .zip(eligible)
        .map(|(&w, &ok)| if ok { -w } else { 0.0 })
        .collect();
    min_cost_assignment(&cost, rows, cols)
        .into_iter()
        .filter(|&(i, j)| eligible[i * cols + j])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_known_optimum() {
        let cost = [4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0];
        let a = min_cost_assignment(&cost, 3, 3);
        let total: f64 = a.iter().map(|&(i, j)| cost[i * 3 + j]).sum();
        assert_eq!(total, 5.0);
    }

    #[test]
    fn tall_and_wide_shapes() {
        let cost = [1.0, 9.0, 9.0, 1.0, 5.0, 5.0];
        let a = min_cost_assignment(&cost, 3, 2);
        assert_eq!(a, vec![(0, 0), (1, 1)]);
        let cost_t = [1.0, 9.0, 5.0, 9.0, 1.0, 5.0];
        let a = min_cost_assignment(&cost_t, 2, 3);
        assert_eq!(a, vec![(0, 0), (1, 1)]);
    }

    #[test]
    fn empty_inputs() {
        assert!(min_cost_assignment(&[], 0, 4).is_empty());
        assert!(max_weight_matching(&[], &[], 3, 0).is_empty());
    }

    #[test]
    fn ineligible_cells_never_returned() {
        let w = [0.9, 0.2, 0.3, 0.8];
        let m = max_weight_matching(&w, &[true, false, false, false], 2, 2);
        assert_eq!(m, vec![(0, 0)]);
    }
}
