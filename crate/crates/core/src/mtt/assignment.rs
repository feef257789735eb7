//! Minimum-cost linear assignment (Hungarian / Munkres, shortest augmenting
//! path with potentials) on rectangular cost matrices.

use nalgebra::DMatrix;

/// Optimal one-to-one assignment of rows to columns.
///
/// Returns, for each row, the column it is matched to. When there are more
/// rows than columns some rows stay unmatched, and vice versa. Every cost
/// must be finite.
pub fn solve(cost: &DMatrix<f64>) -> Vec<Option<usize>> {
    let (rows, cols) = cost.shape();
    if rows == 0 || cols == 0 {
        return vec![None; rows];
    }
    if rows > cols {
        let by_col = solve(&cost.transpose());
        let mut by_row = vec![None; rows];
        for (c, r) in by_col.into_iter().enumerate() {
            if let Some(r) = r {
                by_row[r] = Some(c);
            }
        }
        return by_row;
    }

    // 1-based indices; column 0 is the virtual source of each augmentation.
    let (n, m) = (rows, cols);
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut by_row = vec![None; n];
    for j in 1..=m {
        if owner[j] != 0 {
            by_row[owner[j] - 1] = Some(j - 1);
        }
    }
    by_row
}

/// Partition of rows and columns after gated assignment.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Assignment {
    /// `(row, column)` pairs, sorted by row.
    pub pairs: Vec<(usize, usize)>,
    pub unassigned_rows: Vec<usize>,
    pub unassigned_cols: Vec<usize>,
}

impl Assignment {
    pub fn total_cost(&self, cost: &DMatrix<f64>) -> f64 {
        self.pairs.iter().map(|&(r, c)| cost[(r, c)]).sum()
    }
}

/// Assignment restricted to pairs with `cost <= gate`.
///
/// Forbidden pairs carry a penalty larger than any sum of admissible costs,
/// so the solver first maximises the number of gated pairs and then
/// minimises their total cost. Forbidden pairs are dropped afterwards.
pub fn assign_gated(cost: &DMatrix<f64>, gate: f64) -> Assignment {
    let (rows, cols) = cost.shape();
    let admissible = |c: f64| c.is_finite() && c <= gate;
    let max_ok = cost
        .iter()
        .copied()
        .filter(|&c| admissible(c))
        .fold(0.0f64, |a, c| a.max(c.abs()));
    let penalty = (rows.min(cols) as f64 + 1.0) * (max_ok + 1.0) * 2.0;
    let masked = cost.map(|c| if admissible(c) { c } else { penalty });

    let by_row = solve(&masked);
    let mut pairs = Vec::new();
    let mut col_used = vec![false; cols];
    let mut unassigned_rows = Vec::new();
    for (r, c) in by_row.into_iter().enumerate() {
        match c {
            Some(c) if admissible(cost[(r, c)]) => {
                pairs.push((r, c));
                col_used[c] = true;
            }
            _ => unassigned_rows.push(r),
        }
    }
    let unassigned_cols = (0..cols).filter(|&c| !col_used[c]).collect();
    Assignment {
        pairs,
        unassigned_rows,
        unassigned_cols,
    }
}
