//! Exact solution of the assignment problem (Kuhn-Munkres with potentials,
//! O(n^3)), used to map hypothesis speakers onto reference speakers.

/// Maximum-total-weight one-to-one assignment of rows to columns.
///
/// `profit[i][j]` is the gain of assigning row `i` to column `j`; profits
/// must be finite. Returns `mapping[i] = Some(j)` for assigned rows. Every
/// row (or column, whichever side is smaller) ends up assigned; with
/// non-negative profits that is always optimal.
pub fn max_weight_assignment(profit: &[Vec<f64>]) -> Vec<Option<usize>> {
    let n_rows = profit.len();
    let n_cols = profit.first().map_or(0, |r| r.len());
    if n_rows == 0 || n_cols == 0 {
        return vec![None; n_rows];
    }
    if n_rows <= n_cols {
        min_cost_rows(&negate(profit))
    } else {
        // transpose so rows <= cols, then invert the mapping
        let t: Vec<Vec<f64>> = (0..n_cols)
            .map(|j| (0..n_rows).map(|i| profit[i][j]).collect())
            .collect();
        let col_to_row = min_cost_rows(&negate(&t));
        let mut mapping = vec![None; n_rows];
        for (col, row) in col_to_row.into_iter().enumerate() {
            if let Some(r) = row {
                mapping[r] = Some(col);
            }
        }
        mapping
    }
}

fn negate(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    m.iter().map(|r| r.iter().map(|v| -v).collect()).collect()
}

/// Minimum-cost assignment of every row to a distinct column; requires
/// rows <= cols. Classic potentials formulation, 1-indexed internally.
fn min_cost_rows(cost: &[Vec<f64>]) -> Vec<Option<usize>> {
    let n = cost.len();
    let m = cost[0].len();
    debug_assert!(n <= m);
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut matched = vec![0usize; m + 1]; // matched[j] = row occupying col j
    let mut way = vec![0usize; m + 1];

    for i in 1..=n {
        matched[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = matched[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
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
                    u[matched[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched[j0] = matched[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut mapping = vec![None; n];
    for j in 1..=m {
        if matched[j] != 0 {
            mapping[matched[j] - 1] = Some(j - 1);
        }
    }
    mapping
}

#[cfg(test)]
mod tests {
    use super::*;

    fn total(profit: &[Vec<f64>], mapping: &[Option<usize>]) -> f64 {
        mapping
            .iter()
            .enumerate()
            .filter_map(|(i, j)| j.map(|j| profit[i][j]))
            .sum()
    }

    /// All one-to-one assignments of rows to columns, brute force.
    fn brute_best(profit: &[Vec<f64>]) -> f64 {
        let m = profit[0].len();
        let mut best = f64::NEG_INFINITY;
        fn rec(profit: &[Vec<f64>], row: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
            if row == profit.len() {
                *best = best.max(acc);
                return;
            }
            for j in 0..used.len() {
                if !used[j] {
                    used[j] = true;
                    rec(profit, row + 1, used, acc + profit[row][j], best);
                    used[j] = false;
                }
            }
            // row may stay unassigned (needed when rows outnumber columns)
            rec(profit, row + 1, used, acc, best);
        }
        let mut used = vec![false; m];
        rec(profit, 0, &mut used, 0.0, &mut best);
        best
    }

    #[test]
    fn small_known_case() {
        let profit = vec![vec![3.0, 1.0], vec![1.0, 2.0]];
        let mapping = max_weight_assignment(&profit);
        assert_eq!(mapping, vec![Some(0), Some(1)]);
        assert_eq!(total(&profit, &mapping), 5.0);
    }

    #[test]
    fn matches_brute_force_on_random_rectangles() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.gen_range(1..=5);
            let m = rng.gen_range(1..=5);
            let profit: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..m).map(|_| rng.gen_range(0.0..10.0)).collect())
                .collect();
            let mapping = max_weight_assignment(&profit);
            // one-to-one
            let mut seen = std::collections::BTreeSet::new();
            for j in mapping.iter().flatten() {
                assert!(seen.insert(*j), "column used twice");
            }
            let got = total(&profit, &mapping);
            let best = brute_best(&profit);
            assert!(
                (got - best).abs() < 1e-9,
                "n={n} m={m}: got {got}, brute {best}"
            );
        }
    }
}
