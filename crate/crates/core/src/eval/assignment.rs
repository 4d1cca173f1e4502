//! Minimum-cost rectangular assignment (Hungarian method with potentials).

/// Solves `min sum cost[i][assign[i]]` over injective assignments of the
/// smaller side into the larger one. Returns, for every row, the assigned
/// column (`None` only when there are more rows than columns).
pub fn solve(cost: &[Vec<f64>]) -> Vec<Option<usize>> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let m = cost[0].len();
    assert!(cost.iter().all(|r| r.len() == m), "cost matrix must be rectangular");
    if m == 0 {
        return vec![None; n];
    }
    if n <= m {
        solve_wide(cost, n, m)
    } else {
        let transposed: Vec<Vec<f64>> = (0..m).map(|j| (0..n).map(|i| cost[i][j]).collect()).collect();
        let by_col = solve_wide(&transposed, m, n);
        let mut rows = vec![None; n];
        for (j, i) in by_col.into_iter().enumerate() {
            if let Some(i) = i {
                rows[i] = Some(j);
            }
        }
        rows
    }
}

/// `n <= m`; every row gets a column.
fn solve_wide(cost: &[Vec<f64>], n: usize, m: usize) -> Vec<Option<usize>> {
    // 1-based potentials; column 0 is the virtual start.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
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
    let mut rows = vec![None; n];
    for j in 1..=m {
        if owner[j] != 0 {
            rows[owner[j] - 1] = Some(j - 1);
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn total(cost: &[Vec<f64>], a: &[Option<usize>]) -> f64 {
        a.iter()
            .enumerate()
            .filter_map(|(i, j)| j.map(|j| cost[i][j]))
            .sum()
    }

    /// Exhaustive minimum over injective maps of the smaller side.
    fn brute_force(cost: &[Vec<f64>]) -> f64 {
        fn rec(cost: &[Vec<f64>], i: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
            if i == cost.len() {
                *best = best.min(acc);
                return;
            }
            for j in 0..used.len() {
                if !used[j] {
                    used[j] = true;
                    rec(cost, i + 1, used, acc + cost[i][j], best);
                    used[j] = false;
                }
            }
        }
        let n = cost.len();
        let m = cost[0].len();
        let c: Vec<Vec<f64>> = if n <= m {
            cost.to_vec()
        } else {
            (0..m).map(|j| (0..n).map(|i| cost[i][j]).collect()).collect()
        };
        let mut best = f64::INFINITY;
        rec(&c, 0, &mut vec![false; c[0].len()], 0.0, &mut best);
        best
    }

    #[test]
    fn classic_three_by_three() {
        let cost = vec![vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]];
        let a = solve(&cost);
        assert_eq!(total(&cost, &a), 5.0);
    }

    #[test]
    fn tall_matrix() {
        let cost = vec![vec![1.0], vec![0.5], vec![3.0]];
        assert_eq!(solve(&cost), vec![None, Some(0), None]);
    }

    #[test]
    fn empty() {
        assert!(solve(&[]).is_empty());
        assert_eq!(solve(&[vec![], vec![]]), vec![None, None]);
    }

    proptest! {
        #[test]
        fn matches_brute_force(
            n in 1usize..6,
            m in 1usize..6,
            vals in prop::collection::vec(-10.0f64..10.0, 36),
        ) {
            let cost: Vec<Vec<f64>> = (0..n).map(|i| (0..m).map(|j| vals[i * 6 + j]).collect()).collect();
            let a = solve(&cost);
            let assigned = a.iter().filter(|x| x.is_some()).count();
            prop_assert_eq!(assigned, n.min(m));
            let mut cols: Vec<usize> = a.iter().flatten().copied().collect();
            cols.sort_unstable();
            cols.dedup();
            prop_assert_eq!(cols.len(), assigned);
            prop_assert!((total(&cost, &a) - brute_force(&cost)).abs() < 1e-9);
        }
    }
}
