//! Generalized weighted k-medoids selection over an m x n cost matrix:
//! choose k rows minimizing the weighted sum of per-column minima.
//!
//! Three solvers share one problem type: a greedy row-at-a-time heuristic,
//! an alternating (EM-style) assign/update local search, and an exhaustive
//! oracle for small instances. All tie-breaking is by smallest row index, so
//! every solver is deterministic; the EM solver additionally derives its
//! starting rows from an explicit seed.

use crate::analytics::CostMatrix;
use crate::error::Error;
use crate::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Default cap on the number of subsets the exhaustive oracle will visit.
pub const DEFAULT_SUBSET_BUDGET: u128 = 2_000_000;

/// A weighted row-selection problem: `cost` is row-major m x n, `weights`
/// has one non-negative entry per column, and `k` rows are to be chosen.
#[derive(Debug, Clone)]
pub struct SelectionProblem {
    m: usize,
    n: usize,
    cost: Vec<f64>,
    weights: Vec<f64>,
    k: usize,
}

impl SelectionProblem {
    pub fn new(m: usize, n: usize, cost: Vec<f64>, weights: Vec<f64>, k: usize) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::invalid("selection problem must have m, n >= 1"));
        }
        if cost.len() != m * n {
            return Err(Error::invalid(format!(
                "cost matrix has {} entries, expected {m} x {n}",
                cost.len()
            )));
        }
        if let Some(bad) = cost.iter().find(|c| !c.is_finite()) {
            return Err(Error::NonFinite {
                field: "cost".to_string(),
                value: *bad,
            });
        }
        if weights.len() != n {
            return Err(Error::invalid(format!(
                "weight vector length {} does not match n = {n}",
                weights.len()
            )));
        }
        if let Some(bad) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::invalid(format!(
                "weights must be finite and >= 0, got {bad}"
            )));
        }
        if k < 1 || k > m {
            return Err(Error::invalid(format!("k = {k} out of range 1..={m}")));
        }
        Ok(SelectionProblem {
            m,
            n,
            cost,
            weights,
            k,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], weights: Vec<f64>, k: usize) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("ragged cost matrix"));
        }
        let cost = rows.iter().flatten().copied().collect();
        SelectionProblem::new(m, n, cost, weights, k)
    }

    /// Build the square problem the box application uses: substitution costs
    /// with per-box weights.
    pub fn from_cost_matrix(matrix: &CostMatrix, weights: Vec<f64>, k: usize) -> Result<Self> {
        SelectionProblem::new(matrix.n(), matrix.n(), matrix.data().to_vec(), weights, k)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn cost(&self, i: usize, j: usize) -> f64 {
        self.cost[i * self.n + j]
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.cost[i * self.n..(i + 1) * self.n]
    }

    fn validate_rows(&self, rows: &[usize]) -> Result<()> {
        if rows.is_empty() {
            return Err(Error::invalid("row set is empty"));
        }
        let mut seen = vec![false; self.m];
        for &r in rows {
            if r >= self.m {
                return Err(Error::invalid(format!(
                    "row index {r} out of range 0..{}",
                    self.m
                )));
            }
            if seen[r] {
                return Err(Error::invalid(format!("duplicate row index {r}")));
            }
            seen[r] = true;
        }
        Ok(())
    }
}

/// A solved selection: the chosen rows (in selection order where the solver
/// has one), the objective value, and each column's assigned row.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub rows: Vec<usize>,
    pub objective: f64,
    /// For each column, the selected row achieving its minimum (smallest
    /// index on ties).
    pub assignment: Vec<usize>,
}

impl Selection {
    fn from_rows(problem: &SelectionProblem, rows: Vec<usize>) -> Self {
        let assignment = assign_columns(problem, &rows);
        let objective = objective_of_assignment(problem, &assignment);
        Selection {
            rows,
            objective,
            assignment,
        }
    }
}

fn assign_columns(problem: &SelectionProblem, rows: &[usize]) -> Vec<usize> {
    let mut sorted = rows.to_vec();
    sorted.sort_unstable();
    (0..problem.n)
        .map(|j| {
            let mut best_row = sorted[0];
            let mut best = problem.cost(best_row, j);
            for &i in &sorted[1..] {
                let c = problem.cost(i, j);
                if c < best {
                    best = c;
                    best_row = i;
                }
            }
            best_row
        })
        .collect()
}

fn objective_of_assignment(problem: &SelectionProblem, assignment: &[usize]) -> f64 {
    assignment
        .iter()
        .enumerate()
        .map(|(j, &i)| problem.weights[j] * problem.cost(i, j))
        .sum()
}

/// The weighted sum of column minima restricted to `rows`.
pub fn objective(problem: &SelectionProblem, rows: &[usize]) -> Result<f64> {
    problem.validate_rows(rows)?;
    let assignment = assign_columns(problem, rows);
    Ok(objective_of_assignment(problem, &assignment))
}

/// Greedy row selection: repeatedly add the row that most lowers the
/// weighted sum of running column minima, ties to the smallest index.
/// Weights are folded in by scaling each column before comparison, so the
/// step objective is exactly the selection objective of the rows so far.
pub fn solve_greedy(problem: &SelectionProblem) -> Selection {
    let (m, n) = (problem.m, problem.n);
    let mut running_min = vec![f64::INFINITY; n];
    let mut selected = Vec::with_capacity(problem.k);
    let mut in_set = vec![false; m];

    for _ in 0..problem.k {
        let mut best_row = usize::MAX;
        let mut best_sum = f64::INFINITY;
        for (i, &taken) in in_set.iter().enumerate() {
            if taken {
                continue;
            }
            let row = problem.row(i);
            let mut sum = 0.0;
            for j in 0..n {
                let scaled = problem.weights[j] * row[j];
                sum += if scaled < running_min[j] {
                    scaled
                } else {
                    running_min[j]
                };
            }
            if sum < best_sum {
                best_sum = sum;
                best_row = i;
            }
        }
        debug_assert!(best_row != usize::MAX);
        let row = problem.row(best_row);
        for j in 0..n {
            let scaled = problem.weights[j] * row[j];
            if scaled < running_min[j] {
                running_min[j] = scaled;
            }
        }
        in_set[best_row] = true;
        selected.push(best_row);
    }

    Selection::from_rows(problem, selected)
}

/// Restarts used by [`solve_em`] when no initial row set is given. A single
/// alternation converges to a weak local optimum within a few rounds, so the
/// practical EM solver is best-of-several seeded starts.
pub const DEFAULT_EM_RESTARTS: usize = 20;

/// Alternating assign/update local search.
///
/// Each round assigns every column to its cheapest selected row, then each
/// medoid is replaced by the row minimizing the weighted cost over its
/// cluster's columns, candidates ranging over all rows not selected
/// elsewhere. A start stops when the row set is stable, the objective would
/// rise, or `max_iter` rounds have run.
///
/// With `init` the search runs once from those rows; without it the solver
/// runs [`DEFAULT_EM_RESTARTS`] seeded starts and keeps the best result.
/// Deterministic given the seed.
pub fn solve_em(
    problem: &SelectionProblem,
    init: Option<&[usize]>,
    max_iter: usize,
    seed: u64,
) -> Result<Selection> {
    match init {
        Some(_) => solve_em_with_trace(problem, init, max_iter, seed).map(|(s, _)| s),
        None => solve_em_restarts(problem, DEFAULT_EM_RESTARTS, max_iter, seed),
    }
}

/// Best of `restarts` seeded EM starts. Ties keep the earliest start.
pub fn solve_em_restarts(
    problem: &SelectionProblem,
    restarts: usize,
    max_iter: usize,
    seed: u64,
) -> Result<Selection> {
    if restarts < 1 {
        return Err(Error::invalid("restarts must be >= 1"));
    }
    let mut best: Option<Selection> = None;
    for start in 0..restarts {
        let start_seed = seed.wrapping_add(start as u64);
        let (candidate, _) = solve_em_with_trace(problem, None, max_iter, start_seed)?;
        let better = match &best {
            None => true,
            Some(b) => candidate.objective < b.objective,
        };
        if better {
            best = Some(candidate);
        }
    }
    Ok(best.expect("restarts >= 1"))
}

/// One EM start, also returning the objective after initialization and after
/// every accepted round.
pub fn solve_em_with_trace(
    problem: &SelectionProblem,
    init: Option<&[usize]>,
    max_iter: usize,
    seed: u64,
) -> Result<(Selection, Vec<f64>)> {
    if max_iter < 1 {
        return Err(Error::invalid("max_iter must be >= 1"));
    }
    let mut rows = match init {
        Some(rows) => {
            problem.validate_rows(rows)?;
            if rows.len() != problem.k {
                return Err(Error::invalid(format!(
                    "init has {} rows, expected k = {}",
                    rows.len(),
                    problem.k
                )));
            }
            let mut rows = rows.to_vec();
            rows.sort_unstable();
            rows
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut rows = rand::seq::index::sample(&mut rng, problem.m, problem.k).into_vec();
            rows.sort_unstable();
            rows
        }
    };

    let mut current_objective = objective(problem, &rows)?;
    let mut trace = vec![current_objective];

    for _ in 0..max_iter {
        let assignment = assign_columns(problem, &rows);
        let mut next = rows.clone();
        // Clusters in ascending medoid order; replacements take effect
        // immediately so later clusters see the updated set.
        for slot in 0..next.len() {
            let medoid = next[slot];
            let cluster: Vec<usize> = assignment
                .iter()
                .enumerate()
                .filter_map(|(j, &a)| (a == medoid).then_some(j))
                .collect();
            let mut best_row = medoid;
            let mut best_cost = cluster_cost(problem, medoid, &cluster);
            for i in 0..problem.m {
                if i == medoid || next.contains(&i) {
                    continue;
                }
                let c = cluster_cost(problem, i, &cluster);
                if c < best_cost || (c == best_cost && i < best_row) {
                    best_cost = c;
                    best_row = i;
                }
            }
            next[slot] = best_row;
        }
        next.sort_unstable();
        if next == rows {
            break;
        }
        let next_objective = objective(problem, &next)?;
        if next_objective > current_objective {
            break;
        }
        rows = next;
        current_objective = next_objective;
        trace.push(current_objective);
    }

    Ok((Selection::from_rows(problem, rows), trace))
}

fn cluster_cost(problem: &SelectionProblem, row: usize, columns: &[usize]) -> f64 {
    columns
        .iter()
        .map(|&j| problem.weights[j] * problem.cost(row, j))
        .sum()
}

/// Number of k-subsets of m, saturating at `u128::MAX`.
pub fn subset_count(m: usize, k: usize) -> u128 {
    if k > m {
        return 0;
    }
    let k = k.min(m - k);
    let mut acc: u128 = 1;
    for t in 0..k {
        let Some(mul) = acc.checked_mul((m - t) as u128) else {
            return u128::MAX;
        };
        acc = mul / (t as u128 + 1);
    }
    acc
}

/// Global optimum by enumerating every k-subset, ties resolved to the
/// lexicographically smallest row set. Refuses when `C(m, k)` exceeds the
/// default budget.
pub fn solve_exhaustive(problem: &SelectionProblem) -> Result<Selection> {
    solve_exhaustive_with_budget(problem, DEFAULT_SUBSET_BUDGET)
}

pub fn solve_exhaustive_with_budget(problem: &SelectionProblem, budget: u128) -> Result<Selection> {
    let (m, k) = (problem.m, problem.k);
    let combinations = subset_count(m, k);
    if combinations > budget {
        return Err(Error::BudgetExceeded {
            m,
            k,
            combinations,
            budget,
        });
    }

    let mut subset: Vec<usize> = (0..k).collect();
    let mut best_rows: Option<Vec<usize>> = None;
    let mut best_objective = f64::INFINITY;
    loop {
        let value = objective(problem, &subset)?;
        if value < best_objective {
            best_objective = value;
            best_rows = Some(subset.clone());
        }
        // Advance to the next combination in lexicographic order.
        let mut idx = k;
        loop {
            if idx == 0 {
                return Ok(Selection::from_rows(
                    problem,
                    best_rows.expect("at least one subset evaluated"),
                ));
            }
            idx -= 1;
            if subset[idx] != idx + m - k {
                break;
            }
        }
        subset[idx] += 1;
        for t in idx + 1..k {
            subset[t] = subset[t - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem(rows: &[Vec<f64>], weights: &[f64], k: usize) -> SelectionProblem {
        SelectionProblem::from_rows(rows, weights.to_vec(), k).unwrap()
    }

    #[test]
    fn objective_single_cell() {
        let p = problem(&[vec![-1.0]], &[2.0], 1);
        assert_eq!(objective(&p, &[0]).unwrap(), -2.0);
    }

    #[test]
    fn objective_full_selection_is_weighted_column_minima() {
        let p = problem(
            &[vec![-1.0, 0.0, -0.5], vec![0.0, -2.0, -0.25]],
            &[1.0, 2.0, 4.0],
            2,
        );
        assert_eq!(
            objective(&p, &[0, 1]).unwrap(),
            -1.0 + 2.0 * -2.0 + 4.0 * -0.5
        );
    }

    #[test]
    fn objective_hand_example() {
        let p = problem(&[vec![-1.0, 0.0], vec![0.0, -1.0]], &[1.0, 3.0], 1);
        assert_eq!(objective(&p, &[1]).unwrap(), -3.0);
    }

    #[test]
    fn objective_rejects_empty_and_duplicates() {
        let p = problem(&[vec![-1.0]], &[1.0], 1);
        assert!(objective(&p, &[]).is_err());
        let p2 = problem(&[vec![-1.0, 0.0], vec![0.0, -1.0]], &[1.0, 1.0], 2);
        assert!(objective(&p2, &[0, 0]).is_err());
    }

    fn suboptimality_instance() -> SelectionProblem {
        problem(
            &[
                vec![-1.0, -1.0, 0.0],
                vec![0.0, 0.0, -1.0],
                vec![-0.9, -0.9, -0.9],
            ],
            &[1.0, 1.0, 1.0],
            2,
        )
    }

    #[test]
    fn greedy_first_step_picks_best_single_row() {
        let p = suboptimality_instance();
        let sel = solve_greedy(&p);
        // Step 1 takes the best single row (row 2, sum -2.7), step 2 adds
        // row 0 (-2.9 beats row 1's -2.8).
        assert_eq!(sel.rows, vec![2, 0]);
        assert!((sel.objective - (-2.9)).abs() < 1e-12);
    }

    #[test]
    fn greedy_is_suboptimal_on_the_known_instance() {
        let p = suboptimality_instance();
        let greedy = solve_greedy(&p);
        let optimal = solve_exhaustive(&p).unwrap();
        assert_eq!(optimal.rows, vec![0, 1]);
        assert!((optimal.objective - (-3.0)).abs() < 1e-12);
        assert!(greedy.objective > optimal.objective);
    }

    #[test]
    fn greedy_k_equals_m_selects_all_rows() {
        let p = problem(&[vec![-1.0, 0.0], vec![0.0, -1.0]], &[1.0, 1.0], 2);
        let mut rows = solve_greedy(&p).rows;
        rows.sort_unstable();
        assert_eq!(rows, vec![0, 1]);
    }

    #[test]
    fn greedy_k1_minimizes_weighted_row_sum() {
        let p = problem(&[vec![-1.0, -0.1], vec![-0.2, -2.0]], &[1.0, 1.0], 1);
        assert_eq!(solve_greedy(&p).rows, vec![1]);
    }

    #[test]
    fn selection_assignment_achieves_column_minima() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let rows: Vec<Vec<f64>> = (0..7)
            .map(|_| (0..9).map(|_| -rng.gen::<f64>()).collect())
            .collect();
        let weights: Vec<f64> = (0..9).map(|_| rng.gen::<f64>()).collect();
        let p = problem(&rows, &weights, 3);
        let sel = solve_greedy(&p);
        for (j, &assigned) in sel.assignment.iter().enumerate() {
            assert!(sel.rows.contains(&assigned));
            let min = sel
                .rows
                .iter()
                .map(|&i| p.cost(i, j))
                .fold(f64::INFINITY, f64::min);
            assert_eq!(p.cost(assigned, j), min);
        }
        let recomputed = objective(&p, &sel.rows).unwrap();
        assert!((sel.objective - recomputed).abs() <= 1e-12 * recomputed.abs());
    }

    #[test]
    fn exhaustive_breaks_ties_lexicographically() {
        let p = problem(&[vec![-1.0, 0.0], vec![0.0, -1.0]], &[1.0, 1.0], 1);
        let sel = solve_exhaustive(&p).unwrap();
        assert_eq!(sel.rows, vec![0]);
        assert_eq!(sel.objective, -1.0);
    }

    #[test]
    fn exhaustive_k_equals_m() {
        let p = problem(&[vec![-1.0, 0.0], vec![0.0, -1.0]], &[1.0, 1.0], 2);
        assert_eq!(solve_exhaustive(&p).unwrap().rows, vec![0, 1]);
    }

    #[test]
    fn exhaustive_respects_budget() {
        let rows: Vec<Vec<f64>> = (0..30).map(|_| vec![0.0; 2]).collect();
        let p = problem(&rows, &[1.0, 1.0], 15);
        let err = solve_exhaustive_with_budget(&p, 1000).unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("155117520"),
            "message should name C(30, 15): {msg}"
        );
    }

    #[test]
    fn subset_count_values() {
        assert_eq!(subset_count(3, 2), 3);
        assert_eq!(subset_count(12, 4), 495);
        assert_eq!(subset_count(30, 15), 155_117_520);
        assert_eq!(subset_count(2, 3), 0);
    }

    #[test]
    fn em_fixed_point_at_optimum() {
        let p = problem(
            &[
                vec![-1.0, -0.2, 0.0],
                vec![0.0, -0.1, -1.0],
                vec![-0.5, -0.9, -0.5],
            ],
            &[1.0, 1.0, 1.0],
            2,
        );
        let optimal = solve_exhaustive(&p).unwrap();
        let em = solve_em(&p, Some(&optimal.rows), 50, 0).unwrap();
        let mut expected = optimal.rows.clone();
        expected.sort_unstable();
        assert_eq!(em.rows, expected);
        assert_eq!(em.objective, optimal.objective);
    }

    #[test]
    fn em_k_equals_m_converges_immediately() {
        let p = problem(&[vec![-1.0, 0.0], vec![0.0, -1.0]], &[1.0, 1.0], 2);
        let sel = solve_em(&p, None, 10, 7).unwrap();
        assert_eq!(sel.rows, vec![0, 1]);
    }

    #[test]
    fn em_objective_never_worse_than_start() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for trial in 0..100 {
            let rows: Vec<Vec<f64>> = (0..8)
                .map(|_| (0..8).map(|_| -rng.gen::<f64>()).collect())
                .collect();
            let weights: Vec<f64> = (0..8).map(|_| rng.gen::<f64>()).collect();
            let p = problem(&rows, &weights, 3);
            let (sel, trace) = solve_em_with_trace(&p, None, 100, trial).unwrap();
            assert!(sel.objective <= trace[0] + 1e-12);
            for pair in trace.windows(2) {
                assert!(pair[1] <= pair[0] + 1e-12, "objective rose: {pair:?}");
            }
        }
    }

    #[test]
    fn em_rejects_zero_max_iter() {
        let p = problem(&[vec![-1.0]], &[1.0], 1);
        assert!(solve_em(&p, None, 0, 0).is_err());
    }

    #[test]
    fn weight_scaling_preserves_selected_rows() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let rows: Vec<Vec<f64>> = (0..6)
                .map(|_| (0..6).map(|_| -rng.gen::<f64>()).collect())
                .collect();
            let weights: Vec<f64> = (0..6).map(|_| rng.gen::<f64>() + 0.1).collect();
            let scaled: Vec<f64> = weights.iter().map(|w| w * 7.25).collect();
            let p1 = problem(&rows, &weights, 3);
            let p2 = problem(&rows, &scaled, 3);
            assert_eq!(solve_greedy(&p1).rows, solve_greedy(&p2).rows);
            assert_eq!(
                solve_exhaustive(&p1).unwrap().rows,
                solve_exhaustive(&p2).unwrap().rows
            );
        }
    }

    /// True when every greedy step has a strict arg-min: index tie-breaking
    /// never fires, so permuting rows must permute the selection.
    fn greedy_steps_are_tie_free(p: &SelectionProblem) -> bool {
        let mut prefix: Vec<usize> = Vec::new();
        for _ in 0..p.k() {
            let mut best: Option<(usize, f64)> = None;
            let mut tie = false;
            for i in 0..p.m() {
                if prefix.contains(&i) {
                    continue;
                }
                let mut rows = prefix.clone();
                rows.push(i);
                let value = objective(p, &rows).unwrap();
                match best {
                    None => best = Some((i, value)),
                    Some((_, bv)) if value < bv => {
                        best = Some((i, value));
                        tie = false;
                    }
                    Some((_, bv)) if value == bv => tie = true,
                    _ => {}
                }
            }
            if tie {
                return false;
            }
            prefix.push(best.unwrap().0);
        }
        true
    }

    #[test]
    fn permutation_equivariance_on_tie_free_instances() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut tested = 0;
        for _ in 0..40 {
            // Many more columns than rows so each row improves somewhere
            // and greedy step ties are rare.
            let (m, n) = (6, 40);
            let rows: Vec<Vec<f64>> = (0..m)
                .map(|_| (0..n).map(|_| -rng.gen::<f64>()).collect())
                .collect();
            let weights = vec![1.0; n];
            let p = problem(&rows, &weights, 2);
            if !greedy_steps_are_tie_free(&p) {
                continue;
            }
            tested += 1;
            let mut rotated = rows.clone();
            rotated.rotate_left(1);
            let q = problem(&rotated, &weights, 2);
            let map = |i: usize| (i + m - 1) % m; // original index -> rotated index
            let mut mapped: Vec<usize> = solve_greedy(&p).rows.iter().map(|&i| map(i)).collect();
            let mut got = solve_greedy(&q).rows;
            mapped.sort_unstable();
            got.sort_unstable();
            assert_eq!(got, mapped);
        }
        assert!(tested >= 20, "only {tested} tie-free instances out of 40");
    }

    #[test]
    fn zero_weight_columns_do_not_influence_selection() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let rows: Vec<Vec<f64>> = (0..6)
                .map(|_| (0..6).map(|_| -rng.gen::<f64>()).collect())
                .collect();
            let mut weights: Vec<f64> = (0..6).map(|_| rng.gen::<f64>() + 0.1).collect();
            weights[2] = 0.0;
            weights[4] = 0.0;
            let full = problem(&rows, &weights, 2);

            let kept: Vec<usize> = (0..6).filter(|j| weights[*j] > 0.0).collect();
            let reduced_rows: Vec<Vec<f64>> = rows
                .iter()
                .map(|r| kept.iter().map(|&j| r[j]).collect())
                .collect();
            let reduced_weights: Vec<f64> = kept.iter().map(|&j| weights[j]).collect();
            let reduced = problem(&reduced_rows, &reduced_weights, 2);

            assert_eq!(solve_greedy(&full).rows, solve_greedy(&reduced).rows);
            assert_eq!(
                solve_exhaustive(&full).unwrap().rows,
                solve_exhaustive(&reduced).unwrap().rows
            );
        }
    }
}
