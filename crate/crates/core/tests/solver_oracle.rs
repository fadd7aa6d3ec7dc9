//! Oracle-based solver tests: the heuristics never beat the exhaustive
//! optimum, objectives degrade monotonically, and both heuristics behave on
//! the structured substitution-cost instances the box application produces.

use boxassort::analytics::build_cost_matrix;
use boxassort::model::{BoxType, CandidatePool};
use boxassort::solver::{
    objective, solve_em_with_trace, solve_exhaustive, solve_greedy, SelectionProblem,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_problem(seed: u64) -> SelectionProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(3..=10);
    let k = rng.gen_range(1..=3.min(n));
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| -rng.gen::<f64>()).collect())
        .collect();
    let weights: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 2.0).collect();
    SelectionProblem::from_rows(&rows, weights, k).unwrap()
}

fn structured_problem(seed: u64) -> SelectionProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(4..=10);
    let mut boxes = Vec::new();
    while boxes.len() < n {
        let b = BoxType::new(
            format!("b{seed}-{}", boxes.len()),
            rng.gen_range(1..=10) as f64,
            rng.gen_range(1..=10) as f64,
            rng.gen_range(1..=10) as f64,
            10.0,
        )
        .unwrap();
        if !boxes
            .iter()
            .any(|x: &BoxType| x.dims == b.dims && x.max_weight == b.max_weight)
        {
            boxes.push(b);
        }
    }
    let pool = CandidatePool::new(boxes).unwrap();
    let delta = rng.gen_range(0..=4) as f64;
    let alpha = rng.gen_range(0..=4) as f64;
    let matrix = build_cost_matrix(&pool, delta, alpha);
    let weights: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 5.0).collect();
    let k = rng.gen_range(1..=3.min(n));
    SelectionProblem::from_cost_matrix(&matrix, weights, k).unwrap()
}

#[test]
fn heuristics_never_beat_the_oracle() {
    for seed in 0..120u64 {
        let p = if seed % 2 == 0 {
            random_problem(seed)
        } else {
            structured_problem(seed)
        };
        let optimum = solve_exhaustive(&p).unwrap();
        let greedy = solve_greedy(&p);
        let (em, _) = solve_em_with_trace(&p, None, 100, seed).unwrap();
        assert!(
            greedy.objective >= optimum.objective - 1e-12 * optimum.objective.abs(),
            "greedy {} beat oracle {}",
            greedy.objective,
            optimum.objective
        );
        assert!(
            em.objective >= optimum.objective - 1e-12 * optimum.objective.abs(),
            "EM {} beat oracle {}",
            em.objective,
            optimum.objective
        );
    }
}

#[test]
fn greedy_running_objective_is_non_increasing() {
    for seed in 0..60u64 {
        let p = random_problem(seed);
        let selection = solve_greedy(&p);
        let mut previous = f64::INFINITY;
        for rank in 0..selection.rows.len() {
            let step = objective(&p, &selection.rows[..=rank]).unwrap();
            assert!(step <= previous, "step objective rose: {step} > {previous}");
            previous = step;
        }
        assert_eq!(previous, selection.objective);
    }
}

#[test]
fn em_trace_is_non_increasing_and_bounded_by_max_iter() {
    for seed in 0..60u64 {
        let p = structured_problem(seed);
        let max_iter = 50;
        let (_, trace) = solve_em_with_trace(&p, None, max_iter, seed).unwrap();
        assert!(trace.len() <= max_iter + 1);
        for pair in trace.windows(2) {
            assert!(pair[1] <= pair[0], "EM objective rose: {pair:?}");
        }
    }
}

#[test]
fn greedy_matches_oracle_often_on_structured_instances() {
    let mut exact = 0u32;
    let total = 200u32;
    for seed in 0..total as u64 {
        let p = structured_problem(seed ^ 0x5151);
        let optimum = solve_exhaustive(&p).unwrap();
        let greedy = solve_greedy(&p);
        if (greedy.objective - optimum.objective).abs() <= 1e-12 * optimum.objective.abs() {
            exact += 1;
        }
    }
    let rate = exact as f64 / total as f64;
    assert!(rate >= 0.6, "greedy exact-optimum rate {rate:.3} below 60%");
}
