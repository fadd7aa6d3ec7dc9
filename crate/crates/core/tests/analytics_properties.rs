//! Property tests for the cost-matrix algebra and the effective-volume
//! conservation identity.

use boxassort::analytics::{
    build_cost_matrix, compute_weights, dominating_set, estimate_effective_volumes, neighbor_set,
    strictly_smaller_set, substitution_cost,
};
use boxassort::model::{BoxType, CandidatePool};
use boxassort::packer::pack_order;
use boxassort::synth::{random_catalog, random_orders};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_pool(n: usize, seed: u64) -> CandidatePool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut boxes = Vec::new();
    let mut attempt = 0;
    while boxes.len() < n {
        let b = BoxType::new(
            format!("p{seed}-{attempt}"),
            (rng.gen_range(1.0..12.0f64) * 4.0).round() / 4.0,
            (rng.gen_range(1.0..12.0f64) * 4.0).round() / 4.0,
            (rng.gen_range(1.0..12.0f64) * 4.0).round() / 4.0,
            10.0,
        )
        .unwrap();
        attempt += 1;
        let duplicate = boxes
            .iter()
            .any(|x: &BoxType| x.dims == b.dims && x.max_weight == b.max_weight);
        if !duplicate {
            boxes.push(b);
        }
    }
    CandidatePool::new(boxes).unwrap()
}

#[test]
fn cost_matrix_bounds_diagonal_and_precedence() {
    for seed in 0..60u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc0de);
        let n = rng.gen_range(2..20);
        let pool = random_pool(n, seed);
        let delta = rng.gen_range(0.0..4.0);
        let alpha = rng.gen_range(0.0..4.0);
        let matrix = build_cost_matrix(&pool, delta, alpha);

        for j in 0..n {
            assert_eq!(matrix.get(j, j), -1.0, "diagonal must be exactly -1");
            let dominating = dominating_set(j, &pool);
            let neighbors = neighbor_set(j, &pool, delta);
            let smaller = strictly_smaller_set(j, &pool);
            for i in 0..n {
                let c = matrix.get(i, j);
                assert!(
                    (-1.0..=0.0).contains(&c),
                    "c[{i}][{j}] = {c} out of [-1, 0]"
                );
                let ratio = pool[j].volume() / pool[i].volume();
                if dominating.contains(&i) {
                    // First case wins even when i also lies in S \ T.
                    assert_eq!(c, -ratio, "dominating case value");
                } else if neighbors.contains(&i) && !smaller.contains(&i) {
                    assert_eq!(c, -ratio / (ratio.ceil() + alpha));
                } else {
                    assert_eq!(c, 0.0);
                }
            }
        }
    }
}

#[test]
fn neighborhood_grows_with_delta() {
    for seed in 0..30u64 {
        let pool = random_pool(12, seed);
        for j in 0..pool.len() {
            let mut previous: Vec<usize> = Vec::new();
            for step in 0..5 {
                let delta = step as f64 * 0.75;
                let current = neighbor_set(j, &pool, delta);
                assert!(
                    previous.iter().all(|i| current.contains(i)),
                    "S_j must grow with delta"
                );
                previous = current;
            }
        }
    }
}

#[test]
fn neighborhood_cost_shrinks_with_alpha() {
    for seed in 0..30u64 {
        let pool = random_pool(12, seed);
        let delta = 2.0;
        for j in 0..pool.len() {
            let dominating = dominating_set(j, &pool);
            let neighbors = neighbor_set(j, &pool, delta);
            let smaller = strictly_smaller_set(j, &pool);
            for i in 0..pool.len() {
                if !neighbors.contains(&i) || smaller.contains(&i) || dominating.contains(&i) {
                    continue;
                }
                let mut previous = f64::INFINITY;
                for step in 0..6 {
                    let alpha = step as f64;
                    let magnitude = substitution_cost(i, j, &pool, delta, alpha).abs();
                    assert!(
                        magnitude <= previous,
                        "|c| must not increase with alpha: {magnitude} > {previous}"
                    );
                    previous = magnitude;
                }
            }
        }
    }
}

/// Conservation: the effective volumes sum to the packed item volume, where
/// the right-hand side is recomputed independently order by order.
#[test]
fn effective_volume_conservation() {
    for seed in 0..20u64 {
        let catalog = random_catalog(25, 0.5..6.0, 0.1..2.0, seed);
        let orders = random_orders("o", 40, &catalog, 4, 3, seed ^ 0xfeed);
        let pool = random_pool(15, seed ^ 0xbeef);
        let ev = estimate_effective_volumes(&orders, &pool).unwrap();
        let ev_total: f64 = ev.iter().sum();
        let packed_total: f64 = orders
            .iter()
            .map(|o| pack_order(o, pool.boxes()).packed_item_volume())
            .sum();
        let tolerance = 1e-9 * packed_total.max(1.0);
        assert!(
            (ev_total - packed_total).abs() <= tolerance,
            "EV sum {ev_total} vs packed volume {packed_total}"
        );
    }
}

/// Scaling all effective volumes by a positive constant scales every weight
/// by the same constant.
#[test]
fn weights_are_linear_in_effective_volume() {
    let pool = random_pool(10, 3);
    let ev: Vec<f64> = (0..10).map(|i| (i as f64 + 1.0) * 2.5).collect();
    let scaled_ev: Vec<f64> = ev.iter().map(|e| e * 3.75).collect();
    for rho in [0.25, 0.5, 1.0] {
        let w = compute_weights(&ev, &pool, rho).unwrap();
        let sw = compute_weights(&scaled_ev, &pool, rho).unwrap();
        for (a, b) in w.w.iter().zip(&sw.w) {
            assert!((b - a * 3.75).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }
}
